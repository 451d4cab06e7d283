use fracthj_core::frac_calc::*;
use fracthj_core::mittag_leffler::gamma_fn;
use proptest::prelude::*;

fn g(x: f64) -> f64 {
    gamma_fn(x).unwrap()
}

fn slope(hs: &[f64], errs: &[f64]) -> f64 {
    let n = hs.len() as f64;
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn l1_weights_small_case() {
    let w = l1_weights(0.5, 3).unwrap();
    let want = [1.0, 2f64.sqrt() - 1.0, 3f64.sqrt() - 2f64.sqrt()];
    for (a, b) in w.coefficients.iter().zip(want) {
        assert!((a - b).abs() < 1e-15);
    }
    assert!((w.coefficients[1] - 0.41421).abs() < 1e-5);
    assert!((w.coefficients[2] - 0.31784).abs() < 1e-5);
}

#[test]
fn l1_weights_invariants() {
    for beta in [0.01, 0.3, 0.5, 0.9, 0.999] {
        let w = l1_weights(beta, 200).unwrap();
        assert_eq!(w.coefficients[0], 1.0);
        assert!(w.coefficients.iter().all(|&b| b > 0.0));
        assert!(w.coefficients.windows(2).all(|p| p[1] < p[0]));
    }
}

#[test]
fn l1_weights_small_order_tends_to_one() {
    let w = l1_weights(1e-10, 50).unwrap();
    assert!(w.coefficients.iter().all(|&b| (b - 1.0).abs() < 1e-8));
}

#[test]
fn l1_weights_reject_bad_order() {
    for beta in [0.0, 1.0, -0.2, 1.5, f64::NAN] {
        assert!(l1_weights(beta, 4).is_err());
    }
    assert!(TimeGrid::uniform(1.0, 4, 1.0).is_err());
}

#[test]
fn time_grid_invariants() {
    let g = TimeGrid::graded(2.0, 16, 0.6, 2.5).unwrap();
    assert_eq!(g.nodes()[0], 0.0);
    assert_eq!(*g.nodes().last().unwrap(), 2.0);
    assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
    let u = TimeGrid::uniform(2.0, 16, 0.6).unwrap();
    assert!(u.is_uniform());
    for n in 0..16 {
        assert!((u.dt(n) - 0.125).abs() < 1e-15);
    }
    assert!(TimeGrid::graded(1.0, 4, 0.5, 0.5).is_err());
    assert!(TimeGrid::uniform(-1.0, 4, 0.5).is_err());
    assert!(TimeGrid::uniform(1.0, 0, 0.5).is_err());
}

#[test]
fn caputo_of_constant_vanishes() {
    let grid = TimeGrid::graded(1.0, 40, 0.3, 2.0).unwrap();
    let u = TimeSeries::from_fn(&grid, |_| 4.2);
    let d = caputo_forward(&u, 0.3).unwrap();
    assert!(d.values[0].is_none());
    assert!(d.values[1..].iter().all(|v| v.unwrap() == 0.0));
    let b = caputo_backward(&u, 0.3, 30).unwrap();
    assert!(b.values[30].is_none());
    assert!(b.values[..30].iter().all(|v| v.unwrap() == 0.0));
}

#[test]
fn caputo_exact_on_linear_data() {
    for grid in [TimeGrid::uniform(2.0, 50, 0.5).unwrap(), TimeGrid::graded(2.0, 50, 0.5, 3.0).unwrap()] {
        let u = TimeSeries::from_fn(&grid, |t| t);
        let d = caputo_forward(&u, 0.5).unwrap();
        for (t, v) in grid.nodes().iter().zip(&d.values).skip(1) {
            let want = t.sqrt() / g(1.5);
            assert!((v.unwrap() - want).abs() <= 1e-13 * want.max(1.0));
        }
    }
}

#[test]
fn backward_caputo_of_reversed_ramp() {
    let grid = TimeGrid::uniform(1.0, 64, 0.5).unwrap();
    let tau_index = 48;
    let tau = grid.nodes()[tau_index];
    let v = TimeSeries::from_fn(&grid, |t| tau - t);
    let d = caputo_backward(&v, 0.5, tau_index).unwrap();
    for i in 0..tau_index {
        let want = (tau - grid.nodes()[i]).sqrt() / g(1.5);
        assert!((d.values[i].unwrap() - want).abs() < 1e-13);
    }
}

#[test]
fn caputo_power_rule_quadratic_order() {
    for beta in [0.3, 0.5, 0.7, 0.9] {
        let ms = [128usize, 256, 512, 1024];
        let mut errs = Vec::new();
        for &m in &ms {
            let grid = TimeGrid::uniform(1.0, m, beta).unwrap();
            let u = TimeSeries::from_fn(&grid, |t| t * t);
            let d = caputo_forward(&u, beta).unwrap();
            let c = 2.0 / g(3.0 - beta);
            let err = grid
                .nodes()
                .iter()
                .zip(&d.values)
                .skip(1)
                .map(|(t, v)| (v.unwrap() - c * t.powf(2.0 - beta)).abs())
                .fold(0.0, f64::max);
            errs.push(err);
        }
        let hs: Vec<f64> = ms.iter().map(|&m| 1.0 / m as f64).collect();
        let p = slope(&hs, &errs);
        assert!((p - (2.0 - beta)).abs() <= 0.15, "beta = {beta}: order {p}");
    }
}

#[test]
fn rl_integral_of_one() {
    let beta = 0.35;
    let grid = TimeGrid::graded(1.5, 30, beta, 1.8).unwrap();
    let u = TimeSeries::from_fn(&grid, |_| 1.0);
    for method in [RlMethod::Trapezoid, RlMethod::Rectangle] {
        let i = rl_integral(&u, 1.0 - beta, Direction::Forward, method).unwrap();
        for (t, v) in grid.nodes().iter().zip(&i.values) {
            let want = t.powf(1.0 - beta) / g(2.0 - beta);
            assert!((v - want).abs() < 1e-13, "{method:?} t = {t}");
        }
    }
}

#[test]
fn rl_integral_of_zero_and_bad_order() {
    let grid = TimeGrid::uniform(1.0, 8, 0.5).unwrap();
    let u = TimeSeries::from_fn(&grid, |_| 0.0);
    let i = rl_integral(&u, 0.5, Direction::Backward, RlMethod::Trapezoid).unwrap();
    assert!(i.values.iter().all(|&v| v == 0.0));
    assert!(rl_integral(&u, 1.0, Direction::Forward, RlMethod::Trapezoid).is_err());
    assert!(rl_integral(&u, 0.0, Direction::Forward, RlMethod::Trapezoid).is_err());
}

#[test]
fn rl_integral_of_power_matches_quadrature_oracle() {
    // I^{1-β}[s^β](t) from adaptive quadrature of the singular kernel
    let cases = [
        (0.4, 0.5, 0.443631908751537644005926005745),
        (0.4, 1.0, 0.887263817503075288011852011491),
        (0.7, 0.5, 0.454319366403460802960378576928),
        (0.7, 1.0, 0.908638732806921605920757153856),
    ];
    for (beta, t, want) in cases {
        let grid = TimeGrid::graded(t, 400, beta, 2.0).unwrap();
        let u = TimeSeries::from_fn(&grid, |s| s.powf(beta));
        let i = rl_integral(&u, 1.0 - beta, Direction::Forward, RlMethod::Trapezoid).unwrap();
        assert!((i.last() - want).abs() < 1e-5, "beta = {beta}, t = {t}: {}", i.last());
    }
}

#[test]
fn rl_backward_is_mirror_of_forward() {
    let grid = TimeGrid::uniform(1.0, 20, 0.5).unwrap();
    let u = TimeSeries::from_fn(&grid, |t| (3.0 * t).sin() + t);
    let b = rl_integral(&u, 0.6, Direction::Backward, RlMethod::Trapezoid).unwrap();
    let f = rl_integral(&u.reversed(20).unwrap(), 0.6, Direction::Forward, RlMethod::Trapezoid).unwrap();
    for i in 0..=20 {
        assert_eq!(b.values[i], f.values[20 - i]);
    }
}

#[test]
fn volterra_composition_recovers_increment() {
    let beta = 0.6;
    let mut errs = Vec::new();
    for m in [64usize, 128, 256] {
        let grid = TimeGrid::uniform(1.0, m, beta).unwrap();
        let u = TimeSeries::from_fn(&grid, |t| (2.0 * t).cos() + t * t);
        let d = caputo_forward(&u, beta).unwrap();
        let d = TimeSeries::new(grid.clone(), d.values.iter().map(|v| v.unwrap_or(0.0)).collect()).unwrap();
        let back = rl_integral(&d, beta, Direction::Forward, RlMethod::Trapezoid).unwrap();
        let err = (0..=m).map(|n| (back.values[n] - (u.values[n] - u.values[0])).abs()).fold(0.0, f64::max);
        errs.push(err);
    }
    assert!(errs[2] < errs[1] && errs[1] < errs[0], "{errs:?}");
    assert!(errs[2] < 1e-3);
}

#[test]
fn integration_by_parts_constants() {
    let grid = TimeGrid::uniform(1.7, 40, 0.45).unwrap();
    let u = TimeSeries::from_fn(&grid, |_| 2.0);
    let v = TimeSeries::from_fn(&grid, |_| -0.7);
    assert!(integration_by_parts_residual(&u, &v, 0.45).unwrap() < 1e-13);
}

#[test]
fn integration_by_parts_ramp_refinement() {
    // u and v are mirror images of each other, so both sides are assembled
    // from identical discrete pieces
    let tau = 1.0;
    for m in [32usize, 64, 128] {
        let grid = TimeGrid::uniform(tau, m, 0.5).unwrap();
        let u = TimeSeries::from_fn(&grid, |t| t);
        let v = TimeSeries::from_fn(&grid, |t| tau - t);
        assert!(integration_by_parts_residual(&u, &v, 0.5).unwrap() < 1e-13);
    }
}

#[test]
fn integration_by_parts_asymmetric_refinement() {
    let ms = [32usize, 64, 128];
    let mut res = Vec::new();
    for &m in &ms {
        let grid = TimeGrid::uniform(1.0, m, 0.5).unwrap();
        let u = TimeSeries::from_fn(&grid, |t| t);
        let v = TimeSeries::from_fn(&grid, |t| 1.0 + t * t);
        res.push(integration_by_parts_residual(&u, &v, 0.5).unwrap());
    }
    let hs: Vec<f64> = ms.iter().map(|&m| 1.0 / m as f64).collect();
    assert!(res.windows(2).all(|w| w[1] < w[0]), "{res:?}");
    assert!(slope(&hs, &res) >= 1.0, "{res:?}");
}

#[test]
fn integration_by_parts_trig_refinement() {
    let u_fn = |t: f64| 0.3 + (2.0 * t).sin() - 0.5 * (5.0 * t).cos();
    let v_fn = |t: f64| 1.0 + 0.2 * (3.0 * t).cos() + 0.1 * t.sin();
    let mut res = Vec::new();
    for m in [32usize, 64, 128, 256] {
        let grid = TimeGrid::uniform(1.2, m, 0.7).unwrap();
        let u = TimeSeries::from_fn(&grid, u_fn);
        let v = TimeSeries::from_fn(&grid, v_fn);
        res.push(integration_by_parts_residual(&u, &v, 0.7).unwrap());
    }
    assert!(res.windows(2).all(|w| w[1] < w[0]), "{res:?}");
}

#[test]
fn integration_by_parts_rejects_mismatched_grids() {
    let a = TimeGrid::uniform(1.0, 8, 0.5).unwrap();
    let b = TimeGrid::uniform(1.0, 9, 0.5).unwrap();
    let u = TimeSeries::from_fn(&a, |t| t);
    let v = TimeSeries::from_fn(&b, |t| t);
    assert!(integration_by_parts_residual(&u, &v, 0.5).is_err());
}

proptest! {
    #[test]
    fn caputo_is_linear(vals in prop::collection::vec(-5.0f64..5.0, 17), ws in prop::collection::vec(-5.0f64..5.0, 17),
                        a in -3.0f64..3.0, b in -3.0f64..3.0, beta in 0.05f64..0.95) {
        let grid = TimeGrid::graded(1.0, 16, beta, 1.5).unwrap();
        let u = TimeSeries::new(grid.clone(), vals.clone()).unwrap();
        let w = TimeSeries::new(grid.clone(), ws.clone()).unwrap();
        let mix = TimeSeries::new(grid.clone(), vals.iter().zip(&ws).map(|(x, y)| a * x + b * y).collect()).unwrap();
        let (du, dw, dm) = (caputo_forward(&u, beta).unwrap(), caputo_forward(&w, beta).unwrap(), caputo_forward(&mix, beta).unwrap());
        for n in 1..=16 {
            let lin = a * du.values[n].unwrap() + b * dw.values[n].unwrap();
            let scale = 1.0 + lin.abs() + du.values[n].unwrap().abs() + dw.values[n].unwrap().abs();
            prop_assert!((dm.values[n].unwrap() - lin).abs() <= 1e-12 * scale * 10.0);
        }
    }

    #[test]
    fn backward_equals_forward_of_reversal(vals in prop::collection::vec(-5.0f64..5.0, 25), beta in 0.05f64..0.95, tau in 5usize..24) {
        let grid = TimeGrid::graded(2.0, 24, beta, 2.0).unwrap();
        let v = TimeSeries::new(grid, vals).unwrap();
        let back = caputo_backward(&v, beta, tau).unwrap();
        let fwd = caputo_forward(&v.reversed(tau).unwrap(), beta).unwrap();
        for i in 0..=tau {
            prop_assert_eq!(back.values[i], fwd.values[tau - i]);
        }
    }
}
