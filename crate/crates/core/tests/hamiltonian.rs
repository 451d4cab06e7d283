use std::f64::consts::PI;
use std::sync::Arc;

use fracthj_core::hamiltonian::*;
use fracthj_core::torus::{Field, SpectralOps, TorusGrid};

fn grid1() -> TorusGrid {
    TorusGrid::new(1, 32).unwrap()
}

fn quadratic(h: f64) -> Hamiltonian {
    make_hamiltonian(HamiltonianSpec::Quadratic { coefficient: Field::constant(grid1(), h) }).unwrap()
}

fn power(gamma: f64, coefficient: Field) -> Hamiltonian {
    make_hamiltonian(HamiltonianSpec::Power { gamma, coefficient }).unwrap()
}

fn zero_custom(grid: TorusGrid) -> Hamiltonian {
    make_hamiltonian(HamiltonianSpec::Custom {
        gamma: 2.0,
        coefficient: Field::constant(grid, 1.0),
        phi: Arc::new(|_| 0.0),
        grad_phi: Arc::new(|_| [0.0, 0.0]),
    })
    .unwrap()
}

#[test]
fn quadratic_values() {
    let h = quadratic(1.0);
    assert_eq!(h.value(3, &[1.0]), 1.0);
    assert_eq!(h.grad_p(3, &[1.0])[0], 2.0);
    let g2 = TorusGrid::new(2, 8).unwrap();
    let h2 = make_hamiltonian(HamiltonianSpec::Quadratic { coefficient: Field::constant(g2, 1.0) }).unwrap();
    assert_eq!(h2.value(0, &[1.0, 0.0]), 1.0);
    assert_eq!(h2.grad_p(0, &[1.0, 0.0]), [2.0, 0.0]);
}

#[test]
fn power_two_is_quadratic() {
    let p2 = power(2.0, Field::constant(grid1(), 1.0));
    let q = quadratic(1.0);
    for p in [-3.0, -0.4, 0.0, 0.7, 5.0] {
        assert!((p2.value(0, &[p]) - q.value(0, &[p])).abs() < 1e-12 * (1.0 + p * p));
        assert!((p2.grad_p(0, &[p])[0] - q.grad_p(0, &[p])[0]).abs() < 1e-12 * (1.0 + p.abs()));
    }
}

#[test]
fn vanishes_at_zero_momentum() {
    let coef = Field::from_fn(grid1(), |x| 1.5 + (2.0 * PI * x[0]).sin());
    for h in [quadratic(0.3), power(3.0, coef.clone()), power(1.5, coef), zero_custom(grid1())] {
        for idx in 0..grid1().len() {
            assert_eq!(h.value(idx, &[0.0]), 0.0);
            assert_eq!(h.grad_p(idx, &[0.0]), [0.0, 0.0]);
        }
    }
}

#[test]
fn gradient_matches_finite_differences() {
    let g2 = TorusGrid::new(2, 16).unwrap();
    let coef = Field::from_fn(g2, |x| 1.2 + 0.5 * (2.0 * PI * x[0]).cos() * (2.0 * PI * x[1]).sin());
    let hams = [
        make_hamiltonian(HamiltonianSpec::Quadratic { coefficient: coef.clone() }).unwrap(),
        make_hamiltonian(HamiltonianSpec::Power { gamma: 3.0, coefficient: coef.clone() }).unwrap(),
        make_hamiltonian(HamiltonianSpec::Power { gamma: 1.4, coefficient: coef }).unwrap(),
    ];
    for h in &hams {
        for (i, p) in [[0.3, -1.2], [2.0, 0.5], [-4.0, 3.0], [0.01, 0.02]].iter().enumerate() {
            let idx = 37 * i + 5;
            let g = h.grad_p(idx, p);
            for j in 0..2 {
                let eps = 1e-6 * (1.0 + p[j].abs());
                let mut a = *p;
                let mut b = *p;
                a[j] += eps;
                b[j] -= eps;
                let fd = (h.value(idx, &a) - h.value(idx, &b)) / (2.0 * eps);
                assert!((fd - g[j]).abs() <= 1e-6 * g[j].abs().max(1.0), "{:?} p={p:?}: {fd} vs {}", h.kind(), g[j]);
            }
        }
    }
}

#[test]
fn x_derivatives_follow_coefficient() {
    let coef = Field::from_fn(grid1(), |x| 2.0 + (2.0 * PI * x[0]).cos());
    let h = power(3.0, coef);
    let p = [1.5];
    let phi = (1.0f64 + 2.25).powf(1.5) - 1.0;
    for idx in [0, 5, 17] {
        let x = idx as f64 / 32.0;
        let hx = -2.0 * PI * (2.0 * PI * x).sin();
        let hxx = -4.0 * PI * PI * (2.0 * PI * x).cos();
        assert!((h.grad_x(idx, &p)[0] - hx * phi).abs() < 1e-9 * phi);
        assert!((h.hess_xx(idx, &p)[0][0] - hxx * phi).abs() < 1e-8 * phi);
        assert!((h.hess_px(idx, &p)[0][0] - hx * h.grad_phi(&p)[0]).abs() < 1e-9 * phi);
    }
}

#[test]
fn construction_errors() {
    let g = grid1();
    assert!(make_hamiltonian(HamiltonianSpec::Quadratic { coefficient: Field::constant(g, 0.0) }).is_err());
    let neg = Field::from_fn(g, |x| (2.0 * PI * x[0]).cos());
    assert!(make_hamiltonian(HamiltonianSpec::Power { gamma: 3.0, coefficient: neg }).is_err());
    assert!(make_hamiltonian(HamiltonianSpec::Power { gamma: 1.0, coefficient: Field::constant(g, 1.0) }).is_err());
    let shifted = HamiltonianSpec::Custom {
        gamma: 2.0,
        coefficient: Field::constant(g, 1.0),
        phi: Arc::new(|p| 1.0 + p[0] * p[0]),
        grad_phi: Arc::new(|p| [2.0 * p[0], 0.0]),
    };
    assert!(make_hamiltonian(shifted).is_err());
}

#[test]
fn quadratic_unit_coefficient_report() {
    let r = check_structural_assumptions(&quadratic(1.0), 400).unwrap();
    let h1 = r.condition("H1").unwrap();
    assert!((h1.constant - 1.0).abs() < 1e-12, "{h1:?}");
    assert!(h1.offset < 1e-12);
    assert!(r.all_satisfied(), "{r:?}");
    assert!((r.c_h - 1.0).abs() < 1e-6);
}

#[test]
fn zero_hamiltonian_violates_h1() {
    let r = check_structural_assumptions(&zero_custom(grid1()), 200).unwrap();
    let h1 = r.condition("H1").unwrap();
    assert!(!h1.satisfied);
    assert!(h1.margin <= 0.0);
    assert!(!r.all_satisfied());
}

#[test]
fn power_three_report_is_feasible() {
    let g2 = TorusGrid::new(2, 16).unwrap();
    for coef in [Field::constant(g2, 1.0), Field::from_fn(g2, |x| 1.0 + 0.3 * (2.0 * PI * x[0]).sin())] {
        let h = make_hamiltonian(HamiltonianSpec::Power { gamma: 3.0, coefficient: coef }).unwrap();
        let r = check_structural_assumptions(&h, 500).unwrap();
        assert!(r.all_satisfied(), "{r:?}");
        assert!(r.c_h > 0.0 && r.c_tilde_h.is_finite() && r.c_h_lower.is_finite());
        for c in &r.conditions {
            assert!(c.margin.is_finite() && c.constant.is_finite() && c.offset >= 0.0);
        }
    }
}

#[test]
fn concave_profile_violates_convexity() {
    // bounded profile: no superlinear growth, H5 fails
    let h = make_hamiltonian(HamiltonianSpec::Custom {
        gamma: 2.0,
        coefficient: Field::constant(grid1(), 1.0),
        phi: Arc::new(|p| p[0] * p[0] / (1.0 + p[0] * p[0])),
        grad_phi: Arc::new(|p| [2.0 * p[0] / (1.0 + p[0] * p[0]).powi(2), 0.0]),
    })
    .unwrap();
    let r = check_structural_assumptions(&h, 300).unwrap();
    assert!(!r.condition("H1").unwrap().satisfied);
    assert!(!r.condition("H5").unwrap().satisfied);
}

#[test]
fn too_few_samples_rejected() {
    assert!(check_structural_assumptions(&quadratic(1.0), 50).is_err());
}

#[test]
fn dealiased_evaluation_of_quadratic_is_exact() {
    let g = grid1();
    let ops = SpectralOps::new(g);
    let h = quadratic(0.5);
    let u = Field::from_fn(g, |x| (2.0 * PI * 3.0 * x[0]).sin());
    let du = ops.gradient(&u).unwrap();
    let got = h.eval_dealiased(&ops, &du).unwrap();
    let want = Field::from_fn(g, |x| 0.5 * (6.0 * PI).powi(2) * (6.0 * PI * x[0]).cos().powi(2));
    assert!(got.max_abs_diff(&want).unwrap() < 1e-11);
    assert!(h.eval_pointwise(&du).max_abs_diff(&want).unwrap() < 1e-11);
}
