use std::f64::consts::PI;

use fracthj_core::fixtures::{random_field, random_trig_field};
use fracthj_core::torus::*;

fn ops(dim: usize, n: usize) -> SpectralOps {
    SpectralOps::new(TorusGrid::new(dim, n).unwrap())
}

#[test]
fn grid_validation() {
    assert!(TorusGrid::new(3, 16).is_err());
    assert!(TorusGrid::new(1, 6).is_err());
    assert!(TorusGrid::new(1, 15).is_err());
    let g = TorusGrid::new(2, 16).unwrap();
    assert_eq!(g.len(), 256);
    assert_eq!(g.point(17), [1.0 / 16.0, 1.0 / 16.0]);
}

#[test]
fn constant_transforms_to_mean_mode() {
    let o = ops(2, 16);
    let s = o.transform(&Field::constant(o.grid(), 2.5)).unwrap();
    assert!((s.coeffs[0].re - 2.5).abs() < 1e-15);
    assert!(s.coeffs[1..].iter().all(|c| c.norm() < 1e-15));
}

#[test]
fn cosine_has_half_coefficients() {
    let o = ops(1, 32);
    let f = Field::from_fn(o.grid(), |x| (2.0 * PI * x[0]).cos());
    let s = o.transform(&f).unwrap();
    for k in -16..16i64 {
        let want = if k.abs() == 1 { 0.5 } else { 0.0 };
        assert!((s.coeff([k, 0]).re - want).abs() < 1e-15 && s.coeff([k, 0]).im.abs() < 1e-15);
    }
}

#[test]
fn round_trip_and_parseval() {
    for (dim, n) in [(1, 64), (2, 32)] {
        let o = ops(dim, n);
        let f = random_field(o.grid(), 7);
        let s = o.transform(&f).unwrap();
        let back = o.inverse(&s).unwrap();
        assert!(back.max_abs_diff(&f).unwrap() <= 1e-13 * f.sup_norm());
        let energy: f64 = s.coeffs.iter().map(|c| c.norm_sqr()).sum();
        assert!((energy.sqrt() - f.l2_norm()).abs() < 1e-13);
        // Hermitian symmetry of a real field's spectrum
        for idx in 0..o.grid().len() {
            let k = o.grid().mode(idx);
            let a = s.coeff(k);
            let b = s.coeff([-k[0], -k[1]]);
            assert!((a - b.conj()).norm() < 1e-14);
        }
    }
}

#[test]
fn size_mismatch_rejected() {
    let o = ops(1, 16);
    let f = Field::zeros(TorusGrid::new(1, 32).unwrap());
    assert!(o.transform(&f).is_err());
    assert!(Field::new(o.grid(), vec![0.0; 3]).is_err());
}

#[test]
fn laplacian_eigenfunctions() {
    let o = ops(1, 32);
    let f = Field::from_fn(o.grid(), |x| (2.0 * PI * x[0]).cos());
    let l = o.laplacian_apply(&f, 1.0).unwrap();
    assert!(l.max_abs_diff(&f.scaled(-4.0 * PI * PI)).unwrap() < 1e-11);
    let c = o.laplacian_apply(&Field::constant(o.grid(), 3.0), 1.0).unwrap();
    assert!(c.sup_norm() < 1e-13);

    let o2 = ops(2, 16);
    let g = Field::from_fn(o2.grid(), |x| (2.0 * PI * x[0]).sin() + (4.0 * PI * x[1]).cos());
    let want = Field::from_fn(o2.grid(), |x| -4.0 * PI * PI * (2.0 * PI * x[0]).sin() - 16.0 * PI * PI * (4.0 * PI * x[1]).cos());
    assert!(o2.laplacian_apply(&g, 1.0).unwrap().max_abs_diff(&want).unwrap() < 1e-10);
    let half = o2.laplacian_apply(&g, 0.5).unwrap();
    assert!(half.max_abs_diff(&want.scaled(0.5)).unwrap() < 1e-10);
}

#[test]
fn gradient_and_divergence_basics() {
    let o = ops(1, 32);
    let f = Field::from_fn(o.grid(), |x| (2.0 * PI * x[0]).cos());
    let g = o.gradient(&f).unwrap();
    let want = Field::from_fn(o.grid(), |x| -2.0 * PI * (2.0 * PI * x[0]).sin());
    assert!(g[0].max_abs_diff(&want).unwrap() < 1e-12);

    let o2 = ops(2, 16);
    let c = vec![Field::constant(o2.grid(), 1.3), Field::constant(o2.grid(), -0.4)];
    assert!(o2.divergence(&c).unwrap().sup_norm() < 1e-14);
    assert!(o2.divergence(&c[..1]).is_err());
}

#[test]
fn div_grad_is_laplacian() {
    for (dim, n) in [(1, 64), (2, 32)] {
        let o = ops(dim, n);
        let f = random_field(o.grid(), 11);
        let dg = o.divergence(&o.gradient(&f).unwrap()).unwrap();
        let l = o.laplacian_apply(&f, 1.0).unwrap();
        assert!(dg.max_abs_diff(&l).unwrap() <= 1e-11, "d = {dim}");
    }
}

#[test]
fn bessel_norm_cases() {
    let o = ops(1, 32);
    let f = Field::from_fn(o.grid(), |x| (2.0 * PI * x[0]).cos());
    assert!((o.bessel_norm(&f, 0.0).unwrap() - f.l2_norm()).abs() < 1e-14);
    let want = (1.0 + 4.0 * PI * PI) / 2f64.sqrt();
    assert!((o.bessel_norm(&f, 2.0).unwrap() - want).abs() < 1e-12 * want);
    let r = random_trig_field(o.grid(), 5, 1.0, 3);
    let mut prev = 0.0;
    for i in 0..20 {
        let v = o.bessel_norm(&r, -1.0 + 0.25 * i as f64).unwrap();
        assert!(v >= prev);
        prev = v;
    }
}

#[test]
fn holder_seminorm_cases() {
    let g = TorusGrid::new(1, 64).unwrap();
    assert_eq!(holder_seminorm_grid(&Field::constant(g, 1.0), 0.5).unwrap(), 0.0);
    let f = Field::from_fn(g, |x| (2.0 * PI * x[0]).cos());
    let v = holder_seminorm_grid(&f, 1.0).unwrap();
    assert!((4.0..=2.0 * PI).contains(&v), "{v}");
    assert!(holder_seminorm_grid(&f, 0.0).is_err());
    assert!(holder_seminorm_grid(&f, 1.5).is_err());
    let g2 = TorusGrid::new(2, 16).unwrap();
    let f2 = Field::from_fn(g2, |x| (2.0 * PI * x[1]).cos());
    let v2 = holder_seminorm_grid(&f2, 1.0).unwrap();
    assert!((4.0..=2.0 * PI).contains(&v2), "{v2}");
}

#[test]
fn operators_commute_with_shifts() {
    for (dim, n) in [(1, 32), (2, 16)] {
        let o = ops(dim, n);
        let f = random_field(o.grid(), 5);
        for axis in 0..dim {
            let sf = f.shifted(axis, 1);
            let a = o.laplacian_apply(&sf, 0.7).unwrap();
            let b = o.laplacian_apply(&f, 0.7).unwrap().shifted(axis, 1);
            assert!(a.max_abs_diff(&b).unwrap() < 1e-10);
            let ga = o.gradient(&sf).unwrap();
            let gb = o.gradient(&f).unwrap();
            for j in 0..dim {
                assert!(ga[j].max_abs_diff(&gb[j].shifted(axis, 1)).unwrap() < 1e-10);
            }
            let da = o.divergence(&ga).unwrap();
            let db = o.divergence(&gb).unwrap().shifted(axis, 1);
            assert!(da.max_abs_diff(&db).unwrap() < 1e-9);
            let pa = o.map_dealiased(&[&sf], |v| v[0] * v[0]).unwrap();
            let pb = o.map_dealiased(&[&f], |v| v[0] * v[0]).unwrap().shifted(axis, 1);
            assert!(pa.max_abs_diff(&pb).unwrap() < 1e-12);
        }
    }
}

#[test]
fn dealiased_two_mode_product() {
    let o = ops(1, 16);
    let a = Field::from_fn(o.grid(), |x| (2.0 * PI * 5.0 * x[0]).cos());
    let b = Field::from_fn(o.grid(), |x| (2.0 * PI * 6.0 * x[0]).cos());
    // cos 10πx cos 12πx = (cos 2πx + cos 22πx)/2, and k = 11 is not resolved
    let want = Field::from_fn(o.grid(), |x| 0.5 * (2.0 * PI * x[0]).cos());
    let p = o.product_dealiased(&a, &b).unwrap();
    assert!(p.max_abs_diff(&want).unwrap() <= 1e-12);
    // the naive product folds k = 11 onto k = -5
    let naive = a.zip_map(&b, |x, y| x * y).unwrap();
    assert!(naive.max_abs_diff(&want).unwrap() > 0.4);
}

#[test]
fn dealiased_products_are_exact_on_resolved_modes_2d() {
    let o = ops(2, 16);
    let a = Field::from_fn(o.grid(), |x| (2.0 * PI * (2.0 * x[0] + x[1])).sin());
    let b = Field::from_fn(o.grid(), |x| (2.0 * PI * 3.0 * x[1]).cos());
    let want = a.zip_map(&b, |x, y| x * y).unwrap();
    assert!(o.product_dealiased(&a, &b).unwrap().max_abs_diff(&want).unwrap() < 1e-13);
}
