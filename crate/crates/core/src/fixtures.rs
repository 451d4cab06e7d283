//! Seeded test data: random trigonometric fields and smooth approximations
//! of point masses.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::frac_calc::{TimeGrid, TimeSeries};
use crate::hamiltonian::Hamiltonian;
use crate::hj::HjProblem;
use crate::linear::SpaceTimeField;
use crate::mittag_leffler::gamma;
use crate::torus::{Field, TorusGrid};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent uniform samples in [-1, 1].
pub fn random_field(grid: TorusGrid, seed: u64) -> Field {
    let mut r = rng(seed);
    let values = (0..grid.len()).map(|_| r.gen_range(-1.0..=1.0)).collect();
    Field::new(grid, values).expect("finite samples")
}

/// Σ_{|k_j| ≤ max_mode} (a_k cos 2πk·x + b_k sin 2πk·x) / (1 + |k|²) with
/// a_k, b_k uniform in [-1, 1], rescaled to sup norm `amplitude`.
pub fn random_trig_field(grid: TorusGrid, max_mode: i64, amplitude: f64, seed: u64) -> Field {
    let mut r = rng(seed);
    let ky = if grid.dim() == 2 { max_mode } else { 0 };
    let mut terms = Vec::new();
    for k0 in 0..=max_mode {
        for k1 in -ky..=ky {
            if k0 == 0 && k1 < 0 {
                continue;
            }
            let decay = 1.0 / (1.0 + (k0 * k0 + k1 * k1) as f64);
            let a: f64 = r.gen_range(-1.0..=1.0);
            let b: f64 = r.gen_range(-1.0..=1.0);
            terms.push((k0 as f64, k1 as f64, a * decay, b * decay));
        }
    }
    let f = Field::from_fn(grid, |x| {
        terms
            .iter()
            .map(|&(k0, k1, a, b)| {
                let ph = 2.0 * PI * (k0 * x[0] + k1 * x[1]);
                a * ph.cos() + b * ph.sin()
            })
            .sum()
    });
    let s = f.sup_norm();
    if s > 0.0 {
        f.scaled(amplitude / s)
    } else {
        f
    }
}

/// Periodic von Mises bump of unit mass centred at `center`:
/// proportional to exp(κ Σ_j (cos 2π(x_j - c_j) - 1)) with κ = 1/(2π width)².
pub fn dirac_bump(grid: TorusGrid, center: [f64; 2], width: f64) -> Result<Field> {
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::invalid(format!("bump width must be positive, got {width}")));
    }
    let kappa = 1.0 / (2.0 * PI * width).powi(2);
    let dim = grid.dim();
    let f = Field::from_fn(grid, |x| {
        let s: f64 = (0..dim).map(|j| (2.0 * PI * (x[j] - center[j])).cos() - 1.0).sum();
        (kappa * s).exp()
    });
    let mass = f.integral();
    Ok(f.scaled(1.0 / mass))
}

/// HJ problem with exact solution u*(x, t) = t^β cos 2πx₁ and u₀ = 0:
/// V = Γ(1+β) cos 2πx₁ + 4π²σ t^β cos 2πx₁ + H(x, -2π t^β sin 2πx₁ e₁).
pub fn manufactured_hj(tgrid: TimeGrid, sigma: f64, hamiltonian: Hamiltonian) -> (HjProblem, SpaceTimeField) {
    let grid = hamiltonian.coefficient().grid();
    let beta = tgrid.beta();
    let g = gamma(1.0 + beta);
    let c = |x: [f64; 2]| (2.0 * PI * x[0]).cos();
    let v = TimeSeries::from_fn(&tgrid, |t| {
        let tb = t.powf(beta);
        let mut p = vec![Field::from_fn(grid, |x| -2.0 * PI * tb * (2.0 * PI * x[0]).sin())];
        if grid.dim() == 2 {
            p.push(Field::zeros(grid));
        }
        let h = hamiltonian.eval_pointwise(&p);
        Field::from_fn(grid, |x| (g + 4.0 * PI * PI * sigma * tb) * c(x)).zip_map(&h, |a, b| a + b).expect("same grid")
    });
    let exact = TimeSeries::from_fn(&tgrid, |t| Field::from_fn(grid, |x| t.powf(beta) * c(x)));
    let p = HjProblem::new(tgrid, sigma, hamiltonian, Field::zeros(grid)).with_potential(v);
    (p, exact)
}
