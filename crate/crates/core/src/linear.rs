//! Linear time-fractional heat/advection problems
//!
//! ∂^β u - σΔu + b·Du = F,  u(0) = u₀
//!
//! on the torus. Two independent solvers: the Mittag-Leffler (Duhamel)
//! propagator for b = 0, and L1 time stepping with implicit diffusion and
//! lagged drift.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::frac_calc::{L1Stencil, TimeGrid, TimeSeries};
use crate::mittag_leffler::{gamma, ml_neg};
use crate::torus::{Field, SpectralField, SpectralOps, TorusGrid};

pub type SpaceTimeField = TimeSeries<Field>;
/// A time-dependent vector field: one component per spatial direction at each node.
pub type VectorSeries = TimeSeries<Vec<Field>>;

const C0: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone)]
pub struct LinearProblem {
    pub tgrid: TimeGrid,
    pub sigma: f64,
    pub u0: Field,
    /// F at the time nodes; `None` means F = 0.
    pub source: Option<SpaceTimeField>,
    pub drift: Option<VectorSeries>,
}

impl LinearProblem {
    pub fn new(tgrid: TimeGrid, sigma: f64, u0: Field) -> Self {
        LinearProblem { tgrid, sigma, u0, source: None, drift: None }
    }

    pub fn with_source(mut self, source: SpaceTimeField) -> Self {
        self.source = Some(source);
        self
    }

    pub fn with_drift(mut self, drift: VectorSeries) -> Self {
        self.drift = Some(drift);
        self
    }

    pub fn grid(&self) -> TorusGrid {
        self.u0.grid()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid(format!("diffusivity must be positive, got {}", self.sigma)));
        }
        let grid = self.grid();
        if let Some(f) = &self.source {
            check_series(&self.tgrid, grid, f, "source")?;
        }
        if let Some(b) = &self.drift {
            if !self.tgrid.same_nodes(&b.grid) || b.len() != self.tgrid.steps() + 1 {
                return Err(Error::mismatch("drift is not sampled on the problem's time grid"));
            }
            for v in &b.values {
                if v.len() != grid.dim() || v.iter().any(|c| c.grid() != grid) {
                    return Err(Error::mismatch("drift components do not match the torus grid"));
                }
            }
        }
        Ok(())
    }

    /// sup |F| over all nodes, 0 without a source.
    pub fn source_sup(&self) -> f64 {
        self.source.as_ref().map_or(0.0, |f| f.values.iter().map(Field::sup_norm).fold(0.0, f64::max))
    }
}

pub(crate) fn check_series(tgrid: &TimeGrid, grid: TorusGrid, s: &SpaceTimeField, what: &str) -> Result<()> {
    if !tgrid.same_nodes(&s.grid) || s.len() != tgrid.steps() + 1 {
        return Err(Error::mismatch(format!("{what} is not sampled on the problem's time grid")));
    }
    if s.values.iter().any(|f| f.grid() != grid) {
        return Err(Error::mismatch(format!("{what} does not live on the problem's torus grid")));
    }
    Ok(())
}

fn transform_series(ops: &SpectralOps, s: &SpaceTimeField) -> Result<Vec<SpectralField>> {
    s.values.iter().map(|f| ops.transform(f)).collect()
}

pub(crate) fn assemble(tgrid: &TimeGrid, ops: &SpectralOps, modes: Vec<Vec<Complex64>>) -> Result<SpaceTimeField> {
    let grid = ops.grid();
    let values = modes
        .into_iter()
        .map(|c| {
            let mut s = SpectralField::zeros(grid);
            s.coeffs = c;
            ops.inverse(&s)
        })
        .collect::<Result<Vec<_>>>()?;
    TimeSeries::new(tgrid.clone(), values)
}

/// Duhamel product-integration kernels for one decay rate λ:
/// K1(ω) = ω^β E_{β,β+1}(-λω^β) and K2(ω) = ω^{β+1} E_{β,β+2}(-λω^β),
/// the first and second antiderivatives of ω^{β-1} E_{β,β}(-λω^β).
pub(crate) fn duhamel_kernels(beta: f64, lambda: f64, w: f64) -> (f64, f64) {
    if w == 0.0 {
        return (0.0, 0.0);
    }
    let wb = w.powf(beta);
    if lambda == 0.0 {
        return (wb / gamma(beta + 1.0), wb * w / gamma(beta + 2.0));
    }
    let x = lambda * wb;
    (wb * ml_neg(beta, beta + 1.0, x), wb * w * ml_neg(beta, beta + 2.0, x))
}

/// Mittag-Leffler propagator for b = 0. Per Fourier mode,
///
/// û(t) = E_β(-λt^β) û₀ + ∫_0^t ω^{β-1} E_{β,β}(-λω^β) f̂(t-ω) dω,  λ = 4π²σ|k|²,
///
/// with f̂ interpolated linearly between nodes and the integral evaluated
/// exactly for that interpolant.
pub fn solve_heat_mild(p: &LinearProblem) -> Result<SpaceTimeField> {
    p.validate()?;
    if p.drift.is_some() {
        return Err(Error::invalid("the Mittag-Leffler propagator needs b = 0; use solve_heat_l1 for drift"));
    }
    let grid = p.grid();
    let ops = SpectralOps::new(grid);
    let tg = &p.tgrid;
    let t = tg.nodes();
    let m = tg.steps();
    let beta = tg.beta();
    let u0 = ops.transform(&p.u0)?;
    let f = p.source.as_ref().map(|s| transform_series(&ops, s)).transpose()?;

    let mut groups: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (idx, lam) in grid.laplacian_symbol().into_iter().enumerate() {
        let active = u0.coeffs[idx] != C0 || f.as_ref().is_some_and(|f| f.iter().any(|s| s.coeffs[idx] != C0));
        if active {
            groups.entry((p.sigma * lam).to_bits()).or_default().push(idx);
        }
    }

    let mut out = vec![vec![C0; grid.len()]; m + 1];
    for (bits, idxs) in groups {
        let lambda = f64::from_bits(bits);
        let decay: Vec<f64> = t.iter().map(|&tn| ml_neg(beta, 1.0, lambda * tn.powf(beta))).collect();
        for &idx in &idxs {
            for n in 0..=m {
                out[n][idx] = u0.coeffs[idx] * decay[n];
            }
        }
        let Some(f) = &f else { continue };
        let uniform = tg.is_uniform();
        let table: Vec<(f64, f64)> = if uniform {
            let h = tg.t_final() / m as f64;
            (0..=m).map(|k| duhamel_kernels(beta, lambda, k as f64 * h)).collect()
        } else {
            Vec::new()
        };
        for n in 1..=m {
            // kernels at ω = t_n - t_j, j = 0..n
            let k: Vec<(f64, f64)> = if uniform {
                (0..=n).map(|j| table[n - j]).collect()
            } else {
                (0..=n).map(|j| duhamel_kernels(beta, lambda, t[n] - t[j])).collect()
            };
            let mut wts = vec![0.0; n + 1];
            for j in 0..n {
                let h = t[j + 1] - t[j];
                let (k1b, k2b) = k[j];
                let (k1a, k2a) = k[j + 1];
                let mean = (k2b - k2a) / h;
                wts[j] += k1b - mean;
                wts[j + 1] += mean - k1a;
            }
            for &idx in &idxs {
                let acc: Complex64 = wts.iter().enumerate().map(|(j, w)| f[j].coeffs[idx] * w).sum();
                out[n][idx] += acc;
            }
        }
    }
    assemble(tg, &ops, out)
}

/// L1 time stepping in Fourier space: each step solves
/// a_{n,n-1}(û_n - û_{n-1}) + hist_n + λ û_n = r̂_n for û_n.
#[derive(Debug, Clone)]
pub(crate) struct SpectralL1 {
    stencil: L1Stencil,
    lambda: Vec<f64>,
    states: Vec<Vec<Complex64>>,
}

impl SpectralL1 {
    pub(crate) fn new(tgrid: &TimeGrid, lambda: Vec<f64>) -> Self {
        SpectralL1 { stencil: L1Stencil::new(tgrid), lambda, states: Vec::new() }
    }

    /// Appends a state that is already known (initial data or a frozen prefix).
    pub(crate) fn push(&mut self, state: Vec<Complex64>) {
        self.states.push(state);
    }

    pub(crate) fn truncate(&mut self, len: usize) {
        self.states.truncate(len);
    }

    /// Computes and appends the state at the next node for right-hand side r̂.
    pub(crate) fn advance(&mut self, rhs: &[Complex64]) -> &[Complex64] {
        let n = self.states.len();
        debug_assert!(n >= 1);
        let d = self.stencil.diag(n);
        let prev = &self.states[n - 1];
        let mut next: Vec<Complex64> = (0..prev.len())
            .map(|k| d * prev[k] + rhs[k])
            .collect();
        for j in 0..n - 1 {
            let a = self.stencil.coeff(n, j);
            let (hi, lo) = (&self.states[j + 1], &self.states[j]);
            for k in 0..next.len() {
                next[k] -= a * (hi[k] - lo[k]);
            }
        }
        for (c, lam) in next.iter_mut().zip(&self.lambda) {
            *c /= d + lam;
        }
        self.states.push(next);
        self.states.last().unwrap()
    }
}

/// Blowup threshold 1e6 (‖u₀‖∞ + ‖F‖∞ T^β).
pub(crate) fn blowup_limit(u0_sup: f64, f_sup: f64, tgrid: &TimeGrid) -> f64 {
    1e6 * (u0_sup + f_sup * tgrid.t_final().powf(tgrid.beta()))
}

/// b·Du evaluated pointwise.
pub(crate) fn transport(ops: &SpectralOps, b: &[Field], du: &[Field]) -> Field {
    let mut out = Field::zeros(ops.grid());
    for (bj, dj) in b.iter().zip(du) {
        for ((o, x), y) in out.values.iter_mut().zip(&bj.values).zip(&dj.values) {
            *o += x * y;
        }
    }
    out
}

/// L1 scheme with implicit diffusion and drift lagged one step, b(t_n)·Du(t_{n-1}).
pub fn solve_heat_l1(p: &LinearProblem) -> Result<SpaceTimeField> {
    p.validate()?;
    let grid = p.grid();
    let ops = SpectralOps::new(grid);
    let tg = &p.tgrid;
    let lambda: Vec<f64> = grid.laplacian_symbol().iter().map(|l| p.sigma * l).collect();
    let mut stepper = SpectralL1::new(tg, lambda);
    let limit = blowup_limit(p.u0.sup_norm(), p.source_sup(), tg);
    let u0 = ops.transform(&p.u0)?;
    stepper.push(u0.coeffs);
    let mut fields = vec![p.u0.clone()];
    for n in 1..=tg.steps() {
        let mut rhs = match &p.source {
            Some(f) => ops.transform(&f.values[n])?.coeffs,
            None => vec![C0; grid.len()],
        };
        if let Some(b) = &p.drift {
            let du = ops.gradient(&fields[n - 1])?;
            let adv = ops.transform(&transport(&ops, &b.values[n], &du))?;
            rhs.iter_mut().zip(adv.coeffs).for_each(|(r, a)| *r -= a);
        }
        let mut s = SpectralField::zeros(grid);
        s.coeffs = stepper.advance(&rhs).to_vec();
        let u = ops.inverse(&s)?;
        let norm = u.sup_norm();
        if !(norm <= limit) {
            return Err(Error::Stability { time: tg.nodes()[n], norm, limit });
        }
        fields.push(u);
    }
    TimeSeries::new(tg.clone(), fields)
}

/// Backward Euler for the classical (β = 1) equation u_t - σΔu + b·Du = F on
/// the same nodes, for consistency checks as β → 1.
pub fn solve_heat_classical(p: &LinearProblem) -> Result<SpaceTimeField> {
    p.validate()?;
    let grid = p.grid();
    let ops = SpectralOps::new(grid);
    let tg = &p.tgrid;
    let lambda: Vec<f64> = grid.laplacian_symbol().iter().map(|l| p.sigma * l).collect();
    let mut prev = ops.transform(&p.u0)?;
    let mut fields = vec![p.u0.clone()];
    for n in 1..=tg.steps() {
        let dt = tg.dt(n - 1);
        let mut rhs = match &p.source {
            Some(f) => ops.transform(&f.values[n])?.coeffs,
            None => vec![C0; grid.len()],
        };
        if let Some(b) = &p.drift {
            let du = ops.gradient(&fields[n - 1])?;
            let adv = ops.transform(&transport(&ops, &b.values[n], &du))?;
            rhs.iter_mut().zip(adv.coeffs).for_each(|(r, a)| *r -= a);
        }
        for k in 0..grid.len() {
            prev.coeffs[k] = (prev.coeffs[k] + dt * rhs[k]) / (1.0 + dt * lambda[k]);
        }
        fields.push(ops.inverse(&prev)?);
    }
    TimeSeries::new(tg.clone(), fields)
}

/// ‖u‖∞ - [‖u₀‖∞ + T^β/Γ(1+β) ‖F‖∞]; nonpositive when the maximum principle bound holds.
pub fn max_principle_gap(u: &SpaceTimeField, p: &LinearProblem) -> f64 {
    let beta = p.tgrid.beta();
    let bound = p.u0.sup_norm() + p.tgrid.t_final().powf(beta) / gamma(1.0 + beta) * p.source_sup();
    sup_norm(u) - bound
}

/// Largest |u| over all nodes and points.
pub fn sup_norm(u: &SpaceTimeField) -> f64 {
    u.values.iter().map(Field::sup_norm).fold(0.0, f64::max)
}

/// max_n ‖u_n - v_n‖∞.
pub fn max_distance(u: &SpaceTimeField, v: &SpaceTimeField) -> Result<f64> {
    if !u.grid.same_nodes(&v.grid) {
        return Err(Error::mismatch("space-time fields live on different time grids"));
    }
    u.values
        .iter()
        .zip(&v.values)
        .map(|(a, b)| a.max_abs_diff(b))
        .try_fold(0.0, |m, d| d.map(|d| f64::max(m, d)))
}
