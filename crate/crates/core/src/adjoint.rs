//! Backward time-fractional Fokker-Planck equation
//!
//! ∂̃^β ρ - σΔρ - div(bρ) = 0 on [0, τ),  ρ(τ) = ρ_τ,
//!
//! the adjoint of the HJ equation linearised at u, with b = D_pH(x, Du).
//! With s = τ - t the backward Caputo derivative becomes the forward one, so
//! both schemes march ρ̃(s) = ρ(τ - s) forward on the mirrored grid:
//! ∂^β ρ̃ = σΔρ̃ + div(b̃ρ̃).

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::frac_calc::{rl_node_weights, trapezoid, L1Stencil, RlMethod, TimeGrid, TimeSeries};
use crate::hj::HjProblem;
use crate::linear::{check_series, duhamel_kernels, SpaceTimeField, SpectralL1, VectorSeries};
use crate::mittag_leffler::{gamma, ml_neg};
use crate::torus::{Field, SpectralField, SpectralOps, TorusGrid};

const C0: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const MASS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FpScheme {
    /// Mittag-Leffler integrator: diffusion exact per mode, the drift term
    /// div(bρ) interpolated linearly in time with one predictor-corrector
    /// pass. Mass exact, no sign guarantee.
    #[default]
    Spectral,
    /// L1 in time, implicit second-order difference Laplacian, explicit
    /// donor-cell fluxes of the conservative form. Mass exact and
    /// nonnegative under [`admissible_dt`].
    Upwind,
    /// Central differences of the advective form b·∇ρ only. Not
    /// conservative; kept as a negative control for the mass diagnostics.
    CentralAdvective,
}

#[derive(Debug, Clone)]
pub struct FpProblem {
    /// Nodes t_0..t_M with t_M = τ.
    pub tgrid: TimeGrid,
    pub sigma: f64,
    /// b at the time nodes, one component per direction.
    pub drift: VectorSeries,
    pub terminal: Field,
}

impl FpProblem {
    pub fn new(tgrid: TimeGrid, sigma: f64, drift: VectorSeries, terminal: Field) -> Result<Self> {
        let p = FpProblem { tgrid, sigma, drift, terminal };
        p.validate()?;
        Ok(p)
    }

    pub fn without_drift(tgrid: TimeGrid, sigma: f64, terminal: Field) -> Result<Self> {
        let grid = terminal.grid();
        let drift = TimeSeries::from_fn(&tgrid, |_| vec![Field::zeros(grid); grid.dim()]);
        FpProblem::new(tgrid, sigma, drift, terminal)
    }

    /// The adjoint of `hj` linearised at `u`: b = D_pH(x, Du).
    pub fn from_hj(hj: &HjProblem, u: &SpaceTimeField, terminal: Field) -> Result<Self> {
        check_series(&hj.tgrid, hj.u0.grid(), u, "HJ solution")?;
        let ops = SpectralOps::new(hj.u0.grid());
        let drift = u
            .values
            .iter()
            .map(|f| Ok(hj.hamiltonian.drift(&ops.gradient(f)?)))
            .collect::<Result<Vec<_>>>()?;
        FpProblem::new(hj.tgrid.clone(), hj.sigma, TimeSeries::new(hj.tgrid.clone(), drift)?, terminal)
    }

    pub fn grid(&self) -> TorusGrid {
        self.terminal.grid()
    }

    pub fn beta(&self) -> f64 {
        self.tgrid.beta()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid(format!("diffusivity must be positive, got {}", self.sigma)));
        }
        let min = self.terminal.min();
        if min < 0.0 {
            return Err(Error::invalid(format!("terminal density has negative values (min {min:e})")));
        }
        let mass = self.terminal.integral();
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(Error::invalid(format!("terminal density has mass {mass}, expected 1")));
        }
        let grid = self.grid();
        if !self.tgrid.same_nodes(&self.drift.grid) || self.drift.len() != self.tgrid.steps() + 1 {
            return Err(Error::mismatch("drift is not sampled on the problem's time grid"));
        }
        for v in &self.drift.values {
            if v.len() != grid.dim() || v.iter().any(|c| c.grid() != grid) {
                return Err(Error::mismatch("drift components do not match the torus grid"));
            }
        }
        Ok(())
    }

    fn reversed_grid(&self) -> Result<TimeGrid> {
        self.tgrid.reversed(self.tgrid.steps())
    }

    /// Drift at mirrored node k, i.e. at t_{M-k}.
    fn drift_rev(&self, k: usize) -> &[Field] {
        &self.drift.values[self.tgrid.steps() - k]
    }
}

pub fn solve_fp_backward(p: &FpProblem, scheme: FpScheme) -> Result<SpaceTimeField> {
    p.validate()?;
    let mut rev = match scheme {
        FpScheme::Spectral => march_spectral(p)?,
        FpScheme::Upwind | FpScheme::CentralAdvective => march_l1(p, scheme)?,
    };
    rev.reverse();
    TimeSeries::new(p.tgrid.clone(), rev)
}

fn march_spectral(p: &FpProblem) -> Result<Vec<Field>> {
    let grid = p.grid();
    let ops = SpectralOps::new(grid);
    let rg = p.reversed_grid()?;
    let s = rg.nodes();
    let m = rg.steps();
    let beta = rg.beta();
    let rho0 = ops.transform(&p.terminal)?.coeffs;

    let mut groups: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (idx, lam) in grid.laplacian_symbol().into_iter().enumerate() {
        groups.entry((p.sigma * lam).to_bits()).or_default().push(idx);
    }
    let groups: Vec<(f64, Vec<usize>)> = groups.into_iter().map(|(b, v)| (f64::from_bits(b), v)).collect();
    let tables: Option<Vec<Vec<(f64, f64)>>> = rg.is_uniform().then(|| {
        let h = rg.t_final() / m as f64;
        groups.iter().map(|(lam, _)| (0..=m).map(|k| duhamel_kernels(beta, *lam, k as f64 * h)).collect()).collect()
    });

    let flux = |n: usize, rho: &Field| -> Result<Vec<Complex64>> {
        let products = p
            .drift_rev(n)
            .iter()
            .map(|b| ops.product_dealiased(b, rho))
            .collect::<Result<Vec<_>>>()?;
        Ok(ops.divergence_spectral(&products)?.coeffs)
    };

    let mut fields = vec![p.terminal.clone()];
    let mut f_hist: Vec<Vec<Complex64>> = vec![flux(0, &p.terminal)?];
    for n in 1..=m {
        let mut base = vec![C0; grid.len()];
        let mut w_last = vec![0.0; grid.len()];
        for (g, (lam, idxs)) in groups.iter().enumerate() {
            let k: Vec<(f64, f64)> = match &tables {
                Some(t) => (0..=n).map(|j| t[g][n - j]).collect(),
                None => (0..=n).map(|j| duhamel_kernels(beta, *lam, s[n] - s[j])).collect(),
            };
            let mut wts = vec![0.0; n + 1];
            for j in 0..n {
                let h = s[j + 1] - s[j];
                let mean = (k[j].1 - k[j + 1].1) / h;
                wts[j] += k[j].0 - mean;
                wts[j + 1] += mean - k[j + 1].0;
            }
            let decay = if *lam == 0.0 { 1.0 } else { ml_neg(beta, 1.0, lam * s[n].powf(beta)) };
            for &idx in idxs {
                let mut acc = rho0[idx] * decay;
                for j in 0..n {
                    acc += f_hist[j][idx] * wts[j];
                }
                base[idx] = acc;
                w_last[idx] = wts[n];
            }
        }
        let combine = |f: &[Complex64]| -> Vec<Complex64> {
            base.iter().zip(f).zip(&w_last).map(|((b, f), w)| b + f * w).collect()
        };
        let to_field = |c: Vec<Complex64>| -> Result<Field> {
            let mut sf = SpectralField::zeros(grid);
            sf.coeffs = c;
            ops.inverse(&sf)
        };
        let predicted = to_field(combine(&flux(n, &fields[n - 1])?))?;
        let f_n = flux(n, &predicted)?;
        let rho = to_field(combine(&f_n))?;
        f_hist.push(f_n);
        fields.push(rho);
    }
    Ok(fields)
}

fn neighbor(grid: TorusGrid, idx: usize, axis: usize, forward: bool) -> usize {
    let n = grid.n();
    let step = |i: usize| if forward { (i + 1) % n } else { (i + n - 1) % n };
    if grid.dim() == 1 {
        step(idx)
    } else if axis == 0 {
        step(idx / n) * n + idx % n
    } else {
        (idx / n) * n + step(idx % n)
    }
}

/// Donor-cell fluxes -div_h(vρ) with v = -b and face velocities averaged
/// from the two adjacent cells.
fn upwind_flux(b: &[Field], rho: &Field) -> Field {
    let grid = rho.grid();
    let inv_h = 1.0 / grid.spacing();
    let mut out = Field::zeros(grid);
    for (axis, comp) in b.iter().enumerate() {
        for idx in 0..grid.len() {
            let right = neighbor(grid, idx, axis, true);
            let v = -0.5 * (comp.values[idx] + comp.values[right]);
            let flux = if v > 0.0 { v * rho.values[idx] } else { v * rho.values[right] };
            out.values[idx] -= flux * inv_h;
            out.values[right] += flux * inv_h;
        }
    }
    out
}

/// Largest outflow rate Σ (positive outgoing face velocities)/h over cells.
fn outflow_rate(b: &[Field]) -> f64 {
    let grid = b[0].grid();
    let inv_h = 1.0 / grid.spacing();
    let mut worst: f64 = 0.0;
    for idx in 0..grid.len() {
        let mut out = 0.0;
        for (axis, comp) in b.iter().enumerate() {
            let right = neighbor(grid, idx, axis, true);
            let left = neighbor(grid, idx, axis, false);
            let vr = -0.5 * (comp.values[idx] + comp.values[right]);
            let vl = -0.5 * (comp.values[idx] + comp.values[left]);
            out += (vr.max(0.0) + (-vl).max(0.0)) * inv_h;
        }
        worst = worst.max(out);
    }
    worst
}

fn central_advective(b: &[Field], rho: &Field) -> Field {
    let grid = rho.grid();
    let inv_2h = 0.5 / grid.spacing();
    let mut out = Field::zeros(grid);
    for (axis, comp) in b.iter().enumerate() {
        for idx in 0..grid.len() {
            let r = neighbor(grid, idx, axis, true);
            let l = neighbor(grid, idx, axis, false);
            out.values[idx] += comp.values[idx] * (rho.values[r] - rho.values[l]) * inv_2h;
        }
    }
    out
}

/// Largest uniform step for which the upwind scheme keeps ρ ≥ 0:
/// [(2 - 2^{1-β}) / (Γ(2-β) R)]^{1/β} with R the worst cell outflow rate.
pub fn admissible_dt(p: &FpProblem) -> f64 {
    let beta = p.beta();
    let r = p.drift.values.iter().map(|b| outflow_rate(b)).fold(0.0, f64::max);
    if r == 0.0 {
        return f64::INFINITY;
    }
    ((2.0 - 2f64.powf(1.0 - beta)) / (gamma(2.0 - beta) * r)).powf(1.0 / beta)
}

fn march_l1(p: &FpProblem, scheme: FpScheme) -> Result<Vec<Field>> {
    let grid = p.grid();
    let ops = SpectralOps::new(grid);
    let rg = p.reversed_grid()?;
    let m = rg.steps();
    let s = rg.nodes();
    if scheme == FpScheme::Upwind {
        // Positivity needs a_{n,n-1} - a_{n,n-2} ≥ R at every step.
        let stencil = L1Stencil::new(&rg);
        for n in 1..=m {
            let c = if n == 1 { stencil.diag(1) } else { stencil.diag(n) - stencil.coeff(n, n - 2) };
            let r = outflow_rate(p.drift_rev(n));
            if c * (1.0 + 1e-12) < r {
                return Err(Error::StepRestriction { dt: s[n] - s[n - 1], admissible: admissible_dt(p) });
            }
        }
    }
    let lambda = grid.fd_laplacian_symbol().iter().map(|l| p.sigma * l).collect();
    let mut stepper = SpectralL1::new(&rg, lambda);
    stepper.push(ops.transform(&p.terminal)?.coeffs);
    let mut fields = vec![p.terminal.clone()];
    for n in 1..=m {
        let b = p.drift_rev(n);
        let f = match scheme {
            FpScheme::Upwind => upwind_flux(b, &fields[n - 1]),
            _ => central_advective(b, &fields[n - 1]),
        };
        let mut sf = SpectralField::zeros(grid);
        sf.coeffs = stepper.advance(&ops.transform(&f)?.coeffs).to_vec();
        fields.push(ops.inverse(&sf)?);
    }
    Ok(fields)
}

/// max over nodes of |∫ρ(t) - ∫ρ(τ)|.
pub fn mass_deviation(rho: &SpaceTimeField) -> f64 {
    let target = rho.last().integral();
    rho.values.iter().map(|f| (f.integral() - target).abs()).fold(0.0, f64::max)
}

/// Smallest value of ρ over all nodes.
pub fn min_density(rho: &SpaceTimeField) -> f64 {
    rho.values.iter().map(Field::min).fold(f64::INFINITY, f64::min)
}

fn check_pair(u: &SpaceTimeField, rho: &SpaceTimeField) -> Result<()> {
    if !u.grid.same_nodes(&rho.grid) || u.len() != rho.len() {
        return Err(Error::mismatch("u and ρ are sampled on different time grids"));
    }
    if u.values[0].grid() != rho.values[0].grid() {
        return Err(Error::mismatch("u and ρ live on different torus grids"));
    }
    Ok(())
}

fn space_time_integral(grid: &TimeGrid, per_node: &[f64]) -> f64 {
    trapezoid(grid, per_node)
}

/// ∫_0^τ ∫ |Du|^γ ρ dx dt.
pub fn crossed_quantity(u: &SpaceTimeField, rho: &SpaceTimeField, gamma_exp: f64) -> Result<f64> {
    check_pair(u, rho)?;
    let grid = u.values[0].grid();
    let ops = SpectralOps::new(grid);
    let per_node = u
        .values
        .iter()
        .zip(&rho.values)
        .map(|(f, r)| {
            let du = ops.gradient(f)?;
            let mut acc = 0.0;
            for idx in 0..grid.len() {
                let m2: f64 = du.iter().map(|g| g.values[idx] * g.values[idx]).sum();
                acc += m2.powf(0.5 * gamma_exp) * r.values[idx];
            }
            Ok(acc / grid.len() as f64)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(space_time_integral(&u.grid, &per_node))
}

/// The four terms of the duality identity
///
/// ∫(I^{1-β}u)(τ)ρ(τ) = ∫u(0)(Ĩ^{1-β}ρ)(0) + ∬Vρ + ∬(D_pH(x,Du)·Du - H(x,Du))ρ,
///
/// in that order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualityTerms {
    pub terminal: f64,
    pub initial: f64,
    pub potential: f64,
    pub hamiltonian: f64,
}

impl DualityTerms {
    pub fn residual(&self) -> f64 {
        (self.terminal - self.initial - self.potential - self.hamiltonian).abs()
    }
}

pub fn duality_terms(u: &SpaceTimeField, rho: &SpaceTimeField, prob: &HjProblem) -> Result<DualityTerms> {
    check_pair(u, rho)?;
    check_series(&prob.tgrid, prob.u0.grid(), u, "HJ solution")?;
    let tg = &prob.tgrid;
    let m = tg.steps();
    let order = 1.0 - tg.beta();
    let grid = prob.u0.grid();
    let ops = SpectralOps::new(grid);
    let mean_product = |a: &Field, b: &Field| a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum::<f64>() / grid.len() as f64;

    let w = rl_node_weights(tg.nodes(), m, order, RlMethod::Trapezoid);
    let mut iu = Field::zeros(grid);
    for (wj, f) in w.iter().zip(&u.values) {
        iu.values.iter_mut().zip(&f.values).for_each(|(a, b)| *a += wj * b);
    }
    let terminal = mean_product(&iu, rho.last());

    let rg = tg.reversed(m)?;
    let w = rl_node_weights(rg.nodes(), m, order, RlMethod::Trapezoid);
    let mut irho = Field::zeros(grid);
    for (k, wk) in w.iter().enumerate() {
        irho.values.iter_mut().zip(&rho.values[m - k].values).for_each(|(a, b)| *a += wk * b);
    }
    let initial = mean_product(&u.values[0], &irho);

    let potential = match &prob.potential {
        Some(v) => {
            let per: Vec<f64> = v.values.iter().zip(&rho.values).map(|(a, b)| mean_product(a, b)).collect();
            space_time_integral(tg, &per)
        }
        None => 0.0,
    };

    let h = &prob.hamiltonian;
    let per = u
        .values
        .iter()
        .zip(&rho.values)
        .map(|(f, r)| {
            let du = ops.gradient(f)?;
            let mut acc = 0.0;
            let mut p = [0.0; 2];
            for idx in 0..grid.len() {
                for (pj, g) in p.iter_mut().zip(&du) {
                    *pj = g.values[idx];
                }
                let p = &p[..grid.dim()];
                let dp = h.grad_p(idx, p);
                let lagr: f64 = p.iter().zip(&dp).map(|(a, b)| a * b).sum::<f64>() - h.value(idx, p);
                acc += lagr * r.values[idx];
            }
            Ok(acc / grid.len() as f64)
        })
        .collect::<Result<Vec<_>>>()?;
    let hamiltonian = space_time_integral(tg, &per);
    Ok(DualityTerms { terminal, initial, potential, hamiltonian })
}

/// |LHS - RHS| of the duality identity, see [`DualityTerms`].
pub fn duality_residual(u: &SpaceTimeField, rho: &SpaceTimeField, prob: &HjProblem) -> Result<f64> {
    Ok(duality_terms(u, rho, prob)?.residual())
}
