//! Time-fractional viscous Hamilton-Jacobi equations
//!
//! ∂^β u - σΔu + H(x, Du) = V,  u(0) = u₀,
//!
//! solved by Picard iteration of the frozen-gradient map z ↦ w,
//! ∂^β w - σΔw = V - H(x, Dz), w(0) = u₀, with each linear solve done by the
//! L1 scheme. Long horizons are covered window by window: every window
//! re-solves from t = 0 with the already accepted states held fixed, so the
//! full memory of the Caputo derivative is kept.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::frac_calc::{trapezoid, L1Stencil, TimeGrid, TimeSeries};
use crate::hamiltonian::Hamiltonian;
use crate::linear::{self, check_series, LinearProblem, SpaceTimeField, SpectralL1};
use crate::mittag_leffler::gamma;
use crate::torus::{Field, SpectralField, SpectralOps};

/// Consecutive non-contracting iterations tolerated before giving up.
const NON_CONTRACTION_RUN: usize = 3;
/// Windows are never shortened below this many steps.
pub const MIN_WINDOW_STEPS: usize = 4;

/// First Picard iterate.
#[derive(Debug, Clone, Default)]
pub enum PicardInit {
    /// u₀ held constant in time.
    #[default]
    Constant,
    /// The solution of the problem with H = 0.
    LinearHeat,
    Given(SpaceTimeField),
}

#[derive(Debug, Clone)]
pub struct HjProblem {
    pub tgrid: TimeGrid,
    pub sigma: f64,
    pub hamiltonian: Hamiltonian,
    /// V at the time nodes; `None` means V = 0.
    pub potential: Option<SpaceTimeField>,
    pub u0: Field,
    pub tol: f64,
    pub max_picard: usize,
    pub init: PicardInit,
}

impl HjProblem {
    pub fn new(tgrid: TimeGrid, sigma: f64, hamiltonian: Hamiltonian, u0: Field) -> Self {
        HjProblem { tgrid, sigma, hamiltonian, potential: None, u0, tol: 1e-10, max_picard: 60, init: PicardInit::Constant }
    }

    pub fn with_potential(mut self, v: SpaceTimeField) -> Self {
        self.potential = Some(v);
        self
    }

    pub fn with_tolerance(mut self, tol: f64, max_picard: usize) -> Self {
        self.tol = tol;
        self.max_picard = max_picard;
        self
    }

    pub fn with_init(mut self, init: PicardInit) -> Self {
        self.init = init;
        self
    }

    pub fn beta(&self) -> f64 {
        self.tgrid.beta()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid(format!("diffusivity must be positive, got {}", self.sigma)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid(format!("Picard tolerance must be positive, got {}", self.tol)));
        }
        if self.max_picard == 0 {
            return Err(Error::invalid("max_picard must be at least 1"));
        }
        let grid = self.u0.grid();
        if self.hamiltonian.coefficient().grid() != grid {
            return Err(Error::mismatch("Hamiltonian coefficient lives on a different torus grid"));
        }
        if let Some(v) = &self.potential {
            check_series(&self.tgrid, grid, v, "potential")?;
        }
        if let PicardInit::Given(z) = &self.init {
            check_series(&self.tgrid, grid, z, "initial Picard iterate")?;
        }
        Ok(())
    }

    /// The Picard iteration is only known to converge globally for β > 1/2.
    pub fn outside_guarantee(&self) -> bool {
        self.beta() <= 0.5
    }

    fn potential_at(&self, n: usize) -> Option<&Field> {
        self.potential.as_ref().map(|v| &v.values[n])
    }

    fn potential_sup(&self) -> f64 {
        self.potential.as_ref().map_or(0.0, linear::sup_norm)
    }
}

/// Update norms δ_m = ‖z_{m+1} - z_m‖ of a Picard run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PicardTrace {
    /// Discrete sup norm over the space-time window.
    pub sup: Vec<f64>,
    /// Space-time L² norm (trapezoid in time).
    pub l2: Vec<f64>,
}

impl PicardTrace {
    pub fn len(&self) -> usize {
        self.sup.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sup.is_empty()
    }

    /// δ_{m+1}/δ_m.
    pub fn ratios(&self) -> Vec<f64> {
        self.sup.windows(2).map(|w| w[1] / w[0]).collect()
    }

    /// Largest ratio among the last `k`.
    pub fn max_recent_ratio(&self, k: usize) -> Option<f64> {
        let r = self.ratios();
        (r.len() >= k).then(|| r[r.len() - k..].iter().copied().fold(f64::NEG_INFINITY, f64::max))
    }

    fn extend(&mut self, other: &PicardTrace) {
        self.sup.extend_from_slice(&other.sup);
        self.l2.extend_from_slice(&other.l2);
    }
}

#[derive(Debug, Clone)]
pub struct HjSolution {
    pub u: SpaceTimeField,
    /// Iterations of the last window, or of the whole run for a single window.
    pub trace: PicardTrace,
    /// Traces of every accepted window, in time order.
    pub window_traces: Vec<PicardTrace>,
    /// Node indices where accepted windows end.
    pub window_ends: Vec<usize>,
    pub converged: bool,
    pub outside_guarantee: bool,
}

struct Workspace {
    ops: SpectralOps,
    lambda: Vec<f64>,
}

impl Workspace {
    fn new(p: &HjProblem) -> Self {
        let grid = p.u0.grid();
        let lambda = grid.laplacian_symbol().iter().map(|l| p.sigma * l).collect();
        Workspace { ops: SpectralOps::new(grid), lambda }
    }

    /// V_n - H(x, Dz_n) in Fourier space.
    fn rhs(&self, p: &HjProblem, n: usize, z: &Field) -> Result<Vec<Complex64>> {
        let du = self.ops.gradient(z)?;
        let mut h = p.hamiltonian.eval_dealiased(&self.ops, &du)?;
        if let Some(v) = p.potential_at(n) {
            h = v.zip_map(&h, |a, b| a - b)?;
        } else {
            h = h.scaled(-1.0);
        }
        Ok(self.ops.transform(&h)?.coeffs)
    }
}

enum WindowOutcome {
    Converged(Vec<Field>, PicardTrace),
    Stalled(Vec<Field>, PicardTrace),
    NonContracting(PicardTrace),
}

/// Picard iteration on nodes 0..=end with nodes 0..=frozen fixed to `accepted`.
fn picard_window(
    p: &HjProblem,
    ws: &Workspace,
    accepted: &[Field],
    end: usize,
    first: Vec<Field>,
) -> Result<WindowOutcome> {
    let frozen = accepted.len() - 1;
    let tg = &p.tgrid;
    let grid = p.u0.grid();
    let scale = p.u0.sup_norm().max(1.0);
    let sub = tg.truncated(end)?;
    let mut stepper = SpectralL1::new(tg, ws.lambda.clone());
    for f in accepted {
        stepper.push(ws.ops.transform(f)?.coeffs);
    }
    let mut z = first;
    let mut trace = PicardTrace::default();
    let mut bad_run = 0;
    for _ in 0..p.max_picard {
        stepper.truncate(frozen + 1);
        let mut w = accepted.to_vec();
        let mut f_sup: f64 = 0.0;
        for (n, zn) in z.iter().enumerate().take(end + 1).skip(frozen + 1) {
            let rhs = ws.rhs(p, n, zn)?;
            f_sup = f_sup.max(rhs.iter().map(|c| c.norm()).sum::<f64>());
            let mut s = SpectralField::zeros(grid);
            s.coeffs = stepper.advance(&rhs).to_vec();
            let field = ws.ops.inverse(&s)?;
            let limit = linear::blowup_limit(p.u0.sup_norm(), f_sup, tg);
            let norm = field.sup_norm();
            if !(norm <= limit) {
                return Err(Error::Stability { time: tg.nodes()[n], norm, limit });
            }
            w.push(field);
        }
        let diffs: Vec<f64> = (0..=end).map(|n| w[n].max_abs_diff(&z[n])).collect::<Result<_>>()?;
        let l2sq: Vec<f64> = (0..=end)
            .map(|n| w[n].zip_map(&z[n], |a, b| a - b).map(|d| d.l2_norm().powi(2)))
            .collect::<Result<_>>()?;
        let delta = diffs.iter().copied().fold(0.0, f64::max);
        trace.sup.push(delta);
        trace.l2.push(trapezoid(&sub, &l2sq).sqrt());
        z = w;
        if delta <= p.tol * scale {
            return Ok(WindowOutcome::Converged(z, trace));
        }
        if let Some(&r) = trace.ratios().last() {
            bad_run = if r >= 1.0 { bad_run + 1 } else { 0 };
            if bad_run >= NON_CONTRACTION_RUN {
                return Ok(WindowOutcome::NonContracting(trace));
            }
        }
    }
    Ok(WindowOutcome::Stalled(z, trace))
}

fn first_iterate(p: &HjProblem) -> Result<Vec<Field>> {
    let m = p.tgrid.steps();
    Ok(match &p.init {
        PicardInit::Constant => vec![p.u0.clone(); m + 1],
        PicardInit::LinearHeat => {
            let mut lp = LinearProblem::new(p.tgrid.clone(), p.sigma, p.u0.clone());
            lp.source = p.potential.clone();
            linear::solve_heat_l1(&lp)?.values
        }
        PicardInit::Given(z) => z.values.clone(),
    })
}

/// Picard iteration over the whole time grid.
///
/// Returns with `converged = false` when `max_picard` iterations did not reach
/// the tolerance, and fails with [`Error::NonContraction`] when the update
/// norm fails to shrink three times in a row.
pub fn solve_hj_picard(p: &HjProblem) -> Result<HjSolution> {
    p.validate()?;
    let ws = Workspace::new(p);
    let end = p.tgrid.steps();
    let first = first_iterate(p)?;
    match picard_window(p, &ws, std::slice::from_ref(&p.u0), end, first)? {
        WindowOutcome::Converged(u, trace) => Ok(finish(p, u, trace, vec![end], true)),
        WindowOutcome::Stalled(u, trace) => Ok(finish(p, u, trace, vec![end], false)),
        WindowOutcome::NonContracting(trace) => {
            Err(Error::NonContraction { trace: Box::new(trace), time_reached: 0.0 })
        }
    }
}

fn finish(p: &HjProblem, u: Vec<Field>, trace: PicardTrace, ends: Vec<usize>, converged: bool) -> HjSolution {
    let u = TimeSeries::new(p.tgrid.clone(), u).expect("one state per node");
    HjSolution {
        u,
        window_traces: vec![trace.clone()],
        trace,
        window_ends: ends,
        converged,
        outside_guarantee: p.outside_guarantee(),
    }
}

/// Continuation in time: Picard on [0, t_w], then on [0, t_w + window] with
/// the states up to t_w frozen, and so on until the final time. A window
/// that stops contracting (or stalls) is halved and retried, down to
/// [`MIN_WINDOW_STEPS`] steps.
pub fn solve_hj_continued(p: &HjProblem, window: f64) -> Result<HjSolution> {
    p.validate()?;
    if !(window > 0.0) {
        return Err(Error::invalid(format!("window must be positive, got {window}")));
    }
    if window > p.tgrid.t_final() * (1.0 + 1e-12) {
        return Err(Error::invalid(format!("window {window} exceeds the final time {}", p.tgrid.t_final())));
    }
    let ws = Workspace::new(p);
    let t = p.tgrid.nodes();
    let m = p.tgrid.steps();
    let first = first_iterate(p)?;
    let mut accepted = vec![p.u0.clone()];
    let mut traces = Vec::new();
    let mut ends = Vec::new();
    let mut width = window;
    let mut all_converged = true;
    while accepted.len() - 1 < m {
        let start = accepted.len() - 1;
        let target = t[start] + width;
        let end = (start + 1..=m).find(|&n| t[n] >= target * (1.0 - 1e-12)).unwrap_or(m);
        let mut z = accepted.clone();
        let hold = accepted.last().unwrap().clone();
        for guess in &first[start + 1..=end] {
            z.push(if matches!(p.init, PicardInit::Constant) && start > 0 { hold.clone() } else { guess.clone() });
        }
        let outcome = picard_window(p, &ws, &accepted, end, z)?;
        let (states, trace, converged) = match outcome {
            WindowOutcome::Converged(s, tr) => (s, tr, true),
            other => {
                let trace = match &other {
                    WindowOutcome::Stalled(_, tr) | WindowOutcome::NonContracting(tr) => tr.clone(),
                    WindowOutcome::Converged(..) => unreachable!(),
                };
                if end - start > MIN_WINDOW_STEPS {
                    let half = (end - start) / 2;
                    width = (t[start + half.max(MIN_WINDOW_STEPS)] - t[start]).max(f64::MIN_POSITIVE);
                    continue;
                }
                match other {
                    WindowOutcome::Stalled(s, tr) => (s, tr, false),
                    _ => {
                        return Err(Error::NonContraction { trace: Box::new(trace), time_reached: t[start] });
                    }
                }
            }
        };
        all_converged &= converged;
        accepted = states;
        traces.push(trace);
        ends.push(end);
    }
    let mut joined = PicardTrace::default();
    for tr in &traces {
        joined.extend(tr);
    }
    let last = traces.last().cloned().unwrap_or_default();
    Ok(HjSolution {
        u: TimeSeries::new(p.tgrid.clone(), accepted)?,
        trace: if traces.len() == 1 { last } else { joined },
        window_traces: traces,
        window_ends: ends,
        converged: all_converged,
        outside_guarantee: p.outside_guarantee(),
    })
}

/// Semi-implicit L1 stepping: diffusion implicit, H(x, Du) taken from the
/// previous node. No iteration.
pub fn solve_hj_stepper(p: &HjProblem) -> Result<SpaceTimeField> {
    p.validate()?;
    let ws = Workspace::new(p);
    let grid = p.u0.grid();
    let mut stepper = SpectralL1::new(&p.tgrid, ws.lambda.clone());
    stepper.push(ws.ops.transform(&p.u0)?.coeffs);
    let mut out = vec![p.u0.clone()];
    for n in 1..=p.tgrid.steps() {
        let rhs = ws.rhs(p, n, &out[n - 1])?;
        let mut s = SpectralField::zeros(grid);
        s.coeffs = stepper.advance(&rhs).to_vec();
        out.push(ws.ops.inverse(&s)?);
    }
    TimeSeries::new(p.tgrid.clone(), out)
}

/// ‖u‖∞ - [‖u₀‖∞ + T^β/Γ(1+β)(‖V‖∞ + ‖H(·,0)‖∞)]; nonpositive when the
/// comparison bound holds.
pub fn comparison_bound_gap(u: &SpaceTimeField, p: &HjProblem) -> f64 {
    let beta = p.beta();
    let grid = p.u0.grid();
    let zero = vec![Field::zeros(grid); grid.dim()];
    let h0 = p.hamiltonian.eval_pointwise(&zero).sup_norm();
    let bound = p.u0.sup_norm() + p.tgrid.t_final().powf(beta) / gamma(1.0 + beta) * (p.potential_sup() + h0);
    linear::sup_norm(u) - bound
}

/// (∫_0^T ∫ |Du|^p dx dt)^{1/p} with spectral gradients and the trapezoid
/// rule in time.
pub fn gradient_lp_norm(u: &SpaceTimeField, p_exp: f64) -> Result<f64> {
    if !(p_exp >= 1.0) {
        return Err(Error::invalid(format!("L^p exponent must be >= 1, got {p_exp}")));
    }
    let grid = u.values[0].grid();
    let ops = SpectralOps::new(grid);
    let per_node: Vec<f64> = u
        .values
        .iter()
        .map(|f| {
            let du = ops.gradient(f)?;
            let mut acc = 0.0;
            for idx in 0..grid.len() {
                let m2: f64 = du.iter().map(|g| g.values[idx] * g.values[idx]).sum();
                acc += m2.powf(0.5 * p_exp);
            }
            Ok(acc / grid.len() as f64)
        })
        .collect::<Result<_>>()?;
    Ok(trapezoid(&u.grid, &per_node).powf(1.0 / p_exp))
}

/// max over nodes n ≥ 1 of ‖∂^β_h u - σΔu + H(x, Du) - V‖∞ with the solver's
/// discrete operators.
pub fn fixed_point_residual(u: &SpaceTimeField, p: &HjProblem) -> Result<f64> {
    p.validate()?;
    check_series(&p.tgrid, p.u0.grid(), u, "solution")?;
    let ws = Workspace::new(p);
    let stencil = L1Stencil::new(&p.tgrid);
    let grid = p.u0.grid();
    let mut worst: f64 = 0.0;
    for n in 1..=p.tgrid.steps() {
        let mut cap = u.values[n].scaled(0.0);
        for j in 0..n {
            let a = stencil.coeff(n, j);
            for (c, (hi, lo)) in cap.values.iter_mut().zip(u.values[j + 1].values.iter().zip(&u.values[j].values)) {
                *c += a * (hi - lo);
            }
        }
        let lap = ws.ops.laplacian_apply(&u.values[n], p.sigma)?;
        let mut rhs = SpectralField::zeros(grid);
        rhs.coeffs = ws.rhs(p, n, &u.values[n])?;
        let rhs = ws.ops.inverse(&rhs)?;
        // ∂^β u - σΔu - (V - H)
        let res = cap.zip_map(&lap, |a, b| a - b)?.zip_map(&rhs, |a, b| a - b)?;
        worst = worst.max(res.sup_norm());
    }
    Ok(worst)
}

/// Distance between the fixed points reached from the constant and the
/// linear-heat initial iterates.
pub fn uniqueness_gap(p: &HjProblem) -> Result<f64> {
    let a = solve_hj_picard(&p.clone().with_init(PicardInit::Constant))?;
    let b = solve_hj_picard(&p.clone().with_init(PicardInit::LinearHeat))?;
    linear::max_distance(&a.u, &b.u)
}
