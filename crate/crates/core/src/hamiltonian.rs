//! Hamiltonians H(x, p) = h(x) φ(p) with a strictly positive coefficient
//! field h and a profile φ ≥ 0, φ(0) = 0, and sampled checks of the growth
//! conditions
//!
//! (H1) D_pH·p - H ≥ C|p|^γ - c
//! (H2) |D_pH| ≤ C|p|^{γ-1} + C̃
//! (H3) |D²_xx H| ≤ C|p|^γ + C̃
//! (H4) |D²_px H| ≤ C|p|^{γ-1} + C̃
//! (H5) D²_pp H ξ·ξ ≥ C|p|^{γ-2}|ξ|² - C̃,  |ξ| = 1

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::torus::{Field, SpectralOps};

pub type ProfileFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type ProfileGradFn = Arc<dyn Fn(&[f64]) -> [f64; 2] + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HamiltonianKind {
    Quadratic,
    Power,
    Custom,
}

pub enum HamiltonianSpec {
    /// h(x)|p|²
    Quadratic { coefficient: Field },
    /// h(x){(1 + |p|²)^{γ/2} - 1}
    Power { gamma: f64, coefficient: Field },
    /// h(x) φ(p) with user-supplied φ and ∇φ.
    Custom { gamma: f64, coefficient: Field, phi: ProfileFn, grad_phi: ProfileGradFn },
}

#[derive(Clone)]
enum Profile {
    Quadratic,
    Power(f64),
    Custom(ProfileFn, ProfileGradFn),
}

#[derive(Clone)]
pub struct Hamiltonian {
    kind: HamiltonianKind,
    gamma: f64,
    dim: usize,
    profile: Profile,
    h: Field,
    hx: Vec<Field>,
    hxx: Vec<Vec<Field>>,
}

impl fmt::Debug for Hamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Hamiltonian")
            .field("kind", &self.kind)
            .field("gamma", &self.gamma)
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}

pub type Mat2 = [[f64; 2]; 2];

fn norm2(p: &[f64]) -> f64 {
    p.iter().map(|v| v * v).sum()
}

pub fn make_hamiltonian(spec: HamiltonianSpec) -> Result<Hamiltonian> {
    let (kind, gamma, h, profile) = match spec {
        HamiltonianSpec::Quadratic { coefficient } => (HamiltonianKind::Quadratic, 2.0, coefficient, Profile::Quadratic),
        HamiltonianSpec::Power { gamma, coefficient } => (HamiltonianKind::Power, gamma, coefficient, Profile::Power(gamma)),
        HamiltonianSpec::Custom { gamma, coefficient, phi, grad_phi } => {
            (HamiltonianKind::Custom, gamma, coefficient, Profile::Custom(phi, grad_phi))
        }
    };
    if !(gamma > 1.0 && gamma.is_finite()) {
        return Err(Error::invalid(format!("growth exponent must exceed 1, got {gamma}")));
    }
    if !(h.min() > 0.0) {
        return Err(Error::invalid(format!("coefficient field must be strictly positive, min is {}", h.min())));
    }
    if let Profile::Custom(phi, _) = &profile {
        let at_zero = phi(&[0.0, 0.0][..h.grid().dim()]);
        if at_zero.abs() > 1e-14 {
            return Err(Error::invalid(format!("custom profile must vanish at p = 0, got {at_zero}")));
        }
    }
    let ops = SpectralOps::new(h.grid());
    let hx = ops.gradient(&h)?;
    let hxx = hx.iter().map(|g| ops.gradient(g)).collect::<Result<Vec<_>>>()?;
    Ok(Hamiltonian { kind, gamma, dim: h.grid().dim(), profile, h, hx, hxx })
}

impl Hamiltonian {
    pub fn kind(&self) -> HamiltonianKind {
        self.kind
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coefficient(&self) -> &Field {
        &self.h
    }

    pub fn phi(&self, p: &[f64]) -> f64 {
        match &self.profile {
            Profile::Quadratic => norm2(p),
            Profile::Power(g) => (1.0 + norm2(p)).powf(0.5 * g) - 1.0,
            Profile::Custom(phi, _) => phi(p),
        }
    }

    pub fn grad_phi(&self, p: &[f64]) -> [f64; 2] {
        let mut out = [0.0; 2];
        match &self.profile {
            Profile::Quadratic => {
                for (o, v) in out.iter_mut().zip(p) {
                    *o = 2.0 * v;
                }
            }
            Profile::Power(g) => {
                let s = g * (1.0 + norm2(p)).powf(0.5 * g - 1.0);
                for (o, v) in out.iter_mut().zip(p) {
                    *o = s * v;
                }
            }
            Profile::Custom(_, grad) => out = grad(p),
        }
        out
    }

    fn hess_phi(&self, p: &[f64]) -> Mat2 {
        let d = self.dim;
        let mut m = [[0.0; 2]; 2];
        match &self.profile {
            Profile::Quadratic => {
                for (i, row) in m.iter_mut().enumerate().take(d) {
                    row[i] = 2.0;
                }
            }
            Profile::Power(g) => {
                let q = 1.0 + norm2(p);
                let s = g * q.powf(0.5 * g - 1.0);
                for i in 0..d {
                    for j in 0..d {
                        let delta = if i == j { 1.0 } else { 0.0 };
                        m[i][j] = s * (delta + (g - 2.0) * p[i] * p[j] / q);
                    }
                }
            }
            Profile::Custom(..) => m = fd_jacobian(d, p, |q| self.grad_phi(q)),
        }
        m
    }

    /// H(x_idx, p).
    pub fn value(&self, idx: usize, p: &[f64]) -> f64 {
        self.h.values[idx] * self.phi(p)
    }

    pub fn grad_p(&self, idx: usize, p: &[f64]) -> [f64; 2] {
        let h = self.h.values[idx];
        let g = self.grad_phi(p);
        [h * g[0], h * g[1]]
    }

    pub fn hess_pp(&self, idx: usize, p: &[f64]) -> Mat2 {
        let h = self.h.values[idx];
        self.hess_phi(p).map(|row| row.map(|v| h * v))
    }

    pub fn grad_x(&self, idx: usize, p: &[f64]) -> [f64; 2] {
        let phi = self.phi(p);
        let mut out = [0.0; 2];
        for (o, hx) in out.iter_mut().zip(&self.hx) {
            *o = hx.values[idx] * phi;
        }
        out
    }

    pub fn hess_xx(&self, idx: usize, p: &[f64]) -> Mat2 {
        let phi = self.phi(p);
        let mut m = [[0.0; 2]; 2];
        for (row, h) in m.iter_mut().zip(&self.hxx).take(self.dim) {
            for (entry, hij) in row.iter_mut().zip(h).take(self.dim) {
                *entry = hij.values[idx] * phi;
            }
        }
        m
    }

    /// Entry (i, j) is ∂²H/∂p_i∂x_j.
    pub fn hess_px(&self, idx: usize, p: &[f64]) -> Mat2 {
        let g = self.grad_phi(p);
        let mut m = [[0.0; 2]; 2];
        for (row, gi) in m.iter_mut().zip(g).take(self.dim) {
            for (entry, hj) in row.iter_mut().zip(&self.hx).take(self.dim) {
                *entry = gi * hj.values[idx];
            }
        }
        m
    }

    /// H(x, Du(x)) with the pseudo-spectral 3/2-rule dealiasing.
    pub fn eval_dealiased(&self, ops: &SpectralOps, du: &[Field]) -> Result<Field> {
        let mut inputs = vec![&self.h];
        inputs.extend(du.iter());
        let d = self.dim;
        ops.map_dealiased(&inputs, |v| v[0] * self.phi(&v[1..=d]))
    }

    /// H(x, Du(x)) at the grid points.
    pub fn eval_pointwise(&self, du: &[Field]) -> Field {
        let mut out = Field::zeros(self.h.grid());
        let mut p = [0.0; 2];
        for (idx, o) in out.values.iter_mut().enumerate() {
            for (j, g) in du.iter().enumerate() {
                p[j] = g.values[idx];
            }
            *o = self.value(idx, &p[..self.dim]);
        }
        out
    }

    /// The drift D_pH(x, Du(x)), one field per direction.
    pub fn drift(&self, du: &[Field]) -> Vec<Field> {
        let grid = self.h.grid();
        let mut out = vec![Field::zeros(grid); self.dim];
        let mut p = [0.0; 2];
        for idx in 0..grid.len() {
            for (j, g) in du.iter().enumerate() {
                p[j] = g.values[idx];
            }
            let b = self.grad_p(idx, &p[..self.dim]);
            for j in 0..self.dim {
                out[j].values[idx] = b[j];
            }
        }
        out
    }
}

fn fd_jacobian(d: usize, p: &[f64], f: impl Fn(&[f64]) -> [f64; 2]) -> Mat2 {
    let mut m = [[0.0; 2]; 2];
    let mut q = [0.0; 2];
    q[..d].copy_from_slice(&p[..d]);
    for j in 0..d {
        let eps = 1e-5 * (1.0 + p[j].abs());
        q[j] = p[j] + eps;
        let hi = f(&q[..d]);
        q[j] = p[j] - eps;
        let lo = f(&q[..d]);
        q[j] = p[j];
        for i in 0..d {
            m[i][j] = (hi[i] - lo[i]) / (2.0 * eps);
        }
    }
    m
}

fn spectral_norm(m: &Mat2) -> f64 {
    // largest singular value of a 2×2 matrix
    let a = m[0][0] * m[0][0] + m[1][0] * m[1][0];
    let b = m[0][0] * m[0][1] + m[1][0] * m[1][1];
    let c = m[0][1] * m[0][1] + m[1][1] * m[1][1];
    let disc = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    (0.5 * (a + c) + disc).sqrt()
}

fn min_eig_sym(m: &Mat2, d: usize) -> f64 {
    if d == 1 {
        return m[0][0];
    }
    let off = 0.5 * (m[0][1] + m[1][0]);
    0.5 * (m[0][0] + m[1][1]) - (0.25 * (m[0][0] - m[1][1]).powi(2) + off * off).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    /// LHS ≥ C g(p) - K
    Lower,
    /// LHS ≤ C g(p) + K
    Upper,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionFit {
    pub name: &'static str,
    pub bound: Bound,
    /// Multiplier of the |p| power.
    pub constant: f64,
    /// Additive constant (c_H for H1, C̃_H otherwise).
    pub offset: f64,
    /// Lower bounds: the fitted multiplier, which must be positive.
    /// Upper bounds: the smallest relative slack C g + K - LHS over the samples.
    pub margin: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub gamma: f64,
    pub samples: usize,
    pub conditions: Vec<ConditionFit>,
    /// Growth constant shared by the lower bounds: min of the H1 and H5 constants.
    pub c_h: f64,
    /// The additive constant of H1.
    pub c_h_lower: f64,
    /// Largest additive constant of H2-H5.
    pub c_tilde_h: f64,
}

impl AssumptionReport {
    pub fn all_satisfied(&self) -> bool {
        self.conditions.iter().all(|c| c.satisfied)
    }

    pub fn condition(&self, name: &str) -> Option<&ConditionFit> {
        self.conditions.iter().find(|c| c.name == name)
    }
}

fn halton(mut i: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Constants for LHS ≥ C g - K: C is the smallest ratio LHS/g on the outer
/// half of the sample radius, K ≥ 0 the smallest offset that makes every
/// sample pass.
fn fit_lower(lhs: &[f64], g: &[f64], outer: &[bool]) -> (f64, f64) {
    let c = (0..lhs.len()).filter(|&s| outer[s] && g[s] > 0.0).map(|s| lhs[s] / g[s]).fold(f64::INFINITY, f64::min);
    let k = lhs.iter().zip(g).map(|(f, g)| c * g - f).fold(0.0, f64::max);
    (c, k)
}

/// Constants for LHS ≤ C g + K, mirrored from [`fit_lower`].
fn fit_upper(lhs: &[f64], g: &[f64], outer: &[bool]) -> (f64, f64) {
    let c = (0..lhs.len()).filter(|&s| outer[s] && g[s] > 0.0).map(|s| lhs[s] / g[s]).fold(0.0, f64::max);
    let k = lhs.iter().zip(g).map(|(f, g)| f - c * g).fold(0.0, f64::max);
    (c, k)
}

/// Samples (x, p) quasi-randomly (Halton) with |p| ≤ 10 and evaluates each
/// condition. The multiplier of each condition is read off the samples with
/// |p| ≥ 5, where the growth term dominates; the additive constant is then the
/// smallest one valid on every sample. Hessians in p are finite differences
/// of D_pH.
pub fn check_structural_assumptions(h: &Hamiltonian, sample_count: usize) -> Result<AssumptionReport> {
    const RADIUS: f64 = 10.0;
    if sample_count < 100 {
        return Err(Error::invalid(format!("need at least 100 samples, got {sample_count}")));
    }
    let d = h.dim;
    let npts = h.h.grid().len();
    let gamma = h.gamma;
    let mut rows: Vec<[f64; 5]> = Vec::with_capacity(sample_count);
    let mut radii = Vec::with_capacity(sample_count);
    for i in 1..=sample_count {
        let idx = ((halton(i, 2) * npts as f64) as usize).min(npts - 1);
        let r = RADIUS * halton(i, 3);
        let u = halton(i, 5);
        let p: Vec<f64> = if d == 1 {
            vec![if u < 0.5 { -r } else { r }]
        } else {
            let th = 2.0 * std::f64::consts::PI * u;
            vec![r * th.cos(), r * th.sin()]
        };
        let gp = h.grad_p(idx, &p);
        let h1 = gp[..d].iter().zip(&p).map(|(a, b)| a * b).sum::<f64>() - h.value(idx, &p);
        let h2 = norm2(&gp[..d]).sqrt();
        let h3 = spectral_norm(&h.hess_xx(idx, &p));
        let h4 = spectral_norm(&h.hess_px(idx, &p));
        let hpp = fd_jacobian(d, &p, |q| h.grad_p(idx, q));
        let h5 = min_eig_sym(&hpp, d);
        rows.push([h1, h2, h3, h4, h5]);
        radii.push(r);
    }
    let powers = [gamma, gamma - 1.0, gamma, gamma - 1.0, gamma - 2.0];
    let names = ["H1", "H2", "H3", "H4", "H5"];
    let bounds = [Bound::Lower, Bound::Upper, Bound::Upper, Bound::Upper, Bound::Lower];
    let mut conditions = Vec::new();
    for c in 0..5 {
        // |p|^{γ-2} is unbounded at p = 0 when γ < 2; such samples carry no information
        let keep: Vec<usize> = (0..sample_count).filter(|&s| radii[s] > 0.0 || powers[c] >= 0.0).collect();
        let lhs: Vec<f64> = keep.iter().map(|&s| rows[s][c]).collect();
        let g: Vec<f64> = keep.iter().map(|&s| radii[s].powf(powers[c])).collect();
        let outer: Vec<bool> = keep.iter().map(|&s| radii[s] >= 0.5 * RADIUS).collect();
        let fit = match bounds[c] {
            Bound::Lower => {
                let (k, off) = fit_lower(&lhs, &g, &outer);
                ConditionFit { name: names[c], bound: Bound::Lower, constant: k, offset: off, margin: k, satisfied: k > 0.0 }
            }
            Bound::Upper => {
                let (k, off) = fit_upper(&lhs, &g, &outer);
                let margin = lhs
                    .iter()
                    .zip(&g)
                    .map(|(f, g)| {
                        let b = k * g + off;
                        if b > 0.0 {
                            (b - f) / b
                        } else if *f > 0.0 {
                            -1.0
                        } else {
                            0.0
                        }
                    })
                    .fold(f64::INFINITY, f64::min);
                let satisfied = margin.is_finite() && margin >= 0.0;
                ConditionFit { name: names[c], bound: Bound::Upper, constant: k, offset: off, margin, satisfied }
            }
        };
        conditions.push(fit);
    }
    let c_h = conditions[0].constant.min(conditions[4].constant);
    let c_h_lower = conditions[0].offset;
    let c_tilde_h = conditions[1..].iter().map(|c| c.offset).fold(0.0, f64::max);
    Ok(AssumptionReport { gamma, samples: sample_count, conditions, c_h, c_h_lower, c_tilde_h })
}
