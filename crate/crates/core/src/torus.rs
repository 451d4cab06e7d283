//! Periodic grids on the unit torus T^d (d = 1, 2) and Fourier-spectral
//! operators on them.
//!
//! Fourier coefficients are normalised, c_k = (1/N) Σ_x f(x) e^{-2πik·x}, so a
//! constant field has c_0 equal to the constant. In two dimensions values are
//! stored row-major: index i·n + j holds the point (i/n, j/n).
//!
//! The Nyquist wavenumber -n/2 has no sign, so every derivative operator,
//! the Laplacian included, treats it as k = 0 along that direction. With this
//! convention div∘grad and the Laplacian are the same operator.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TorusGrid {
    dim: usize,
    n: usize,
}

impl TorusGrid {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::invalid(format!("torus dimension must be 1 or 2, got {dim}")));
        }
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::invalid(format!("points per dimension must be even and >= 8, got {n}")));
        }
        Ok(TorusGrid { dim, n })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Total number of points, n^dim.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinates of point `idx`; the second entry is 0 in one dimension.
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let h = self.spacing();
        if self.dim == 1 {
            [idx as f64 * h, 0.0]
        } else {
            [(idx / self.n) as f64 * h, (idx % self.n) as f64 * h]
        }
    }

    /// Signed wavenumber of FFT index `i` along one axis, in -n/2..n/2.
    pub fn wavenumber(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Wavenumber vector of mode `idx`, second entry 0 in one dimension.
    pub fn mode(&self, idx: usize) -> [i64; 2] {
        if self.dim == 1 {
            [self.wavenumber(idx), 0]
        } else {
            [self.wavenumber(idx / self.n), self.wavenumber(idx % self.n)]
        }
    }

    /// Wavenumber used by derivatives: the Nyquist index maps to 0.
    fn derivative_wavenumber(&self, i: usize) -> f64 {
        if i == self.n / 2 {
            0.0
        } else {
            self.wavenumber(i) as f64
        }
    }

    fn derivative_mode(&self, idx: usize) -> [f64; 2] {
        if self.dim == 1 {
            [self.derivative_wavenumber(idx), 0.0]
        } else {
            [self.derivative_wavenumber(idx / self.n), self.derivative_wavenumber(idx % self.n)]
        }
    }

    /// 4π²|k|² for every mode, the symbol of -Δ.
    pub fn laplacian_symbol(&self) -> Vec<f64> {
        (0..self.len())
            .map(|idx| {
                let k = self.derivative_mode(idx);
                4.0 * PI * PI * (k[0] * k[0] + k[1] * k[1])
            })
            .collect()
    }

    /// Symbol of minus the second-order central difference Laplacian,
    /// Σ_j 4n² sin²(πk_j/n).
    pub fn fd_laplacian_symbol(&self) -> Vec<f64> {
        let n = self.n as f64;
        (0..self.len())
            .map(|idx| {
                let k = self.mode(idx);
                (0..self.dim).map(|j| 4.0 * n * n * (PI * k[j] as f64 / n).sin().powi(2)).sum()
            })
            .collect()
    }

    fn check(&self, other: &TorusGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::mismatch(format!(
                "torus grids differ: d={} n={} vs d={} n={}",
                self.dim, self.n, other.dim, other.n
            )))
        }
    }
}

/// Real samples on a [`TorusGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: TorusGrid,
    pub values: Vec<f64>,
}

impl Field {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::mismatch(format!("{} values for a grid of {} points", values.len(), grid.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("field values must be finite"));
        }
        Ok(Field { grid, values })
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        Field { grid, values: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: TorusGrid, c: f64) -> Self {
        Field { grid, values: vec![c; grid.len()] }
    }

    pub fn from_fn(grid: TorusGrid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Field { grid, values }
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// ∫_{T^d} f, by the (spectrally exact) rectangle rule.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64).sqrt()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.grid.check(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Field { grid: self.grid, values })
    }

    pub fn scaled(&self, c: f64) -> Field {
        self.map(|v| c * v)
    }

    pub fn max_abs_diff(&self, other: &Field) -> Result<f64> {
        self.grid.check(&other.grid)?;
        Ok(self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Translation by `cells` grid cells along `axis`: g(x) = f(x - cells·h e_axis).
    pub fn shifted(&self, axis: usize, cells: usize) -> Field {
        let n = self.grid.n;
        let values = (0..self.grid.len())
            .map(|idx| {
                let src = if self.grid.dim == 1 {
                    (idx + n - cells % n) % n
                } else {
                    let (i, j) = (idx / n, idx % n);
                    if axis == 0 {
                        ((i + n - cells % n) % n) * n + j
                    } else {
                        i * n + (j + n - cells % n) % n
                    }
                };
                self.values[src]
            })
            .collect();
        Field { grid: self.grid, values }
    }
}

/// Normalised Fourier coefficients of a real field.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: TorusGrid,
    pub coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        SpectralField { grid, coeffs: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    /// Coefficient of wavenumber k (second entry ignored in 1-D).
    pub fn coeff(&self, k: [i64; 2]) -> Complex64 {
        let n = self.grid.n as i64;
        let wrap = |k: i64| k.rem_euclid(n) as usize;
        if self.grid.dim == 1 {
            self.coeffs[wrap(k[0])]
        } else {
            self.coeffs[wrap(k[0]) * self.grid.n + wrap(k[1])]
        }
    }
}

/// FFT plans for one grid and for its 3/2-padded companion.
#[derive(Clone)]
pub struct SpectralOps {
    grid: TorusGrid,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    pad_fwd: Arc<dyn Fft<f64>>,
    pad_inv: Arc<dyn Fft<f64>>,
    m: usize,
}

impl std::fmt::Debug for SpectralOps {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralOps").field("grid", &self.grid).field("padded", &self.m).finish()
    }
}

fn fft_nd(data: &mut [Complex64], n: usize, dim: usize, plan: &Arc<dyn Fft<f64>>) {
    plan.process(data);
    if dim == 2 {
        let mut col = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                col[j * n + i] = data[i * n + j];
            }
        }
        plan.process(&mut col);
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = col[j * n + i];
            }
        }
    }
}

impl SpectralOps {
    pub fn new(grid: TorusGrid) -> Self {
        let mut planner = FftPlanner::new();
        let m = 3 * grid.n / 2;
        SpectralOps {
            grid,
            fwd: planner.plan_fft_forward(grid.n),
            inv: planner.plan_fft_inverse(grid.n),
            pad_fwd: planner.plan_fft_forward(m),
            pad_inv: planner.plan_fft_inverse(m),
            m,
        }
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn transform(&self, f: &Field) -> Result<SpectralField> {
        self.grid.check(&f.grid)?;
        let mut data: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft_nd(&mut data, self.grid.n, self.grid.dim, &self.fwd);
        let scale = 1.0 / self.grid.len() as f64;
        data.iter_mut().for_each(|c| *c *= scale);
        Ok(SpectralField { grid: self.grid, coeffs: data })
    }

    /// Real part of the inverse transform.
    pub fn inverse(&self, s: &SpectralField) -> Result<Field> {
        self.grid.check(&s.grid)?;
        let mut data = s.coeffs.clone();
        fft_nd(&mut data, self.grid.n, self.grid.dim, &self.inv);
        Ok(Field { grid: self.grid, values: data.iter().map(|c| c.re).collect() })
    }

    /// σΔf.
    pub fn laplacian_apply(&self, f: &Field, sigma: f64) -> Result<Field> {
        let mut s = self.transform(f)?;
        for (c, lam) in s.coeffs.iter_mut().zip(self.grid.laplacian_symbol()) {
            *c *= -sigma * lam;
        }
        self.inverse(&s)
    }

    fn derivative_spectral(&self, s: &SpectralField, axis: usize) -> SpectralField {
        let mut out = s.clone();
        for (idx, c) in out.coeffs.iter_mut().enumerate() {
            let k = self.grid.derivative_mode(idx)[axis];
            *c *= Complex64::new(0.0, 2.0 * PI * k);
        }
        out
    }

    pub fn gradient(&self, f: &Field) -> Result<Vec<Field>> {
        let s = self.transform(f)?;
        self.gradient_spectral(&s)
    }

    pub fn gradient_spectral(&self, s: &SpectralField) -> Result<Vec<Field>> {
        (0..self.grid.dim).map(|axis| self.inverse(&self.derivative_spectral(s, axis))).collect()
    }

    pub fn divergence(&self, v: &[Field]) -> Result<Field> {
        self.inverse(&self.divergence_spectral(v)?)
    }

    /// Fourier coefficients of div v; the mean mode is exactly 0.
    pub fn divergence_spectral(&self, v: &[Field]) -> Result<SpectralField> {
        if v.len() != self.grid.dim {
            return Err(Error::mismatch(format!("{} components for a {}-d torus", v.len(), self.grid.dim)));
        }
        let mut acc = SpectralField::zeros(self.grid);
        for (axis, comp) in v.iter().enumerate() {
            let d = self.derivative_spectral(&self.transform(comp)?, axis);
            acc.coeffs.iter_mut().zip(d.coeffs).for_each(|(a, b)| *a += b);
        }
        Ok(acc)
    }

    /// ‖(I - Δ)^{μ/2} f‖_{L²}.
    pub fn bessel_norm(&self, f: &Field, mu: f64) -> Result<f64> {
        let s = self.transform(f)?;
        let sum: f64 = s
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, c)| {
                let k = self.grid.mode(idx);
                let k2 = (k[0] * k[0] + k[1] * k[1]) as f64;
                (1.0 + 4.0 * PI * PI * k2).powf(mu) * c.norm_sqr()
            })
            .sum();
        Ok(sum.sqrt())
    }

    // Padded index (or two, sharing the Nyquist coefficient) for FFT index i.
    fn pad_targets(&self, i: usize) -> ([usize; 2], usize, f64) {
        let (n, m) = (self.grid.n, self.m);
        if i < n / 2 {
            ([i, 0], 1, 1.0)
        } else if i > n / 2 {
            ([i + m - n, 0], 1, 1.0)
        } else {
            ([n / 2, m - n / 2], 2, 0.5)
        }
    }

    fn pad(&self, s: &SpectralField) -> Vec<Complex64> {
        let (n, m) = (self.grid.n, self.m);
        let zero = Complex64::new(0.0, 0.0);
        if self.grid.dim == 1 {
            let mut out = vec![zero; m];
            for (i, c) in s.coeffs.iter().enumerate() {
                let (t, cnt, w) = self.pad_targets(i);
                for &p in &t[..cnt] {
                    out[p] += c * w;
                }
            }
            out
        } else {
            let mut out = vec![zero; m * m];
            for i in 0..n {
                let (ti, ci, wi) = self.pad_targets(i);
                for j in 0..n {
                    let (tj, cj, wj) = self.pad_targets(j);
                    let c = s.coeffs[i * n + j] * (wi * wj);
                    for &p in &ti[..ci] {
                        for &q in &tj[..cj] {
                            out[p * m + q] += c;
                        }
                    }
                }
            }
            out
        }
    }

    fn truncate(&self, padded: &[Complex64]) -> SpectralField {
        let (n, m) = (self.grid.n, self.m);
        let src = |i: usize| -> Option<usize> {
            if i < n / 2 {
                Some(i)
            } else if i > n / 2 {
                Some(i + m - n)
            } else {
                None
            }
        };
        let mut out = SpectralField::zeros(self.grid);
        if self.grid.dim == 1 {
            for i in 0..n {
                if let Some(p) = src(i) {
                    out.coeffs[i] = padded[p];
                }
            }
        } else {
            for i in 0..n {
                for j in 0..n {
                    if let (Some(p), Some(q)) = (src(i), src(j)) {
                        out.coeffs[i * n + j] = padded[p * m + q];
                    }
                }
            }
        }
        out
    }

    /// Evaluates a pointwise nonlinearity on the 3/2-refined grid and projects
    /// back onto |k_j| < n/2. Exact (alias-free) for quadratic nonlinearities.
    pub fn map_dealiased(&self, inputs: &[&Field], f: impl Fn(&[f64]) -> f64) -> Result<Field> {
        let spectra: Vec<SpectralField> = inputs.iter().map(|g| self.transform(g)).collect::<Result<_>>()?;
        self.map_dealiased_spectral(&spectra, f)
    }

    pub fn map_dealiased_spectral(&self, spectra: &[SpectralField], f: impl Fn(&[f64]) -> f64) -> Result<Field> {
        for s in spectra {
            self.grid.check(&s.grid)?;
        }
        let m = self.m;
        let total = m.pow(self.grid.dim as u32);
        let fine: Vec<Vec<f64>> = spectra
            .iter()
            .map(|s| {
                let mut data = self.pad(s);
                fft_nd(&mut data, m, self.grid.dim, &self.pad_inv);
                data.iter().map(|c| c.re).collect()
            })
            .collect();
        let mut args = vec![0.0; spectra.len()];
        let mut out: Vec<Complex64> = (0..total)
            .map(|p| {
                for (a, g) in args.iter_mut().zip(&fine) {
                    *a = g[p];
                }
                Complex64::new(f(&args), 0.0)
            })
            .collect();
        fft_nd(&mut out, m, self.grid.dim, &self.pad_fwd);
        let scale = 1.0 / total as f64;
        out.iter_mut().for_each(|c| *c *= scale);
        self.inverse(&self.truncate(&out))
    }

    pub fn product_dealiased(&self, a: &Field, b: &Field) -> Result<Field> {
        self.map_dealiased(&[a, b], |v| v[0] * v[1])
    }
}

/// Largest |f(x) - f(y)| / d(x, y)^α over all grid point pairs, with d the
/// geodesic distance on the torus. A lower bound for the continuum seminorm.
pub fn holder_seminorm_grid(f: &Field, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!("Hölder exponent must lie in (0, 1], got {alpha}")));
    }
    let g = f.grid;
    let n = g.n;
    let h = g.spacing();
    let circ = |k: usize| (k.min(n - k)) as f64 * h;
    let mut best: f64 = 0.0;
    let offsets: Vec<(usize, usize)> = if g.dim == 1 {
        (1..=n / 2).map(|a| (a, 0)).collect()
    } else {
        (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).filter(|&(a, b)| a + b > 0).collect()
    };
    for (a, b) in offsets {
        let d = (circ(a).powi(2) + circ(b).powi(2)).sqrt().powf(alpha);
        let mut worst: f64 = 0.0;
        if g.dim == 1 {
            for i in 0..n {
                worst = worst.max((f.values[(i + a) % n] - f.values[i]).abs());
            }
        } else {
            for i in 0..n {
                for j in 0..n {
                    let other = ((i + a) % n) * n + (j + b) % n;
                    worst = worst.max((f.values[other] - f.values[i * n + j]).abs());
                }
            }
        }
        best = best.max(worst / d);
    }
    Ok(best)
}
