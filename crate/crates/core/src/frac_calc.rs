//! Time grids and discrete fractional calculus: the L1 Caputo derivative
//! (forward and backward), Riemann-Liouville integrals by product
//! quadrature, and the fractional integration-by-parts identity.

use crate::error::{Error, Result};
use crate::mittag_leffler::gamma;

/// A partition 0 = t_0 < ... < t_M = T carrying the fractional order β.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    t_final: f64,
    beta: f64,
    grading: Option<f64>,
    nodes: Vec<f64>,
}

fn check_order(beta: f64) -> Result<()> {
    if beta > 0.0 && beta < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("fractional order must lie strictly inside (0, 1), got {beta}")))
    }
}

impl TimeGrid {
    pub fn uniform(t_final: f64, steps: usize, beta: f64) -> Result<Self> {
        Self::graded(t_final, steps, beta, 1.0)
    }

    /// Nodes t_n = T (n/M)^r, clustered near t = 0 for r > 1.
    pub fn graded(t_final: f64, steps: usize, beta: f64, r: f64) -> Result<Self> {
        check_order(beta)?;
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(Error::invalid(format!("final time must be positive, got {t_final}")));
        }
        if steps == 0 {
            return Err(Error::invalid("a time grid needs at least one step"));
        }
        if !(r >= 1.0 && r.is_finite()) {
            return Err(Error::invalid(format!("grading exponent must be >= 1, got {r}")));
        }
        let m = steps as f64;
        let nodes = (0..=steps)
            .map(|n| {
                if n == steps {
                    t_final
                } else if r == 1.0 {
                    t_final * n as f64 / m
                } else {
                    t_final * (n as f64 / m).powf(r)
                }
            })
            .collect();
        Ok(TimeGrid { t_final, beta, grading: Some(r), nodes })
    }

    /// An arbitrary increasing node set starting at 0.
    pub fn from_nodes(nodes: Vec<f64>, beta: f64) -> Result<Self> {
        check_order(beta)?;
        if nodes.len() < 2 || nodes[0] != 0.0 {
            return Err(Error::invalid("node list must start at 0 and contain at least two nodes"));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(Error::invalid("nodes must be finite and strictly increasing"));
        }
        let t_final = *nodes.last().unwrap();
        Ok(TimeGrid { t_final, beta, grading: None, nodes })
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn steps(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `Some(r)` for grids built as T (n/M)^r, `None` for general node sets.
    pub fn grading_exponent(&self) -> Option<f64> {
        self.grading
    }

    pub fn is_uniform(&self) -> bool {
        self.grading == Some(1.0)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn dt(&self, n: usize) -> f64 {
        self.nodes[n + 1] - self.nodes[n]
    }

    pub fn max_dt(&self) -> f64 {
        (0..self.steps()).map(|n| self.dt(n)).fold(0.0, f64::max)
    }

    /// The same order on a copy of this grid with a different β.
    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        check_order(beta)?;
        Ok(TimeGrid { beta, ..self.clone() })
    }

    /// Nodes t_0..t_idx.
    pub fn truncated(&self, idx: usize) -> Result<Self> {
        if idx == 0 || idx > self.steps() {
            return Err(Error::invalid(format!("truncation index {idx} outside 1..={}", self.steps())));
        }
        let nodes = self.nodes[..=idx].to_vec();
        let grading = if self.is_uniform() { Some(1.0) } else { None };
        Ok(TimeGrid { t_final: nodes[idx], beta: self.beta, grading, nodes })
    }

    /// The grid s_k = t_idx - t_{idx-k} seen from the terminal node backwards.
    pub fn reversed(&self, idx: usize) -> Result<Self> {
        let g = self.truncated(idx)?;
        let tau = g.t_final;
        let nodes: Vec<f64> = (0..=idx)
            .map(|k| if k == idx { tau } else { tau - g.nodes[idx - k] })
            .collect();
        Ok(TimeGrid { t_final: tau, beta: self.beta, grading: g.grading, nodes })
    }

    pub(crate) fn same_nodes(&self, other: &TimeGrid) -> bool {
        self.nodes == other.nodes
    }
}

/// Values attached to the nodes of a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<T> {
    pub grid: TimeGrid,
    pub values: Vec<T>,
}

impl<T> TimeSeries<T> {
    pub fn new(grid: TimeGrid, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.nodes.len() {
            return Err(Error::mismatch(format!(
                "{} values for a grid with {} nodes",
                values.len(),
                grid.nodes.len()
            )));
        }
        Ok(TimeSeries { grid, values })
    }

    pub fn from_fn(grid: &TimeGrid, f: impl FnMut(f64) -> T) -> Self {
        let values = grid.nodes.iter().copied().map(f).collect();
        TimeSeries { grid: grid.clone(), values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn last(&self) -> &T {
        self.values.last().expect("time series always has nodes")
    }
}

impl<T: Clone> TimeSeries<T> {
    pub fn truncated(&self, idx: usize) -> Result<Self> {
        let grid = self.grid.truncated(idx)?;
        Ok(TimeSeries { grid, values: self.values[..=idx].to_vec() })
    }

    /// Values read from node `idx` backwards, on [`TimeGrid::reversed`].
    pub fn reversed(&self, idx: usize) -> Result<Self> {
        let grid = self.grid.reversed(idx)?;
        let values = (0..=idx).rev().map(|k| self.values[k].clone()).collect();
        Ok(TimeSeries { grid, values })
    }
}

/// b_j = (j+1)^{1-β} - j^{1-β}, j = 0..M-1.
#[derive(Debug, Clone, PartialEq)]
pub struct L1Weights {
    pub beta: f64,
    pub coefficients: Vec<f64>,
}

pub fn l1_weights(beta: f64, m: usize) -> Result<L1Weights> {
    check_order(beta)?;
    if m == 0 {
        return Err(Error::invalid("L1 weights need M >= 1"));
    }
    let e = 1.0 - beta;
    let coefficients = (0..m).map(|j| ((j + 1) as f64).powf(e) - (j as f64).powf(e)).collect();
    Ok(L1Weights { beta, coefficients })
}

/// The L1 discretisation
///
/// D^β u(t_n) = Σ_{j<n} a_{n,j} (u_{j+1} - u_j)
///
/// with a_{n,j} = [(t_n - t_j)^{1-β} - (t_n - t_{j+1})^{1-β}] / (Γ(2-β) (t_{j+1} - t_j)).
#[derive(Debug, Clone)]
pub struct L1Stencil {
    grid: TimeGrid,
    kind: StencilKind,
}

#[derive(Debug, Clone)]
enum StencilKind {
    Uniform { scale: f64, b: Vec<f64> },
    General { rows: Vec<Vec<f64>> },
}

impl L1Stencil {
    pub fn new(grid: &TimeGrid) -> Self {
        let beta = grid.beta;
        let g2 = gamma(2.0 - beta);
        let m = grid.steps();
        let kind = if grid.is_uniform() {
            let dt = grid.t_final / m as f64;
            let b = l1_weights(beta, m).expect("grid order already validated").coefficients;
            StencilKind::Uniform { scale: dt.powf(-beta) / g2, b }
        } else {
            let e = 1.0 - beta;
            let t = &grid.nodes;
            let rows = (0..=m)
                .map(|n| {
                    (0..n)
                        .map(|j| ((t[n] - t[j]).powf(e) - (t[n] - t[j + 1]).powf(e)) / (g2 * (t[j + 1] - t[j])))
                        .collect()
                })
                .collect();
            StencilKind::General { rows }
        };
        L1Stencil { grid: grid.clone(), kind }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// a_{n,j} for 0 ≤ j < n.
    #[inline]
    pub fn coeff(&self, n: usize, j: usize) -> f64 {
        debug_assert!(j < n);
        match &self.kind {
            StencilKind::Uniform { scale, b } => scale * b[n - 1 - j],
            StencilKind::General { rows } => rows[n][j],
        }
    }

    /// The coefficient multiplying the unknown u_n.
    #[inline]
    pub fn diag(&self, n: usize) -> f64 {
        self.coeff(n, n - 1)
    }

    /// Σ_{j<n-1} a_{n,j} (u_{j+1} - u_j): everything except the newest increment.
    pub fn history(&self, n: usize, u: &[f64]) -> f64 {
        (0..n.saturating_sub(1)).map(|j| self.coeff(n, j) * (u[j + 1] - u[j])).sum()
    }

    pub fn apply(&self, n: usize, u: &[f64]) -> f64 {
        (0..n).map(|j| self.coeff(n, j) * (u[j + 1] - u[j])).sum()
    }
}

/// L1 Caputo derivative at t_1..t_M. The value at t_0 is absent.
pub fn caputo_forward(u: &TimeSeries<f64>, beta: f64) -> Result<TimeSeries<Option<f64>>> {
    check_order(beta)?;
    let grid = u.grid.with_beta(beta)?;
    let stencil = L1Stencil::new(&grid);
    let values = (0..u.len()).map(|n| (n > 0).then(|| stencil.apply(n, &u.values))).collect();
    Ok(TimeSeries { grid: u.grid.clone(), values })
}

/// Backward Caputo derivative from the terminal node `tau_index`, computed as
/// the forward derivative of the reversed series. Absent at `tau_index`.
pub fn caputo_backward(v: &TimeSeries<f64>, beta: f64, tau_index: usize) -> Result<TimeSeries<Option<f64>>> {
    let rev = v.reversed(tau_index)?;
    let fwd = caputo_forward(&rev, beta)?;
    let values = (0..=tau_index).map(|i| fwd.values[tau_index - i]).collect();
    Ok(TimeSeries { grid: v.grid.truncated(tau_index)?, values })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RlMethod {
    /// Piecewise-constant data, left endpoint value on each interval.
    Rectangle,
    /// Piecewise-linear data.
    #[default]
    Trapezoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// (I^α u)(t) = (1/Γ(α)) ∫_0^t (t-s)^{α-1} u(s) ds
    Forward,
    /// (I^α u)(t) = (1/Γ(α)) ∫_t^T (s-t)^{α-1} u(s) ds with T the last node
    Backward,
}

/// Weights w_0..w_n with (I^α u)(t_n) ≈ Σ w_j u_j, forward direction.
pub fn rl_node_weights(nodes: &[f64], n: usize, order: f64, method: RlMethod) -> Vec<f64> {
    let mut w = vec![0.0; n + 1];
    let ga = gamma(order);
    let tn = nodes[n];
    for j in 0..n {
        let a = tn - nodes[j + 1];
        let b = tn - nodes[j];
        let h = nodes[j + 1] - nodes[j];
        let w0 = (b.powf(order) - a.powf(order)) / order;
        match method {
            RlMethod::Rectangle => w[j] += w0 / ga,
            RlMethod::Trapezoid => {
                let w1 = (b.powf(order + 1.0) - a.powf(order + 1.0)) / (order + 1.0);
                w[j] += (w1 - a * w0) / (h * ga);
                w[j + 1] += (b * w0 - w1) / (h * ga);
            }
        }
    }
    w
}

pub fn rl_integral(u: &TimeSeries<f64>, order: f64, direction: Direction, method: RlMethod) -> Result<TimeSeries<f64>> {
    if !(order > 0.0 && order < 1.0) {
        return Err(Error::invalid(format!("Riemann-Liouville order must lie in (0, 1), got {order}")));
    }
    let forward = |s: &TimeSeries<f64>| -> Vec<f64> {
        (0..s.len())
            .map(|n| {
                let w = rl_node_weights(s.grid.nodes(), n, order, method);
                w.iter().zip(&s.values).map(|(a, b)| a * b).sum()
            })
            .collect()
    };
    let values = match direction {
        Direction::Forward => forward(u),
        Direction::Backward => {
            let last = u.len() - 1;
            let mut v = forward(&u.reversed(last)?);
            v.reverse();
            v
        }
    };
    Ok(TimeSeries { grid: u.grid.clone(), values })
}

/// Trapezoid rule for ∫_0^T over the grid nodes.
pub fn trapezoid(grid: &TimeGrid, values: &[f64]) -> f64 {
    let t = grid.nodes();
    (0..grid.steps()).map(|j| 0.5 * (t[j + 1] - t[j]) * (values[j] + values[j + 1])).sum()
}

/// |LHS - RHS| of
///
/// ∫_0^τ v ∂^β u + u(0) (Ĩ^{1-β} v)(0) = ∫_0^τ u ∂̃^β v + v(τ) (I^{1-β} u)(τ)
///
/// with τ the final node. The absent endpoint Caputo values are taken as 0,
/// their limit for C¹ data.
pub fn integration_by_parts_residual(u: &TimeSeries<f64>, v: &TimeSeries<f64>, beta: f64) -> Result<f64> {
    if !u.grid.same_nodes(&v.grid) {
        return Err(Error::mismatch("integration by parts needs both series on the same grid"));
    }
    let last = u.len() - 1;
    let du = caputo_forward(u, beta)?;
    let dv = caputo_backward(v, beta, last)?;
    let lhs_int: Vec<f64> = (0..=last).map(|n| v.values[n] * du.values[n].unwrap_or(0.0)).collect();
    let rhs_int: Vec<f64> = (0..=last).map(|n| u.values[n] * dv.values[n].unwrap_or(0.0)).collect();
    let iv0 = rl_integral(v, 1.0 - beta, Direction::Backward, RlMethod::Trapezoid)?.values[0];
    let iu_tau = rl_integral(u, 1.0 - beta, Direction::Forward, RlMethod::Trapezoid)?.values[last];
    let lhs = trapezoid(&u.grid, &lhs_int) + u.values[0] * iv0;
    let rhs = trapezoid(&u.grid, &rhs_int) + v.values[last] * iu_tau;
    Ok((lhs - rhs).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reversed_grid_is_mirror() {
        let g = TimeGrid::graded(2.0, 8, 0.5, 2.0).unwrap();
        let r = g.reversed(6).unwrap();
        let tau = g.nodes()[6];
        for k in 0..=6 {
            assert!((r.nodes()[k] - (tau - g.nodes()[6 - k])).abs() < 1e-15);
        }
        assert_eq!(r.grading_exponent(), None);
    }

    #[test]
    fn uniform_stencil_matches_general_formula() {
        let g = TimeGrid::uniform(1.3, 12, 0.4).unwrap();
        let general = TimeGrid::from_nodes(g.nodes().to_vec(), 0.4).unwrap();
        let a = L1Stencil::new(&g);
        let b = L1Stencil::new(&general);
        for n in 1..=12 {
            for j in 0..n {
                let (x, y) = (a.coeff(n, j), b.coeff(n, j));
                assert!((x - y).abs() <= 1e-12 * x.abs(), "n={n} j={j}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn rl_weights_exact_on_affine() {
        let g = TimeGrid::graded(1.0, 10, 0.5, 1.7).unwrap();
        let alpha = 0.35;
        let n = 10;
        let w = rl_node_weights(g.nodes(), n, alpha, RlMethod::Trapezoid);
        let got: f64 = w.iter().zip(g.nodes()).map(|(w, t)| w * (2.0 + 3.0 * t)).sum();
        // I^α 1 = t^α/Γ(1+α), I^α s = t^{1+α}/Γ(2+α)
        let want = 2.0 / gamma(1.0 + alpha) + 3.0 / gamma(2.0 + alpha);
        assert!((got - want).abs() < 1e-14);
    }
}
