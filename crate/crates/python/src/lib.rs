//! Python bindings.
//!
//! Fields cross the boundary as flat lists in the order of `Torus.points()`,
//! space-time fields as lists of such lists, one per time node.

use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use fracthj_core::adjoint::{self, FpProblem, FpScheme};
use fracthj_core::fixtures;
use fracthj_core::frac_calc::{caputo_forward, TimeGrid, TimeSeries};
use fracthj_core::hamiltonian::{make_hamiltonian, Hamiltonian, HamiltonianSpec};
use fracthj_core::hj::{self, HjProblem, HjSolution, PicardInit};
use fracthj_core::linear::{self, LinearProblem, SpaceTimeField};
use fracthj_core::mittag_leffler;
use fracthj_core::torus::{Field, TorusGrid};

create_exception!(fracthj, NonConvergenceError, PyRuntimeError);
create_exception!(fracthj, StabilityError, PyRuntimeError);

fn py_err(e: fracthj_core::Error) -> PyErr {
    use fracthj_core::Error as E;
    let msg = e.to_string();
    match e {
        E::NonContraction { .. } => NonConvergenceError::new_err(msg),
        E::Stability { .. } | E::StepRestriction { .. } => StabilityError::new_err(msg),
        _ => PyValueError::new_err(msg),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for fracthj_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

/// Time nodes 0 = t_0 < ... < t_M = T together with the fractional order.
#[pyclass(name = "TimeGrid", module = "fracthj", frozen)]
pub struct PyTimeGrid(pub TimeGrid);

#[pymethods]
impl PyTimeGrid {
    #[staticmethod]
    fn uniform(t_final: f64, steps: usize, beta: f64) -> PyResult<Self> {
        TimeGrid::uniform(t_final, steps, beta).py().map(Self)
    }

    /// t_k = T (k/M)^r
    #[staticmethod]
    fn graded(t_final: f64, steps: usize, beta: f64, r: f64) -> PyResult<Self> {
        TimeGrid::graded(t_final, steps, beta, r).py().map(Self)
    }

    #[getter]
    fn nodes(&self) -> Vec<f64> {
        self.0.nodes().to_vec()
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.0.beta()
    }

    #[getter]
    fn steps(&self) -> usize {
        self.0.steps()
    }

    #[getter]
    fn t_final(&self) -> f64 {
        self.0.t_final()
    }

    fn __repr__(&self) -> String {
        format!("TimeGrid(T={}, steps={}, beta={})", self.0.t_final(), self.0.steps(), self.0.beta())
    }
}

/// Uniform grid on the unit torus, 1D or 2D with n points per side.
#[pyclass(name = "Torus", module = "fracthj", frozen)]
pub struct PyTorus(pub TorusGrid);

#[pymethods]
impl PyTorus {
    #[new]
    fn new(dim: usize, n: usize) -> PyResult<Self> {
        TorusGrid::new(dim, n).py().map(Self)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    /// Grid points as (x, y) pairs; y is 0 in 1D.
    fn points(&self) -> Vec<(f64, f64)> {
        (0..self.0.len()).map(|i| self.0.point(i)).map(|p| (p[0], p[1])).collect()
    }

    /// Samples a Python callable f(x, y) on the grid.
    fn sample(&self, f: &Bound<'_, PyAny>) -> PyResult<Vec<f64>> {
        self.points().into_iter().map(|(x, y)| f.call1((x, y))?.extract::<f64>()).collect()
    }

    /// Unit-mass periodic bump around `center`.
    fn bump(&self, center: Vec<f64>, width: f64) -> PyResult<Vec<f64>> {
        let c = [center.first().copied().unwrap_or(0.0), center.get(1).copied().unwrap_or(0.0)];
        Ok(fixtures::dirac_bump(self.0, c, width).py()?.values)
    }

    fn __repr__(&self) -> String {
        format!("Torus(dim={}, n={})", self.0.dim(), self.0.n())
    }
}

fn field(torus: TorusGrid, values: Vec<f64>) -> PyResult<Field> {
    Field::new(torus, values).py()
}

fn space_time(grid: &TimeGrid, torus: TorusGrid, values: Vec<Vec<f64>>) -> PyResult<SpaceTimeField> {
    let fields = values.into_iter().map(|v| field(torus, v)).collect::<PyResult<Vec<_>>>()?;
    TimeSeries::new(grid.clone(), fields).py()
}

/// A field sampled at every time node.
#[pyclass(name = "Solution", module = "fracthj", frozen)]
pub struct PySolution(pub SpaceTimeField);

#[pymethods]
impl PySolution {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.0.grid.nodes().to_vec()
    }

    #[getter]
    fn values(&self) -> Vec<Vec<f64>> {
        self.0.values.iter().map(|f| f.values.clone()).collect()
    }

    /// Values at time node k; negative k counts from the end.
    fn at(&self, k: isize) -> PyResult<Vec<f64>> {
        let len = self.0.values.len() as isize;
        let idx = if k < 0 { len + k } else { k };
        if !(0..len).contains(&idx) {
            return Err(PyValueError::new_err(format!("time index {k} out of range")));
        }
        Ok(self.0.values[idx as usize].values.clone())
    }

    fn sup_norm(&self) -> f64 {
        linear::sup_norm(&self.0)
    }

    /// Largest pointwise distance to another solution on the same grids.
    fn distance(&self, other: PyRef<'_, PySolution>) -> PyResult<f64> {
        linear::max_distance(&self.0, &other.0).py()
    }

    fn __len__(&self) -> usize {
        self.0.values.len()
    }
}

/// H(x, p) = h(x)|p|² or h(x){(1 + |p|²)^{γ/2} - 1}.
#[pyclass(name = "Hamiltonian", module = "fracthj", frozen)]
pub struct PyHamiltonian(pub Hamiltonian);

#[pymethods]
impl PyHamiltonian {
    #[staticmethod]
    fn quadratic(torus: PyRef<'_, PyTorus>, coefficient: Vec<f64>) -> PyResult<Self> {
        let coefficient = field(torus.0, coefficient)?;
        make_hamiltonian(HamiltonianSpec::Quadratic { coefficient }).py().map(Self)
    }

    #[staticmethod]
    fn power(torus: PyRef<'_, PyTorus>, gamma: f64, coefficient: Vec<f64>) -> PyResult<Self> {
        let coefficient = field(torus.0, coefficient)?;
        make_hamiltonian(HamiltonianSpec::Power { gamma, coefficient }).py().map(Self)
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.0.gamma()
    }
}

/// ∂^β u - σΔu + H(x, Du) = V, u(0) = u0.
#[pyclass(name = "HjProblem", module = "fracthj", frozen)]
pub struct PyHjProblem {
    pub problem: HjProblem,
    exact: Option<SpaceTimeField>,
}

#[pymethods]
impl PyHjProblem {
    #[new]
    #[pyo3(signature = (grid, torus, sigma, hamiltonian, u0, potential=None, tol=1e-10, max_picard=60, linear_heat_start=false))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        grid: PyRef<'_, PyTimeGrid>,
        torus: PyRef<'_, PyTorus>,
        sigma: f64,
        hamiltonian: PyRef<'_, PyHamiltonian>,
        u0: Vec<f64>,
        potential: Option<Vec<Vec<f64>>>,
        tol: f64,
        max_picard: usize,
        linear_heat_start: bool,
    ) -> PyResult<Self> {
        let mut p = HjProblem::new(grid.0.clone(), sigma, hamiltonian.0.clone(), field(torus.0, u0)?).with_tolerance(tol, max_picard);
        if let Some(v) = potential {
            p = p.with_potential(space_time(&grid.0, torus.0, v)?);
        }
        if linear_heat_start {
            p = p.with_init(PicardInit::LinearHeat);
        }
        p.validate().py()?;
        Ok(PyHjProblem { problem: p, exact: None })
    }

    /// Problem with exact solution u = t^β cos 2πx.
    #[staticmethod]
    fn manufactured(grid: PyRef<'_, PyTimeGrid>, sigma: f64, hamiltonian: PyRef<'_, PyHamiltonian>) -> PyResult<Self> {
        let (problem, exact) = fixtures::manufactured_hj(grid.0.clone(), sigma, hamiltonian.0.clone());
        problem.validate().py()?;
        Ok(PyHjProblem { problem, exact: Some(exact) })
    }

    /// The exact solution of a manufactured problem, else None.
    fn exact(&self) -> Option<PySolution> {
        self.exact.clone().map(PySolution)
    }

    /// Picard iteration, or windowed continuation when `window` is given.
    #[pyo3(signature = (window=None))]
    fn solve(&self, py: Python<'_>, window: Option<f64>) -> PyResult<PyHjSolution> {
        let p = &self.problem;
        let s = py.detach(|| match window {
            Some(w) => hj::solve_hj_continued(p, w),
            None => hj::solve_hj_picard(p),
        });
        s.py().map(PyHjSolution)
    }

    #[getter]
    fn outside_guarantee(&self) -> bool {
        self.problem.outside_guarantee()
    }
}

#[pyclass(name = "HjSolution", module = "fracthj", frozen)]
pub struct PyHjSolution(pub HjSolution);

#[pymethods]
impl PyHjSolution {
    #[getter]
    fn u(&self) -> PySolution {
        PySolution(self.0.u.clone())
    }

    #[getter]
    fn converged(&self) -> bool {
        self.0.converged
    }

    /// Sup-norm Picard updates of the last window.
    #[getter]
    fn trace(&self) -> Vec<f64> {
        self.0.trace.sup.clone()
    }

    #[getter]
    fn windows(&self) -> usize {
        self.0.window_ends.len()
    }

    fn gradient_norm(&self, p: f64) -> PyResult<f64> {
        hj::gradient_lp_norm(&self.0.u, p).py()
    }
}

fn scheme(name: &str) -> PyResult<FpScheme> {
    match name {
        "spectral" => Ok(FpScheme::Spectral),
        "upwind" => Ok(FpScheme::Upwind),
        "central" => Ok(FpScheme::CentralAdvective),
        _ => Err(PyValueError::new_err(format!("unknown scheme {name:?}; use spectral, upwind or central"))),
    }
}

/// Heat problem ∂^β u - σΔu = f, solved by the L1 scheme or the
/// Mittag-Leffler mild formula.
#[pyfunction]
#[pyo3(signature = (grid, torus, sigma, u0, source=None, scheme="l1"))]
fn solve_heat(
    py: Python<'_>,
    grid: PyRef<'_, PyTimeGrid>,
    torus: PyRef<'_, PyTorus>,
    sigma: f64,
    u0: Vec<f64>,
    source: Option<Vec<Vec<f64>>>,
    scheme: &str,
) -> PyResult<PySolution> {
    let mut p = LinearProblem::new(grid.0.clone(), sigma, field(torus.0, u0)?);
    if let Some(f) = source {
        p = p.with_source(space_time(&grid.0, torus.0, f)?);
    }
    let mild = match scheme {
        "l1" => false,
        "mild" => true,
        _ => return Err(PyValueError::new_err(format!("unknown scheme {scheme:?}; use l1 or mild"))),
    };
    let u = py.detach(|| if mild { linear::solve_heat_mild(&p) } else { linear::solve_heat_l1(&p) });
    u.py().map(PySolution)
}

/// Adjoint density of an HJ solution, solved backward from ρ(T) = terminal.
#[pyfunction]
#[pyo3(signature = (problem, solution, terminal, scheme="spectral"))]
fn solve_fp(
    py: Python<'_>,
    problem: PyRef<'_, PyHjProblem>,
    solution: PyRef<'_, PyHjSolution>,
    terminal: Vec<f64>,
    scheme: &str,
) -> PyResult<PySolution> {
    let torus = problem.problem.u0.grid();
    let fp = FpProblem::from_hj(&problem.problem, &solution.0.u, field(torus, terminal)?).py()?;
    let s = self::scheme(scheme)?;
    py.detach(|| adjoint::solve_fp_backward(&fp, s)).py().map(PySolution)
}

#[pyfunction]
fn mass_deviation(rho: PyRef<'_, PySolution>) -> f64 {
    adjoint::mass_deviation(&rho.0)
}

#[pyfunction]
fn min_density(rho: PyRef<'_, PySolution>) -> f64 {
    adjoint::min_density(&rho.0)
}

/// Signed residual of the HJ / Fokker-Planck duality identity.
#[pyfunction]
fn duality_residual(problem: PyRef<'_, PyHjProblem>, solution: PyRef<'_, PyHjSolution>, rho: PyRef<'_, PySolution>) -> PyResult<f64> {
    adjoint::duality_residual(&solution.0.u, &rho.0, &problem.problem).py()
}

/// ∬ |Du|^γ ρ dx dt.
#[pyfunction]
fn crossed_quantity(solution: PyRef<'_, PyHjSolution>, rho: PyRef<'_, PySolution>, gamma: f64) -> PyResult<f64> {
    adjoint::crossed_quantity(&solution.0.u, &rho.0, gamma).py()
}

/// E_{α,b}(z) for α in (0, 1], b > 0, z ≤ 0.
#[pyfunction]
#[pyo3(signature = (alpha, z, b=1.0))]
fn ml(alpha: f64, z: f64, b: f64) -> PyResult<f64> {
    Ok(mittag_leffler::ml(alpha, b, z).py()?.value)
}

#[pyfunction]
fn mainardi_moment(beta: f64, r: f64) -> PyResult<f64> {
    mittag_leffler::mainardi_moment(beta, r).py()
}

/// L1 Caputo derivative of nodal values; None at t = 0.
#[pyfunction]
fn caputo(grid: PyRef<'_, PyTimeGrid>, values: Vec<f64>) -> PyResult<Vec<Option<f64>>> {
    let u = TimeSeries::new(grid.0.clone(), values).py()?;
    Ok(caputo_forward(&u, grid.0.beta()).py()?.values)
}

/// Runs an experiment config (JSON text) as the command-line tool would and
/// writes its outputs into `out_dir`. Returns the run status.
#[pyfunction]
fn run_experiment(kind: &str, config: &str, out_dir: &str) -> PyResult<String> {
    use fracthj_cli::CliError;
    let to_py = |e: CliError| match e {
        CliError::NonConvergence(_) => NonConvergenceError::new_err(e.to_string()),
        CliError::Stability(_) => StabilityError::new_err(e.to_string()),
        CliError::Io(_) => PyRuntimeError::new_err(e.to_string()),
        CliError::Config(_) => PyValueError::new_err(e.to_string()),
    };
    let kind: fracthj_cli::Kind = kind.parse().map_err(PyValueError::new_err)?;
    let cfg = fracthj_cli::ExperimentConfig::from_json(config).map_err(to_py)?;
    let outcome = fracthj_cli::run(kind, &cfg, None).map_err(to_py)?;
    let status = outcome.error.as_ref().map_or("ok", CliError::class);
    outcome.outputs.write(std::path::Path::new(out_dir), kind, &cfg, status).map_err(to_py)?;
    Ok(status.to_string())
}

#[pymodule]
pub fn fracthj(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("NonConvergenceError", m.py().get_type::<NonConvergenceError>())?;
    m.add("StabilityError", m.py().get_type::<StabilityError>())?;
    m.add_class::<PyTimeGrid>()?;
    m.add_class::<PyTorus>()?;
    m.add_class::<PySolution>()?;
    m.add_class::<PyHamiltonian>()?;
    m.add_class::<PyHjProblem>()?;
    m.add_class::<PyHjSolution>()?;
    for f in [
        wrap_pyfunction!(solve_heat, m)?,
        wrap_pyfunction!(solve_fp, m)?,
        wrap_pyfunction!(mass_deviation, m)?,
        wrap_pyfunction!(min_density, m)?,
        wrap_pyfunction!(duality_residual, m)?,
        wrap_pyfunction!(crossed_quantity, m)?,
        wrap_pyfunction!(ml, m)?,
        wrap_pyfunction!(mainardi_moment, m)?,
        wrap_pyfunction!(caputo, m)?,
        wrap_pyfunction!(run_experiment, m)?,
    ] {
        m.add_function(f)?;
    }
    Ok(())
}
