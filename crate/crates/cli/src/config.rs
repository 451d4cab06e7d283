//! Experiment configuration files (JSON).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::expr::{Expr, Scope};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Heat,
    Hj,
    Fp,
    Duality,
    MlTable,
    Convergence,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Heat => "heat",
            Kind::Hj => "hj",
            Kind::Fp => "fp",
            Kind::Duality => "duality",
            Kind::MlTable => "ml-table",
            Kind::Convergence => "convergence",
        }
    }
}

impl std::str::FromStr for Kind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        [Kind::Heat, Kind::Hj, Kind::Fp, Kind::Duality, Kind::MlTable, Kind::Convergence]
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown experiment kind {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HamiltonianKind {
    Quadratic,
    Power,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianConfig {
    pub kind: HamiltonianKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// h(x); spatial expression.
    #[serde(default = "one")]
    pub coefficient: String,
}

fn one() -> String {
    "1".into()
}

/// Field data: an expression or a generated field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Data {
    Expr(String),
    Generated(Generated),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Generated {
    /// Random trigonometric polynomial drawn from the run seed.
    RandomTrig { max_mode: i64, amplitude: f64 },
    /// Unit-mass periodic bump.
    Bump { center: Vec<f64>, width: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    L1,
    Mild,
    Spectral,
    Upwind,
    Central,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Init {
    Constant,
    LinearHeat,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_picard: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<Scheme>,
    /// Continuation window length; a single Picard solve when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<Init>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StudyTarget {
    Caputo,
    Heat,
    Hj,
    Duality,
}

impl StudyTarget {
    pub fn name(self) -> &'static str {
        match self {
            StudyTarget::Caputo => "caputo",
            StudyTarget::Heat => "heat",
            StudyTarget::Hj => "hj",
            StudyTarget::Duality => "duality",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub target: StudyTarget,
    /// Power of t for the Caputo study.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// Double n together with the number of steps.
    #[serde(default)]
    pub refine_space: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<Kind>,
    pub beta: f64,
    /// Second Mittag-Leffler parameter for ml-table.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    /// Arguments for ml-table.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<Vec<f64>>,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_t_final")]
    pub t_final: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
    /// Grading exponent r of t_k = T(k/M)^r; 1 is uniform.
    #[serde(default = "default_grading")]
    pub grading: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<HamiltonianConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u0: Option<Data>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terminal: Option<Data>,
    /// Use the built-in manufactured solution u = t^β cos 2πx.
    #[serde(default)]
    pub manufactured: bool,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub study: Option<StudyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default)]
    pub seed: u64,
}

fn default_sigma() -> f64 {
    1.0
}
fn default_dim() -> usize {
    1
}
fn default_n() -> usize {
    32
}
fn default_t_final() -> f64 {
    1.0
}
fn default_steps() -> usize {
    64
}
fn default_grading() -> f64 {
    1.0
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("malformed config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn space(&self) -> Scope {
        Scope { dim: self.dim, time: false }
    }

    pub fn space_time(&self) -> Scope {
        Scope { dim: self.dim, time: true }
    }

    /// Checks everything that can be checked without solving.
    pub fn validate(&self, kind: Kind) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if let Some(k) = self.kind {
            if k != kind {
                return bad(format!("config is for kind {}, but {} was requested", k.name(), kind.name()));
            }
        }
        if kind == Kind::MlTable {
            if !(self.beta > 0.0 && self.beta <= 1.0) {
                return bad(format!("beta must lie in (0, 1], got {}", self.beta));
            }
            if !self.b.is_none_or(|b| b > 0.0 && b.is_finite()) {
                return bad("b must be positive".into());
            }
            match &self.z {
                Some(z) if !z.is_empty() => {
                    if let Some(v) = z.iter().find(|v| !(**v <= 0.0 && v.is_finite())) {
                        return bad(format!("z values must be finite and <= 0, got {v}"));
                    }
                }
                _ => return bad("ml-table needs a nonempty z list".into()),
            }
            return Ok(());
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return bad(format!("beta must lie in (0, 1), got {}", self.beta));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be positive, got {}", self.sigma));
        }
        if !(self.dim == 1 || self.dim == 2) {
            return bad(format!("dim must be 1 or 2, got {}", self.dim));
        }
        if self.n < 8 || !self.n.is_multiple_of(2) {
            return bad(format!("n must be even and at least 8, got {}", self.n));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return bad(format!("t_final must be positive, got {}", self.t_final));
        }
        if self.steps == 0 {
            return bad("steps must be at least 1".into());
        }
        if !(self.grading >= 1.0 && self.grading.is_finite()) {
            return bad(format!("grading must be >= 1, got {}", self.grading));
        }
        if let Some(tol) = self.solver.tol {
            if !(tol > 0.0) {
                return bad(format!("solver.tol must be positive, got {tol}"));
            }
        }
        if self.solver.max_picard == Some(0) {
            return bad("solver.max_picard must be at least 1".into());
        }
        if let Some(w) = self.solver.window {
            if !(w > 0.0 && w <= self.t_final) {
                return bad(format!("solver.window must lie in (0, t_final], got {w}"));
            }
        }
        if let Some(h) = &self.hamiltonian {
            match (h.kind, h.gamma) {
                (HamiltonianKind::Power, None) => return bad("power Hamiltonian needs gamma".into()),
                (HamiltonianKind::Power, Some(g)) if !(g > 1.0) => return bad(format!("gamma must exceed 1, got {g}")),
                (HamiltonianKind::Quadratic, Some(g)) if g != 2.0 => return bad("quadratic Hamiltonian has gamma = 2".into()),
                _ => {}
            }
        }
        self.check_expressions()?;
        if let Some(d) = &self.drift {
            if d.len() != self.dim {
                return bad(format!("drift needs {} components, got {}", self.dim, d.len()));
            }
        }
        let scheme = self.solver.scheme;
        let needs_hj = matches!(kind, Kind::Hj | Kind::Duality);
        if needs_hj && self.hamiltonian.is_none() {
            return bad(format!("{} needs a hamiltonian", kind.name()));
        }
        if self.manufactured && (self.u0.is_some() || self.potential.is_some()) {
            return bad("manufactured runs fix u0 and the potential; remove them".into());
        }
        match kind {
            Kind::Heat => {
                if self.u0.is_none() {
                    return bad("heat needs u0".into());
                }
                if !matches!(scheme, None | Some(Scheme::L1) | Some(Scheme::Mild)) {
                    return bad("heat supports schemes l1 and mild".into());
                }
                if scheme == Some(Scheme::Mild) && self.drift.is_some() {
                    return bad("the mild scheme does not support drift".into());
                }
            }
            Kind::Hj | Kind::Duality | Kind::Fp => {
                if needs_hj && !self.manufactured && self.u0.is_none() {
                    return bad(format!("{} needs u0 unless manufactured", kind.name()));
                }
                if kind != Kind::Hj {
                    if self.terminal.is_none() {
                        return bad(format!("{} needs terminal data", kind.name()));
                    }
                    if !matches!(scheme, None | Some(Scheme::Spectral) | Some(Scheme::Upwind) | Some(Scheme::Central)) {
                        return bad("density schemes are spectral, upwind and central".into());
                    }
                }
                if kind == Kind::Fp && self.drift.is_some() && self.hamiltonian.is_some() {
                    return bad("give either an explicit drift or a hamiltonian, not both".into());
                }
                if kind == Kind::Fp && self.hamiltonian.is_some() && !self.manufactured && self.u0.is_none() {
                    return bad("deriving the drift from a hamiltonian needs u0 or manufactured".into());
                }
            }
            Kind::Convergence => {
                let Some(study) = &self.study else {
                    return bad("convergence needs a study section".into());
                };
                if let Some(l) = study.levels {
                    if l < 3 {
                        return bad(format!("a study needs at least 3 levels, got {l}"));
                    }
                }
                let base = match study.target {
                    StudyTarget::Caputo => {
                        if !study.gamma.is_none_or(|g| g >= 0.0 && g.is_finite()) {
                            return bad("study.gamma must be >= 0".into());
                        }
                        None
                    }
                    StudyTarget::Heat => Some(Kind::Heat),
                    StudyTarget::Hj => Some(Kind::Hj),
                    StudyTarget::Duality => Some(Kind::Duality),
                };
                if let Some(k) = base {
                    let mut inner = self.clone();
                    inner.kind = None;
                    if k == Kind::Heat && inner.solver.scheme.is_none() {
                        inner.solver.scheme = Some(Scheme::L1);
                    }
                    inner.validate(k)?;
                }
            }
            Kind::MlTable => unreachable!(),
        }
        Ok(())
    }

    fn check_expressions(&self) -> Result<(), CliError> {
        let parse = |name: &str, src: &str, scope: Scope| {
            Expr::parse(src, scope).map(|_| ()).map_err(|e| CliError::Config(format!("{name}: {e}")))
        };
        if let Some(h) = &self.hamiltonian {
            parse("hamiltonian.coefficient", &h.coefficient, self.space())?;
        }
        for (name, data) in [("u0", &self.u0), ("terminal", &self.terminal)] {
            match data {
                Some(Data::Expr(s)) => parse(name, s, self.space())?,
                Some(Data::Generated(Generated::Bump { center, width })) => {
                    if center.len() != self.dim {
                        return Err(CliError::Config(format!("{name}: bump center needs {} coordinates", self.dim)));
                    }
                    if !(*width > 0.0) {
                        return Err(CliError::Config(format!("{name}: bump width must be positive")));
                    }
                }
                Some(Data::Generated(Generated::RandomTrig { max_mode, amplitude }))
                    if *max_mode < 1 || !amplitude.is_finite() =>
                {
                    return Err(CliError::Config(format!("{name}: random_trig needs max_mode >= 1 and a finite amplitude")));
                }
                _ => {}
            }
        }
        for (name, src) in [("source", &self.source), ("potential", &self.potential)] {
            if let Some(s) = src {
                parse(name, s, self.space_time())?;
            }
        }
        for (j, s) in self.drift.iter().flatten().enumerate() {
            parse(&format!("drift[{j}]"), s, self.space_time())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ExperimentConfig::from_json(r#"{"beta": 0.5, "betta": 0.4}"#).unwrap_err();
        assert!(err.to_string().contains("betta"), "{err}");
        let err = ExperimentConfig::from_json(r#"{"beta": 0.5, "solver": {"tolerance": 1}}"#).unwrap_err();
        assert!(err.to_string().contains("tolerance"), "{err}");
    }

    #[test]
    fn defaults_fill_the_grid() {
        let c = ExperimentConfig::from_json(r#"{"beta": 0.5, "u0": "cos(2*pi*x)"}"#).unwrap();
        assert_eq!((c.dim, c.n, c.steps, c.t_final, c.grading, c.sigma), (1, 32, 64, 1.0, 1.0, 1.0));
        c.validate(Kind::Heat).unwrap();
    }

    #[test]
    fn generated_data_parses() {
        let c = ExperimentConfig::from_json(r#"{"beta": 0.5, "u0": {"random_trig": {"max_mode": 3, "amplitude": 1}}, "terminal": {"bump": {"center": [0.5], "width": 0.1}}}"#).unwrap();
        assert!(matches!(c.u0, Some(Data::Generated(Generated::RandomTrig { max_mode: 3, .. }))));
        assert!(matches!(c.terminal, Some(Data::Generated(Generated::Bump { .. }))));
    }

    #[test]
    fn kind_checks() {
        let c = ExperimentConfig::from_json(r#"{"beta": 1.2, "u0": "1"}"#).unwrap();
        assert!(c.validate(Kind::Heat).is_err());
        let c = ExperimentConfig::from_json(r#"{"kind": "hj", "beta": 0.5, "u0": "1"}"#).unwrap();
        assert!(c.validate(Kind::Heat).is_err());
        assert!(c.validate(Kind::Hj).is_err(), "no hamiltonian");
        let c = ExperimentConfig::from_json(r#"{"beta": 0.5, "z": [0, 0.5]}"#).unwrap();
        assert!(c.validate(Kind::MlTable).is_err());
    }
}
