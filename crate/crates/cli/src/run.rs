//! Dispatch from a validated config to the solvers.

use fracthj_core::adjoint::{
    admissible_dt, crossed_quantity, duality_terms, mass_deviation, min_density, solve_fp_backward, FpProblem, FpScheme,
};
use fracthj_core::fixtures::{dirac_bump, manufactured_hj, random_trig_field};
use fracthj_core::frac_calc::{caputo_forward, TimeGrid, TimeSeries};
use fracthj_core::hamiltonian::{make_hamiltonian, Hamiltonian, HamiltonianSpec};
use fracthj_core::hj::{
    comparison_bound_gap, fixed_point_residual, gradient_lp_norm, solve_hj_continued, solve_hj_picard, HjProblem,
    HjSolution, PicardInit,
};
use fracthj_core::linear::{
    max_distance, max_principle_gap, solve_heat_l1, solve_heat_mild, sup_norm, LinearProblem, SpaceTimeField,
    VectorSeries,
};
use fracthj_core::mittag_leffler::{gamma_fn, ml};
use fracthj_core::torus::{Field, TorusGrid};

use crate::config::{Data, ExperimentConfig, Generated, HamiltonianKind, Init, Kind, Scheme, StudyTarget};
use crate::expr::Expr;
use crate::output::{Cell, Outputs, Table};
use crate::CliError;

pub const SOLUTION: &str = "solution.csv";
pub const DIAGNOSTICS: &str = "diagnostics.csv";
pub const CONVERGENCE: &str = "convergence.csv";
pub const ML_TABLE: &str = "ml_table.csv";
pub const DEFAULT_LEVELS: usize = 4;

/// Outputs of a run that got far enough to write something. `error` is set
/// when the run still failed, e.g. a Picard solve that hit its iteration cap
/// or a convergence study aborted part way.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub outputs: Outputs,
    pub error: Option<CliError>,
}

impl RunOutcome {
    fn ok(outputs: Outputs) -> Self {
        RunOutcome { outputs, error: None }
    }
}

/// Validates `config` and runs it. An `Err` means nothing should be written.
pub fn run(kind: Kind, config: &ExperimentConfig, levels: Option<usize>) -> Result<RunOutcome, CliError> {
    config.validate(kind)?;
    match kind {
        Kind::MlTable => ml_table(config).map(RunOutcome::ok),
        Kind::Heat => heat(config),
        Kind::Hj => hj(config),
        Kind::Fp => fp(config),
        Kind::Duality => duality(config),
        Kind::Convergence => convergence_study(config, levels),
    }
}

fn time_grid(c: &ExperimentConfig, steps: usize) -> Result<TimeGrid, CliError> {
    Ok(if c.grading == 1.0 {
        TimeGrid::uniform(c.t_final, steps, c.beta)?
    } else {
        TimeGrid::graded(c.t_final, steps, c.beta, c.grading)?
    })
}

fn parse(src: &str, scope: crate::expr::Scope) -> Result<Expr, CliError> {
    Expr::parse(src, scope).map_err(|e| CliError::Config(e.to_string()))
}

fn data_field(c: &ExperimentConfig, data: &Data, grid: TorusGrid, stream: u64) -> Result<Field, CliError> {
    Ok(match data {
        Data::Expr(s) => parse(s, c.space())?.field(grid, 0.0),
        Data::Generated(Generated::RandomTrig { max_mode, amplitude }) => {
            random_trig_field(grid, *max_mode, *amplitude, c.seed.wrapping_mul(1000).wrapping_add(stream))
        }
        Data::Generated(Generated::Bump { center, width }) => {
            dirac_bump(grid, [center[0], center.get(1).copied().unwrap_or(0.0)], *width)?
        }
    })
}

fn space_time(c: &ExperimentConfig, src: &str, tg: &TimeGrid, grid: TorusGrid) -> Result<SpaceTimeField, CliError> {
    let e = parse(src, c.space_time())?;
    Ok(TimeSeries::from_fn(tg, |t| e.field(grid, t)))
}

fn drift(c: &ExperimentConfig, src: &[String], tg: &TimeGrid, grid: TorusGrid) -> Result<VectorSeries, CliError> {
    let exprs: Vec<Expr> = src.iter().map(|s| parse(s, c.space_time())).collect::<Result<_, _>>()?;
    Ok(TimeSeries::from_fn(tg, |t| exprs.iter().map(|e| e.field(grid, t)).collect()))
}

fn hamiltonian(c: &ExperimentConfig, grid: TorusGrid) -> Result<Hamiltonian, CliError> {
    let h = c.hamiltonian.as_ref().ok_or_else(|| CliError::Config("missing hamiltonian".into()))?;
    let coefficient = parse(&h.coefficient, c.space())?.field(grid, 0.0);
    let spec = match h.kind {
        HamiltonianKind::Quadratic => HamiltonianSpec::Quadratic { coefficient },
        HamiltonianKind::Power => HamiltonianSpec::Power { gamma: h.gamma.unwrap_or(2.0), coefficient },
    };
    Ok(make_hamiltonian(spec)?)
}

fn hj_problem(c: &ExperimentConfig, tg: TimeGrid, grid: TorusGrid) -> Result<(HjProblem, Option<SpaceTimeField>), CliError> {
    let h = hamiltonian(c, grid)?;
    let (mut p, exact) = if c.manufactured {
        let (p, exact) = manufactured_hj(tg, c.sigma, h);
        (p, Some(exact))
    } else {
        let u0 = data_field(c, c.u0.as_ref().expect("validated"), grid, 0)?;
        let mut p = HjProblem::new(tg.clone(), c.sigma, h, u0);
        if let Some(v) = &c.potential {
            p = p.with_potential(space_time(c, v, &tg, grid)?);
        }
        (p, None)
    };
    let (tol, max_picard) = (c.solver.tol.unwrap_or(p.tol), c.solver.max_picard.unwrap_or(p.max_picard));
    p = p.with_tolerance(tol, max_picard);
    if c.solver.init == Some(Init::LinearHeat) {
        p = p.with_init(PicardInit::LinearHeat);
    }
    p.validate()?;
    Ok((p, exact))
}

fn solve_hj(c: &ExperimentConfig, p: &HjProblem) -> Result<HjSolution, CliError> {
    Ok(match c.solver.window {
        Some(w) => solve_hj_continued(p, w)?,
        None => solve_hj_picard(p)?,
    })
}

fn not_converged(s: &HjSolution) -> Option<CliError> {
    (!s.converged).then(|| {
        CliError::NonConvergence(format!("Picard iteration hit its cap of {} iterations without converging", s.trace.len()))
    })
}

fn hj_diagnostics(d: &mut Table, report: &mut Vec<String>, s: &HjSolution, p: &HjProblem, exact: Option<&SpaceTimeField>) -> Result<(), CliError> {
    d.series("picard_sup", &s.trace.sup);
    d.series("picard_l2", &s.trace.l2);
    d.series("window_end", &s.window_ends.iter().map(|&k| p.tgrid.nodes()[k]).collect::<Vec<_>>());
    d.scalar("converged", if s.converged { 1.0 } else { 0.0 });
    d.scalar("outside_guarantee", if s.outside_guarantee { 1.0 } else { 0.0 });
    let gap = comparison_bound_gap(&s.u, p);
    let residual = fixed_point_residual(&s.u, p)?;
    let grad = gradient_lp_norm(&s.u, 2.0)?;
    d.scalar("comparison_bound_gap", gap);
    d.scalar("fixed_point_residual", residual);
    d.scalar("gradient_l2", grad);
    report.push(format!(
        "HJ: {} Picard iterations in the last of {} window(s), converged: {}",
        s.trace.len(),
        s.window_ends.len(),
        s.converged
    ));
    if s.outside_guarantee {
        report.push("warning: beta <= 0.5 lies outside the well-posedness guarantee".into());
    }
    report.push(format!("comparison bound gap {gap:.3e}, fixed-point residual {residual:.3e}, |Du| in L2 {grad:.6}"));
    if let Some(exact) = exact {
        let err = max_distance(&s.u, exact)?;
        d.scalar("manufactured_error", err);
        report.push(format!("max error against the manufactured solution {err:.3e}"));
    }
    Ok(())
}

fn header(c: &ExperimentConfig, kind: Kind) -> Vec<String> {
    vec![format!(
        "fracthj {kind}: beta {}, sigma {}, dim {}, n {}, T {}, steps {}, grading {}",
        c.beta,
        c.sigma,
        c.dim,
        c.n,
        c.t_final,
        c.steps,
        c.grading,
        kind = kind.name()
    )]
}

fn ml_table(c: &ExperimentConfig) -> Result<Outputs, CliError> {
    let b = c.b.unwrap_or(1.0);
    let mut table = Table::new(&["z", "value", "method", "est_error"]);
    let mut report = vec![format!("Mittag-Leffler E_{{{},{}}}(z)", c.beta, b)];
    for &z in c.z.as_deref().unwrap_or_default() {
        let e = ml(c.beta, b, z)?;
        table.push(vec![Cell::Num(z), Cell::Num(e.value), Cell::Text(format!("{:?}", e.method).to_lowercase()), Cell::Num(e.est_error)]);
        report.push(format!("  z = {z}: {:.16e}", e.value));
    }
    Ok(Outputs { tables: vec![(ML_TABLE.into(), table)], report })
}

fn heat_problem(c: &ExperimentConfig, tg: TimeGrid, grid: TorusGrid) -> Result<LinearProblem, CliError> {
    let u0 = data_field(c, c.u0.as_ref().expect("validated"), grid, 0)?;
    let mut p = LinearProblem::new(tg.clone(), c.sigma, u0);
    if let Some(s) = &c.source {
        p = p.with_source(space_time(c, s, &tg, grid)?);
    }
    if let Some(b) = &c.drift {
        p = p.with_drift(drift(c, b, &tg, grid)?);
    }
    p.validate()?;
    Ok(p)
}

fn heat(c: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    let grid = TorusGrid::new(c.dim, c.n)?;
    let p = heat_problem(c, time_grid(c, c.steps)?, grid)?;
    let mild = c.solver.scheme == Some(Scheme::Mild);
    let u = if mild { solve_heat_mild(&p)? } else { solve_heat_l1(&p)? };
    let mut d = Table::diagnostics();
    let mut report = header(c, Kind::Heat);
    let gap = max_principle_gap(&u, &p);
    d.scalar("max_principle_gap", gap);
    d.scalar("sup_norm", sup_norm(&u));
    report.push(format!("scheme {}, sup norm {:.6}, maximum principle gap {gap:.3e}", if mild { "mild" } else { "l1" }, sup_norm(&u)));
    if !mild && c.drift.is_none() {
        let dist = max_distance(&u, &solve_heat_mild(&p)?)?;
        d.scalar("mild_distance", dist);
        report.push(format!("distance to the mild solution {dist:.3e}"));
    }
    let solution = Table::solution(&["u"], &[&u]);
    Ok(RunOutcome::ok(Outputs { tables: vec![(SOLUTION.into(), solution), (DIAGNOSTICS.into(), d)], report }))
}

fn hj(c: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    let grid = TorusGrid::new(c.dim, c.n)?;
    let (p, exact) = hj_problem(c, time_grid(c, c.steps)?, grid)?;
    let s = solve_hj(c, &p)?;
    let mut d = Table::diagnostics();
    let mut report = header(c, Kind::Hj);
    hj_diagnostics(&mut d, &mut report, &s, &p, exact.as_ref())?;
    let solution = Table::solution(&["u"], &[&s.u]);
    Ok(RunOutcome {
        error: not_converged(&s),
        outputs: Outputs { tables: vec![(SOLUTION.into(), solution), (DIAGNOSTICS.into(), d)], report },
    })
}

fn fp_scheme(c: &ExperimentConfig) -> FpScheme {
    match c.solver.scheme {
        Some(Scheme::Upwind) => FpScheme::Upwind,
        Some(Scheme::Central) => FpScheme::CentralAdvective,
        _ => FpScheme::Spectral,
    }
}

fn fp(c: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    let grid = TorusGrid::new(c.dim, c.n)?;
    let tg = time_grid(c, c.steps)?;
    let terminal = data_field(c, c.terminal.as_ref().expect("validated"), grid, 1)?;
    let mut d = Table::diagnostics();
    let mut report = header(c, Kind::Fp);
    let mut hj_part = None;
    let problem = if let Some(b) = &c.drift {
        FpProblem::new(tg.clone(), c.sigma, drift(c, b, &tg, grid)?, terminal)?
    } else if c.hamiltonian.is_some() {
        let (p, exact) = hj_problem(c, tg, grid)?;
        let s = solve_hj(c, &p)?;
        if let Some(e) = not_converged(&s) {
            return Err(e);
        }
        hj_diagnostics(&mut d, &mut report, &s, &p, exact.as_ref())?;
        let fp = FpProblem::from_hj(&p, &s.u, terminal)?;
        hj_part = Some((p, s));
        fp
    } else {
        FpProblem::without_drift(tg, c.sigma, terminal)?
    };
    let scheme = fp_scheme(c);
    let rho = solve_fp_backward(&problem, scheme)?;
    let (mass, min) = (mass_deviation(&rho), min_density(&rho));
    d.scalar("mass_deviation", mass);
    d.scalar("min_density", min);
    d.scalar("admissible_dt", admissible_dt(&problem));
    report.push(format!("scheme {scheme:?}, mass deviation {mass:.3e}, min density {min:.3e}"));
    let solution = match &hj_part {
        Some((p, s)) => {
            let q = crossed_quantity(&s.u, &rho, p.hamiltonian.gamma())?;
            d.scalar("crossed_quantity", q);
            report.push(format!("crossed quantity {q:.6}"));
            Table::solution(&["u", "rho"], &[&s.u, &rho])
        }
        None => Table::solution(&["rho"], &[&rho]),
    };
    Ok(RunOutcome::ok(Outputs { tables: vec![(SOLUTION.into(), solution), (DIAGNOSTICS.into(), d)], report }))
}

/// HJ solve, adjoint density and the duality residual on one grid.
fn duality_level(c: &ExperimentConfig, tg: TimeGrid, grid: TorusGrid) -> Result<(HjProblem, HjSolution, SpaceTimeField, Option<SpaceTimeField>), CliError> {
    let (p, exact) = hj_problem(c, tg, grid)?;
    let s = solve_hj(c, &p)?;
    if let Some(e) = not_converged(&s) {
        return Err(e);
    }
    let terminal = data_field(c, c.terminal.as_ref().expect("validated"), grid, 1)?;
    let rho = solve_fp_backward(&FpProblem::from_hj(&p, &s.u, terminal)?, fp_scheme(c))?;
    Ok((p, s, rho, exact))
}

fn duality(c: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    let grid = TorusGrid::new(c.dim, c.n)?;
    let (p, s, rho, exact) = duality_level(c, time_grid(c, c.steps)?, grid)?;
    let mut d = Table::diagnostics();
    let mut report = header(c, Kind::Duality);
    hj_diagnostics(&mut d, &mut report, &s, &p, exact.as_ref())?;
    let terms = duality_terms(&s.u, &rho, &p)?;
    d.scalar("duality_terminal", terms.terminal);
    d.scalar("duality_initial", terms.initial);
    d.scalar("duality_potential", terms.potential);
    d.scalar("duality_hamiltonian", terms.hamiltonian);
    d.scalar("duality_residual", terms.residual());
    d.scalar("mass_deviation", mass_deviation(&rho));
    report.push(format!(
        "duality: terminal {:.12}, initial {:.12}, potential {:.12}, hamiltonian {:.12}, residual {:.3e}",
        terms.terminal,
        terms.initial,
        terms.potential,
        terms.hamiltonian,
        terms.residual()
    ));
    let solution = Table::solution(&["u", "rho"], &[&s.u, &rho]);
    Ok(RunOutcome::ok(Outputs { tables: vec![(SOLUTION.into(), solution), (DIAGNOSTICS.into(), d)], report }))
}

/// max |coarse - fine| over the coarse nodes and points, with the fine run
/// refined by `ratio` in time and by `space_ratio` per dimension.
fn restricted_distance(coarse: &SpaceTimeField, fine: &SpaceTimeField, ratio: usize, space_ratio: usize) -> f64 {
    let grid = coarse.values[0].grid();
    let fine_grid = fine.values[0].grid();
    let mut worst: f64 = 0.0;
    for (k, f) in coarse.values.iter().enumerate() {
        let g = &fine.values[k * ratio];
        for idx in 0..grid.len() {
            let fidx = if grid.dim() == 1 {
                idx * space_ratio
            } else {
                let (i, j) = (idx / grid.n(), idx % grid.n());
                i * space_ratio * fine_grid.n() + j * space_ratio
            };
            worst = worst.max((f.values[idx] - g.values[fidx]).abs());
        }
    }
    worst
}

enum Oracle {
    Exact,
    Finest,
    Residual,
}

/// Halves the time step (and doubles n if asked) per level and tabulates the
/// error against the study's oracle, with the observed and fitted orders.
pub fn convergence_study(c: &ExperimentConfig, levels: Option<usize>) -> Result<RunOutcome, CliError> {
    c.validate(Kind::Convergence)?;
    let study = c.study.as_ref().expect("validated");
    let levels = levels.or(study.levels).unwrap_or(DEFAULT_LEVELS);
    if levels < 3 {
        return Err(CliError::Config(format!("a study needs at least 3 levels, got {levels}")));
    }
    let oracle = match study.target {
        StudyTarget::Caputo | StudyTarget::Heat => Oracle::Exact,
        StudyTarget::Hj if c.manufactured => Oracle::Exact,
        StudyTarget::Hj => Oracle::Finest,
        StudyTarget::Duality => Oracle::Residual,
    };
    let mut report = header(c, Kind::Convergence);
    report.push(format!(
        "study {}, {levels} levels, oracle: {}",
        study.target.name(),
        match (&oracle, study.target) {
            (Oracle::Exact, StudyTarget::Caputo) => "closed-form Caputo derivative",
            (Oracle::Exact, StudyTarget::Heat) => "Mittag-Leffler mild solution",
            (Oracle::Exact, _) => "manufactured solution",
            (Oracle::Finest, _) => "finest level",
            (Oracle::Residual, _) => "duality residual",
        }
    ));
    // (steps, n, error, spatial error)
    let mut rows: Vec<(usize, usize, Option<f64>, Option<f64>)> = Vec::new();
    let mut kept: Vec<SpaceTimeField> = Vec::new();
    let mut failure = None;
    for level in 0..levels {
        let steps = c.steps << level;
        let n = if study.refine_space { c.n << level } else { c.n };
        let result = (|| -> Result<(Option<f64>, Option<f64>), CliError> {
            let tg = time_grid(c, steps)?;
            match study.target {
                StudyTarget::Caputo => {
                    let g = study.gamma.unwrap_or(2.0);
                    let d = caputo_forward(&TimeSeries::from_fn(&tg, |t| t.powf(g)), c.beta)?;
                    let coef = gamma_fn(g + 1.0)? / gamma_fn(g + 1.0 - c.beta)?;
                    let err = tg
                        .nodes()
                        .iter()
                        .zip(&d.values)
                        .filter_map(|(t, v)| v.map(|v| (v - coef * t.powf(g - c.beta)).abs()))
                        .fold(0.0, f64::max);
                    Ok((Some(err), None))
                }
                StudyTarget::Heat => {
                    let p = heat_problem(c, tg.clone(), TorusGrid::new(c.dim, n)?)?;
                    let mild = solve_heat_mild(&p)?;
                    let err = max_distance(&solve_heat_l1(&p)?, &mild)?;
                    // the same time grid with twice the points; spectral data is resolved exactly
                    let spatial = if c.drift.is_none() {
                        let fine = solve_heat_mild(&heat_problem(c, tg, TorusGrid::new(c.dim, 2 * n)?)?)?;
                        Some(restricted_distance(&mild, &fine, 1, 2))
                    } else {
                        None
                    };
                    Ok((Some(err), spatial))
                }
                StudyTarget::Hj => {
                    let (p, exact) = hj_problem(c, tg, TorusGrid::new(c.dim, n)?)?;
                    let s = solve_hj(c, &p)?;
                    if let Some(e) = not_converged(&s) {
                        return Err(e);
                    }
                    match exact {
                        Some(exact) => Ok((Some(max_distance(&s.u, &exact)?), None)),
                        None => {
                            kept.push(s.u);
                            Ok((None, None))
                        }
                    }
                }
                StudyTarget::Duality => {
                    let (p, s, rho, _) = duality_level(c, tg, TorusGrid::new(c.dim, n)?)?;
                    Ok((Some(duality_terms(&s.u, &rho, &p)?.residual().abs()), None))
                }
            }
        })();
        match result {
            Ok((err, spatial)) => rows.push((steps, n, err, spatial)),
            Err(e) => {
                report.push(format!("level {level} failed: {e}"));
                failure = Some(e);
                break;
            }
        }
    }
    if matches!(oracle, Oracle::Finest) && failure.is_none() {
        let finest = kept.last().expect("at least one level");
        let last = levels - 1;
        for (level, row) in rows.iter_mut().enumerate().take(last) {
            let ratio = 1 << (last - level);
            let space = if study.refine_space { ratio } else { 1 };
            row.2 = Some(restricted_distance(&kept[level], finest, ratio, space));
        }
    }

    let mut table = Table::new(&["level", "steps", "n", "error", "observed_order", "spatial_error"]);
    let mut prev: Option<(usize, f64)> = None;
    for (level, &(steps, n, err, spatial)) in rows.iter().enumerate() {
        let order = match (prev, err) {
            (Some((ps, pe)), Some(e)) if pe > 0.0 && e > 0.0 => Cell::Num((pe / e).ln() / (steps as f64 / ps as f64).ln()),
            _ => Cell::Empty,
        };
        table.push(vec![
            Cell::Int(level as i64),
            Cell::Int(steps as i64),
            Cell::Int(n as i64),
            err.map_or(Cell::Empty, Cell::Num),
            order,
            spatial.map_or(Cell::Empty, Cell::Num),
        ]);
        if let Some(e) = err {
            prev = Some((steps, e));
            let space = spatial.map(|s| format!(", spatial error {s:.3e}")).unwrap_or_default();
            report.push(format!("  steps {steps:6}, n {n:4}: error {e:.6e}{space}"));
        }
    }
    let points: Vec<(f64, f64)> =
        rows.iter().filter_map(|&(steps, _, e, _)| e.filter(|e| *e > 0.0).map(|e| ((steps as f64).recip().ln(), e.ln()))).collect();
    let mut d = Table::diagnostics();
    if points.len() >= 2 {
        let order = fitted_slope(&points);
        d.scalar("fitted_order", order);
        report.push(format!("fitted order {order:.4}"));
    }
    d.scalar("levels_completed", rows.len() as f64);
    Ok(RunOutcome {
        outputs: Outputs { tables: vec![(CONVERGENCE.into(), table), (DIAGNOSTICS.into(), d)], report },
        error: failure,
    })
}

/// Least-squares slope of y against x.
pub fn fitted_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
