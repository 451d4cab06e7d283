use fracthj_cli::output::Cell;
use fracthj_cli::{convergence_study, run, CliError, ExperimentConfig, Kind};

fn config(json: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(json).unwrap()
}

fn errors(outcome: &fracthj_cli::RunOutcome) -> Vec<Option<f64>> {
    let table = outcome.outputs.table("convergence.csv").unwrap();
    let col = table.header.iter().position(|h| h == "error").unwrap();
    table
        .rows
        .iter()
        .map(|r| match r[col] {
            Cell::Num(v) => Some(v),
            _ => None,
        })
        .collect()
}

fn fitted(outcome: &fracthj_cli::RunOutcome) -> f64 {
    outcome.outputs.table("diagnostics.csv").unwrap().value("fitted_order").unwrap()
}

#[test]
fn caputo_power_rule_study_recovers_two_minus_beta() {
    for beta in [0.3, 0.5, 0.8] {
        let c = config(&format!(r#"{{"beta": {beta}, "steps": 64, "study": {{"target": "caputo", "gamma": 2}}}}"#));
        let out = convergence_study(&c, Some(4)).unwrap();
        assert!(out.error.is_none());
        let order = fitted(&out);
        assert!((order - (2.0 - beta)).abs() <= 0.15, "beta {beta}: {order}");
    }
}

#[test]
fn heat_study_is_spatially_exact_and_reports_a_temporal_order() {
    let c = config(r#"{"beta": 0.6, "n": 16, "steps": 16, "grading": 2, "u0": "cos(2*pi*x)", "study": {"target": "heat"}}"#);
    let out = convergence_study(&c, Some(3)).unwrap();
    let table = out.outputs.table("convergence.csv").unwrap();
    let col = table.header.iter().position(|h| h == "spatial_error").unwrap();
    for row in &table.rows {
        let Cell::Num(v) = row[col] else { panic!("missing spatial error") };
        assert!(v < 1e-13, "{v}");
    }
    let errs: Vec<f64> = errors(&out).into_iter().flatten().collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]));
    assert!(fitted(&out) > 0.5);
}

#[test]
fn duality_study_order() {
    let c = config(
        r#"{"beta": 0.7, "sigma": 0.1, "n": 32, "steps": 32, "grading": 3, "manufactured": true,
            "hamiltonian": {"kind": "quadratic", "coefficient": "0.02*(1 + 0.5*sin(2*pi*x))"},
            "terminal": {"bump": {"center": [0.3], "width": 0.1}}, "study": {"target": "duality"}}"#,
    );
    let out = convergence_study(&c, Some(3)).unwrap();
    assert!(out.error.is_none());
    assert!(fitted(&out) >= 0.8, "{}", fitted(&out));
}

#[test]
fn hj_study_against_the_finest_level() {
    let c = config(
        r#"{"beta": 0.7, "sigma": 0.2, "n": 16, "steps": 16, "grading": 2,
            "hamiltonian": {"kind": "quadratic", "coefficient": "0.05"},
            "u0": "0.5*cos(2*pi*x)", "study": {"target": "hj", "refine_space": true}}"#,
    );
    let out = convergence_study(&c, Some(4)).unwrap();
    let errs = errors(&out);
    assert_eq!(errs.len(), 4);
    assert!(errs[3].is_none(), "finest level is the reference");
    let e: Vec<f64> = errs.into_iter().flatten().collect();
    assert!(e.windows(2).all(|w| w[1] < w[0]), "{e:?}");
    assert!(fitted(&out) > 0.5);
}

#[test]
fn hj_study_against_the_manufactured_solution() {
    let c = config(
        r#"{"beta": 0.7, "sigma": 0.1, "n": 32, "steps": 32, "grading": 3, "manufactured": true,
            "hamiltonian": {"kind": "power", "gamma": 3, "coefficient": "0.005"},
            "study": {"target": "hj"}}"#,
    );
    let out = convergence_study(&c, Some(3)).unwrap();
    assert!(errors(&out).iter().all(Option::is_some));
    assert!(fitted(&out) > 1.0);
}

#[test]
fn run_dispatches_and_validates_first() {
    let c = config(r#"{"beta": 0.5, "z": [0, -1]}"#);
    assert!(run(Kind::MlTable, &c, None).unwrap().error.is_none());
    assert!(matches!(run(Kind::Heat, &c, None), Err(CliError::Config(_))));
    let c = config(r#"{"beta": 0.5, "steps": 8, "study": {"target": "caputo", "levels": 2}}"#);
    assert!(matches!(run(Kind::Convergence, &c, None), Err(CliError::Config(_))));
}

#[test]
fn error_records_are_machine_readable() {
    let e = CliError::Stability("blow-up".into());
    let v = e.to_json();
    assert_eq!(v["exit_code"], 4);
    assert_eq!(v["error"], "stability abort");
    assert_eq!(CliError::Config(String::new()).exit_code(), 2);
    assert_eq!(CliError::NonConvergence(String::new()).exit_code(), 3);
}
