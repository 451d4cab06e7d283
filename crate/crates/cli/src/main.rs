use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use fracthj_cli::{run, CliError, ExperimentConfig, Kind};

/// Runs one time-fractional HJ / Fokker-Planck experiment from a JSON config.
#[derive(Parser, Debug)]
#[command(name = "fracthj", version)]
struct Args {
    kind: Kind,
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's `output`, then `out/<kind>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Levels of a convergence study (at least 3).
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    quiet: bool,
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(e.exit_code())
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mut config = match ExperimentConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let dir = args
        .out
        .clone()
        .or_else(|| config.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out").join(args.kind.name()));
    let outcome = match run(args.kind, &config, args.levels) {
        Ok(o) => o,
        Err(e) => return fail(&e),
    };
    let status = outcome.error.as_ref().map_or("ok", CliError::class);
    if let Err(e) = outcome.outputs.write(&dir, args.kind, &config, status) {
        return fail(&e);
    }
    if !args.quiet {
        for line in &outcome.outputs.report {
            println!("{line}");
        }
        println!("outputs written to {}", dir.display());
    }
    match &outcome.error {
        Some(e) => fail(e),
        None => ExitCode::SUCCESS,
    }
}
