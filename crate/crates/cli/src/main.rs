use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use orbitlets_cli::config::Config;
use orbitlets_cli::scenarios;

/// Run one scenario and print its JSON report. Exits 0 iff every assertion holds.
#[derive(Parser)]
#[command(name = "orbitlets", version)]
struct Args {
    /// one of: covering-stats, bapu-check, decomp-norm, coorbit-norm, parseval-check,
    /// localization-check, covariance-check, equivalence, shear-rotation, dilation-invariance
    scenario: String,
    /// TOML config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// key=value, applied after the file (repeatable)
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// write the JSON report and CSV tables into this directory
    #[arg(long, value_name = "DIR")]
    emit_csv: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(args: &Args) -> anyhow::Result<bool> {
    let mut cfg = match &args.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    for o in &args.overrides {
        cfg.apply_override(o)?;
    }
    let report = scenarios::run(&args.scenario, cfg)?;
    println!("{}", report.json());
    for (name, s) in &report.timings {
        eprintln!("{name}: {s:.1} s");
    }
    if let Some(dir) = &args.emit_csv {
        report.emit(dir)?;
    }
    Ok(report.passed)
}
