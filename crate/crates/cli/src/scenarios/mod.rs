//! One runner per scenario. Each fills its defaults into the config (so the report
//! embeds the resolved values), runs, and records its assertions.

mod bapu;
mod checks;
mod covering;
mod dilation;
mod norms;
mod shear;

use crate::config::Config;
use crate::report::Report;
use crate::setup;

pub const SCENARIOS: &[&str] = &[
    "covering-stats",
    "bapu-check",
    "decomp-norm",
    "coorbit-norm",
    "parseval-check",
    "localization-check",
    "covariance-check",
    "equivalence",
    "shear-rotation",
    "dilation-invariance",
];

/// Resolves the config for `name` and runs the scenario.
pub fn run(name: &str, mut cfg: Config) -> anyhow::Result<Report> {
    match name {
        "shear-rotation" => shear::defaults(&mut cfg)?,
        "localization-check" => checks::localization_defaults(&mut cfg),
        _ => {}
    }
    setup::common_defaults(&mut cfg)?;
    match name {
        "covering-stats" => covering::run(&mut cfg),
        "bapu-check" => bapu::run(&mut cfg),
        "decomp-norm" => norms::decomp(&mut cfg),
        "coorbit-norm" => norms::coorbit(&mut cfg),
        "parseval-check" => checks::parseval(&mut cfg),
        "localization-check" => checks::localization(&mut cfg),
        "covariance-check" => checks::covariance(&mut cfg),
        "equivalence" => norms::equivalence(&mut cfg),
        "shear-rotation" => shear::run(&mut cfg),
        "dilation-invariance" => dilation::run(&mut cfg),
        other => anyhow::bail!("unknown scenario `{other}` (expected one of {})", SCENARIOS.join(", ")),
    }
}
