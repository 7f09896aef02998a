//! Named experiments. Each takes a parsed config, writes its artifacts under
//! the output directory, and returns the file list plus a JSON summary; a
//! manifest ties them together.

pub mod attack;
pub mod cpv_exp;
pub mod owd_pmf;
pub mod pow_exp;
pub mod wireless_exp;

use crate::config::ExperimentConfig;
use crate::io::{config_hash, write_manifest, Manifest};
use anyhow::Result;
use std::path::{Path, PathBuf};

pub use cpv_exp::{collect_cpv_runs, ClientRun, CpvRunSet};

#[derive(Debug)]
pub struct ExperimentOutcome {
    pub files: Vec<PathBuf>,
    pub summary: serde_json::Value,
}

pub const EXPERIMENTS: &[&str] = &[
    "attack-eval",
    "owd-pmf",
    "cpv-verify",
    "cpv-calibrate",
    "cpv-iterations",
    "cpv-away-sweep",
    "cpv-protocol-compare",
    "cpv-wireless",
    "wireless-cdf",
    "wireless-iters",
    "pow-limits",
    "pow-sim",
];

/// Run one experiment and write its manifest. The caller resolves the output
/// directory (flag, env var, or config).
pub fn run(config: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentOutcome> {
    let mut outcome = match config.experiment.as_str() {
        "attack-eval" => attack::run(config, out_dir)?,
        "owd-pmf" => owd_pmf::run(config, out_dir)?,
        "cpv-verify" => cpv_exp::run_verify(config, out_dir)?,
        "cpv-calibrate" => cpv_exp::run_calibrate(config, out_dir)?,
        "cpv-iterations" => cpv_exp::run_iterations(config, out_dir)?,
        "cpv-away-sweep" => cpv_exp::run_away_sweep(config, out_dir)?,
        "cpv-protocol-compare" => cpv_exp::run_protocol_compare(config, out_dir)?,
        "cpv-wireless" => cpv_exp::run_wireless(config, out_dir)?,
        "wireless-cdf" => wireless_exp::run_cdf(config, out_dir)?,
        "wireless-iters" => wireless_exp::run_iters(config, out_dir)?,
        "pow-limits" => pow_exp::run_limits(config, out_dir)?,
        "pow-sim" => pow_exp::run_sim(config, out_dir)?,
        other => anyhow::bail!(
            "unknown experiment {other:?}; expected one of {}",
            EXPERIMENTS.join(", ")
        ),
    };
    let manifest = Manifest {
        experiment: config.experiment.clone(),
        seed: config.seed,
        config_hash: config_hash(&config.canonical_json()),
        files: outcome
            .files
            .iter()
            .map(|p| {
                p.strip_prefix(out_dir)
                    .unwrap_or(p)
                    .to_string_lossy()
                    .into_owned()
            })
            .collect(),
    };
    let manifest_path = write_manifest(out_dir, &manifest)?;
    outcome.files.push(manifest_path);
    Ok(outcome)
}
