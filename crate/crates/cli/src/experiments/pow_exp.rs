//! Puzzle-economy experiments: the colluder-ceiling sweep with its fitted
//! surface, and the relay-detection simulation on the reference topology.

use crate::config::{ExperimentConfig, RefTopoParams};
use crate::io::{fmt, write_json, CsvWriter};
use crate::reftopo;
use anyhow::{Context, Result};
use locverify_core::powrelay::{
    collect_relay_observations, fitted_surface_mean_per_k, fitted_surface_n,
    fitted_surface_nrmsd, max_colluders, mean_b_star, score_relay_detection, DecisionRule,
    PuzzleEconomy, RelayMode, RelayScenario, RelaySimConfig, FIT_B_MIN,
};
use locverify_core::rng::SimRng;
use locverify_core::stats::margin_of_error;
use serde::{Deserialize, Serialize};
use std::path::Path;

use super::ExperimentOutcome;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowLimitsParams {
    pub b_points: usize,
    pub k_grid: Vec<u32>,
    pub g_grid: Vec<f64>,
    pub nrmsd_b_points: usize,
    pub nrmsd_k_max: u32,
}

impl Default for PowLimitsParams {
    fn default() -> Self {
        PowLimitsParams {
            b_points: 33,
            k_grid: vec![1, 5, 10, 15, 20, 25, 30, 40, 50, 60, 70, 80],
            g_grid: vec![1.0, 1.5, 2.0, 3.0, 4.0],
            nrmsd_b_points: 32,
            nrmsd_k_max: 40,
        }
    }
}

pub fn run_limits(config: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentOutcome> {
    let params: PowLimitsParams = config.params()?;
    anyhow::ensure!(params.b_points >= 2, "need at least two duty-cycle points");
    let bs: Vec<f64> = (0..params.b_points)
        .map(|i| FIT_B_MIN + (1.0 - FIT_B_MIN) * i as f64 / (params.b_points - 1) as f64)
        .collect();

    let mut sweep = CsvWriter::new(out_dir.join("pow-limits.csv"), "b,k,g,n_max");
    for &g in &params.g_grid {
        for &k in &params.k_grid {
            for &b in &bs {
                let n = max_colluders(b, k, g).map_err(|e| anyhow::anyhow!("{e}"))?;
                sweep.row(&[fmt(b), k.to_string(), fmt(g), n.to_string()]);
            }
        }
    }

    let mut fitted = CsvWriter::new(out_dir.join("pow-limits-fitted.csv"), "b,k,n_fitted");
    for &k in &params.k_grid {
        for &b in &bs {
            let n = fitted_surface_n(b, k).map_err(|e| anyhow::anyhow!("{e}"))?;
            fitted.row(&[fmt(b), k.to_string(), fmt(n)]);
        }
    }

    let nrmsd = fitted_surface_nrmsd(params.nrmsd_b_points, params.nrmsd_k_max)
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    let summary = serde_json::json!({
        "b_star": mean_b_star(),
        "fitted_mean_per_k": fitted_surface_mean_per_k(),
        "nrmsd_vs_fit_at_g1_5": nrmsd,
    });
    let files = vec![
        sweep.finish()?,
        fitted.finish()?,
        write_json(out_dir.join("pow-limits-summary.json"), &summary)?,
    ];
    Ok(ExperimentOutcome { files, summary })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowSimParams {
    pub topo: RefTopoParams,
    /// Optional externally provided topology document; overrides `topo`.
    pub topology_file: Option<std::path::PathBuf>,
    pub beta_grid: Vec<f64>,
    pub solve_time_s: f64,
    pub issue_rate_per_s: f64,
    pub parallelism: u32,
    pub speed_factor: f64,
    pub puzzles_per_client: u32,
    pub probe_count: u32,
    /// "forward" or "solve-locally".
    pub mode: String,
    /// Independent repetitions (derived seeds); above one, a margins table
    /// reports the mean rates with their Student-t margin of error.
    pub repeats: u32,
    /// Confidence level for the margin of error.
    pub confidence: f64,
}

impl Default for PowSimParams {
    fn default() -> Self {
        PowSimParams {
            topo: RefTopoParams::default(),
            topology_file: None,
            beta_grid: default_beta_grid(),
            // Solve time well under typical network RTTs: the detection
            // margin (beta - 1)(N + t) has to clear the averaging noise even
            // for clients close to the provider.
            solve_time_s: 0.001,
            issue_rate_per_s: 2.0,
            parallelism: 8,
            speed_factor: 1.5,
            puzzles_per_client: 2048,
            probe_count: 256,
            mode: "forward".into(),
            repeats: 1,
            confidence: 0.90,
        }
    }
}

pub fn default_beta_grid() -> Vec<f64> {
    // 0.99 to 3.5, denser near one where the decision flips.
    let mut out = vec![0.99, 1.0, 1.01, 1.02, 1.03, 1.05, 1.08, 1.1, 1.15, 1.2, 1.3];
    let mut b: f64 = 1.5;
    while b <= 3.5 + 1e-9 {
        out.push((b * 100.0).round() / 100.0);
        b += 0.25;
    }
    out
}

pub fn run_sim(config: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentOutcome> {
    let params: PowSimParams = config.params()?;
    let mode = match params.mode.as_str() {
        "forward" => RelayMode::Forward,
        "solve-locally" => RelayMode::SolveLocally,
        other => anyhow::bail!("unknown relay mode {other:?}"),
    };
    let mut rng = SimRng::seed_from_u64(config.seed);
    let world = match &params.topology_file {
        Some(path) => {
            let topology = crate::io::load_topology(path)?;
            let nodes = topology.node_ids().collect();
            reftopo::ReferenceTopology { topology, nodes }
        }
        None => reftopo::build(&params.topo, &mut rng),
    };
    anyhow::ensure!(world.nodes.len() >= 4, "need at least four nodes");

    // Deterministic roles: node 0 is the provider, node 1 the middlebox,
    // remaining nodes alternate legitimate/colluding.
    let provider = world.nodes[0];
    let middlebox = world.nodes[1];
    let mut legitimate = Vec::new();
    let mut colluding = Vec::new();
    for (i, &n) in world.nodes[2..].iter().enumerate() {
        if i % 2 == 0 {
            legitimate.push(n);
        } else {
            colluding.push(n);
        }
    }
    let scenario = RelayScenario {
        provider,
        middlebox,
        legitimate,
        colluding,
        beta: 1.0,
    };
    let economy = PuzzleEconomy {
        solve_time_s: params.solve_time_s,
        issue_rate_per_s: params.issue_rate_per_s,
        parallelism: params.parallelism,
        speed_factor: params.speed_factor,
    };
    let sim_config = RelaySimConfig {
        puzzles_per_client: params.puzzles_per_client,
        probe_count: params.probe_count,
        mode,
        decision: DecisionRule::MeanRtt,
    };
    anyhow::ensure!(params.repeats >= 1, "repeats must be at least one");
    // First repetition continues the topology RNG stream; further ones run
    // on derived seeds.
    let mut runs = Vec::with_capacity(params.repeats as usize);
    for r in 0..params.repeats {
        let mut run_rng = if r == 0 {
            rng.clone()
        } else {
            SimRng::seed_from_u64(config.seed ^ (r as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        };
        let observations = collect_relay_observations(
            &world.topology,
            &scenario,
            &economy,
            &sim_config,
            &mut run_rng,
        )
        .map_err(|e| anyhow::anyhow!("{e}"))
        .context("relay simulation")?;
        runs.push(observations);
    }

    let mut w = CsvWriter::new(out_dir.join("pow-sim.csv"), "beta,fr_pct,fa_pct");
    let mut points = Vec::new();
    let mut margin_rows = Vec::new();
    for &beta in &params.beta_grid {
        let per_run: Vec<(Option<f64>, Option<f64>)> = runs
            .iter()
            .map(|obs| score_relay_detection(obs, beta, sim_config.decision))
            .collect();
        let (fr, fa) = per_run[0];
        w.row(&[
            fmt(beta),
            fr.map(fmt).unwrap_or_default(),
            fa.map(fmt).unwrap_or_default(),
        ]);
        points.push(serde_json::json!({ "beta": beta, "fr": fr, "fa": fa }));
        if params.repeats > 1 {
            let frs: Vec<f64> = per_run.iter().filter_map(|(fr, _)| *fr).collect();
            let fas: Vec<f64> = per_run.iter().filter_map(|(_, fa)| *fa).collect();
            let fr_stats = margin_of_error(&frs, params.confidence)
                .map_err(|e| anyhow::anyhow!("{e}"))?;
            let fa_stats = margin_of_error(&fas, params.confidence)
                .map_err(|e| anyhow::anyhow!("{e}"))?;
            margin_rows.push((beta, fr_stats, fa_stats));
        }
    }
    let mut files = vec![w.finish()?];
    if !margin_rows.is_empty() {
        let mut mw = CsvWriter::new(
            out_dir.join("pow-sim-margins.csv"),
            "beta,fr_mean,fr_std,fr_se,fr_me,fa_mean,fa_std,fa_se,fa_me",
        );
        for (beta, fr, fa) in &margin_rows {
            mw.row(&[
                fmt(*beta),
                fmt(fr.mean),
                fmt(fr.std),
                fmt(fr.standard_error),
                fmt(fr.margin_of_error),
                fmt(fa.mean),
                fmt(fa.std),
                fmt(fa.standard_error),
                fmt(fa.margin_of_error),
            ]);
        }
        files.push(mw.finish()?);
    }
    let summary = serde_json::json!({
        "b": economy.duty_cycle(),
        "legitimate": scenario.legitimate.len(),
        "colluding": scenario.colluding.len(),
        "repeats": params.repeats,
        "confidence": params.confidence,
        "points": points,
    });
    files.push(write_json(out_dir.join("pow-sim-summary.json"), &summary)?);
    Ok(ExperimentOutcome { files, summary })
}
