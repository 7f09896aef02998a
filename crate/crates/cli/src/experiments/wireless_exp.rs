//! Wireless-model exports: CDF tables per station count and the
//! required-iteration calculus.

use crate::config::ExperimentConfig;
use crate::io::{fmt, write_json, CsvWriter};
use anyhow::Result;
use locverify_core::wireless::{
    required_iterations, DcfParams, PassTarget, WirelessCdf, WirelessModelKind,
};
use serde::{Deserialize, Serialize};
use std::path::Path;

use super::ExperimentOutcome;

pub fn kinds_from_str(s: &str) -> Result<Vec<(WirelessModelKind, &'static str)>> {
    Ok(match s {
        "carvalho" => vec![(WirelessModelKind::Carvalho, "carvalho")],
        "raptis" => vec![(WirelessModelKind::Raptis, "raptis")],
        "both" => vec![
            (WirelessModelKind::Carvalho, "carvalho"),
            (WirelessModelKind::Raptis, "raptis"),
        ],
        other => anyhow::bail!("unknown wireless model {other:?}"),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WirelessCdfParams {
    pub k_list: Vec<u32>,
    pub wireless_model: String,
    pub max_ms: f64,
    pub step_ms: f64,
}

impl Default for WirelessCdfParams {
    fn default() -> Self {
        WirelessCdfParams {
            k_list: vec![2, 5, 10, 20, 30],
            wireless_model: "both".into(),
            max_ms: 100.0,
            step_ms: 0.5,
        }
    }
}

pub fn run_cdf(config: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentOutcome> {
    let params: WirelessCdfParams = config.params()?;
    let dcf = DcfParams::default();
    let mut files = Vec::new();
    for (kind, name) in kinds_from_str(&params.wireless_model)? {
        let models: Vec<WirelessCdf> = params
            .k_list
            .iter()
            .map(|&k| WirelessCdf::build(kind, k, &dcf).map_err(|e| anyhow::anyhow!("{e}")))
            .collect::<Result<_>>()?;
        let header = std::iter::once("delay_ms".to_string())
            .chain(params.k_list.iter().map(|k| format!("k{k}")))
            .collect::<Vec<_>>()
            .join(",");
        let mut w = CsvWriter::new(out_dir.join(format!("wireless-cdf-{name}.csv")), &header);
        let steps = (params.max_ms / params.step_ms) as u32;
        for i in 0..=steps {
            let d = i as f64 * params.step_ms;
            let mut cells = vec![fmt(d)];
            for m in &models {
                cells.push(fmt(m.cdf(d)));
            }
            w.row(&cells);
        }
        files.push(w.finish()?);
    }
    let summary = serde_json::json!({ "k_list": params.k_list, "model": params.wireless_model });
    Ok(ExperimentOutcome { files, summary })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WirelessItersParams {
    pub t_ms: f64,
    pub k_list: Vec<u32>,
    pub wireless_model: String,
    /// Fixed absolute pass targets to solve for.
    pub fixed_r: Vec<u64>,
    /// Fractional pass targets (required count is ceil(n * tau)).
    pub taus: Vec<f64>,
}

impl Default for WirelessItersParams {
    fn default() -> Self {
        WirelessItersParams {
            t_ms: 3.0,
            k_list: vec![2, 5, 10, 20, 30],
            wireless_model: "both".into(),
            fixed_r: vec![5, 20],
            taus: vec![0.1, 0.05, 0.01],
        }
    }
}

pub fn run_iters(config: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentOutcome> {
    let params: WirelessItersParams = config.params()?;
    let dcf = DcfParams::default();
    let mut w = CsvWriter::new(
        out_dir.join("wireless-iters.csv"),
        "model,k,target_kind,target,p_within_t,required_n",
    );
    let mut rows = Vec::new();
    for (kind, name) in kinds_from_str(&params.wireless_model)? {
        for &k in &params.k_list {
            let model = WirelessCdf::build(kind, k, &dcf).map_err(|e| anyhow::anyhow!("{e}"))?;
            let p = model.p_within(params.t_ms);
            let mut emit = |target_kind: &str, target: String, res: Result<u64, _>| {
                let n_str = match &res {
                    Ok(n) => n.to_string(),
                    Err(_) => "unbounded".to_string(),
                };
                w.row(&[
                    name.to_string(),
                    k.to_string(),
                    target_kind.to_string(),
                    target.clone(),
                    fmt(p),
                    n_str.clone(),
                ]);
                rows.push(serde_json::json!({
                    "model": name, "k": k, "target_kind": target_kind,
                    "target": target, "required_n": res.ok(),
                }));
            };
            for &r in &params.fixed_r {
                emit(
                    "fixed",
                    r.to_string(),
                    required_iterations(params.t_ms, PassTarget::FixedCount(r), &model),
                );
            }
            for &tau in &params.taus {
                emit(
                    "tau",
                    fmt(tau),
                    required_iterations(params.t_ms, PassTarget::Fraction(tau), &model),
                );
            }
        }
    }
    let summary = serde_json::json!({ "rows": rows });
    let files = vec![
        w.finish()?,
        write_json(out_dir.join("wireless-iters-summary.json"), &summary)?,
    ];
    Ok(ExperimentOutcome { files, summary })
}
