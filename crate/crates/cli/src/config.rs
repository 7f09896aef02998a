//! Experiment configuration: one JSON document per run with the experiment
//! name, the mandatory seed, and an experiment-specific parameter block.

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    /// Mandatory: every artifact must be reproducible from config + seed.
    pub seed: u64,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub params: serde_json::Value,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let body = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: ExperimentConfig =
            serde_json::from_str(&body).context("invalid experiment config")?;
        Ok(cfg)
    }

    pub fn new(experiment: &str, seed: u64) -> Self {
        ExperimentConfig {
            experiment: experiment.to_string(),
            seed,
            out_dir: None,
            params: serde_json::Value::Null,
        }
    }

    /// Parse the parameter block into a typed struct; null means defaults.
    pub fn params<T: DeserializeOwned + Default>(&self) -> Result<T> {
        if self.params.is_null() {
            return Ok(T::default());
        }
        serde_json::from_value(self.params.clone())
            .context("invalid experiment parameter block")
    }

    /// Canonical serialization used for the manifest hash.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

/// Shared reference-topology parameters: nodes placed uniformly over a
/// square region, every directed edge distance-derived with multiplicative
/// lognormal jitter.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RefTopoParams {
    pub nodes: u32,
    pub region_km: f64,
    /// Propagation speed as a fraction of c.
    pub speed_fraction_c: f64,
    /// Log-std of the multiplicative delay jitter.
    pub jitter_log_sigma: f64,
}

impl Default for RefTopoParams {
    fn default() -> Self {
        RefTopoParams {
            nodes: 100,
            region_km: 4000.0,
            speed_fraction_c: 1.0 / 3.0,
            jitter_log_sigma: 0.1,
        }
    }
}
