//! Artifact output: CSV tables with fixed formatting (so reruns are
//! byte-identical), run manifests, and the topology JSON schema.

use anyhow::{Context, Result};
use locverify_core::geo::GeoPoint;
use locverify_core::simnet::{DelayModel, NodeId, Topology};
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Format a float with six decimals; every CSV cell goes through here so a
/// rerun with the same seed emits the same bytes.
pub fn fmt(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.6}")
    } else if v.is_nan() {
        "nan".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// A CSV file under construction.
pub struct CsvWriter {
    path: PathBuf,
    buf: String,
}

impl CsvWriter {
    pub fn new(path: PathBuf, header: &str) -> Self {
        let mut buf = String::new();
        buf.push_str(header);
        buf.push('\n');
        CsvWriter { path, buf }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.buf.push_str(&cells.join(","));
        self.buf.push('\n');
    }

    pub fn finish(self) -> Result<PathBuf> {
        if let Some(dir) = self.path.parent() {
            fs::create_dir_all(dir)?;
        }
        let mut f = fs::File::create(&self.path)
            .with_context(|| format!("creating {}", self.path.display()))?;
        f.write_all(self.buf.as_bytes())?;
        Ok(self.path)
    }
}

/// Manifest written next to every experiment's artifacts: what ran, with
/// which seed and configuration, and which files came out.
#[derive(Serialize)]
pub struct Manifest {
    pub experiment: String,
    pub seed: u64,
    pub config_hash: String,
    pub files: Vec<String>,
}

/// FNV-1a over the canonical config serialization.
pub fn config_hash(config_json: &str) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in config_json.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    format!("{h:016x}")
}

pub fn write_manifest(out_dir: &Path, manifest: &Manifest) -> Result<PathBuf> {
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join(format!("{}-manifest.json", manifest.experiment));
    let body = serde_json::to_string_pretty(manifest)?;
    fs::write(&path, body.as_bytes())?;
    Ok(path)
}

pub fn write_json<T: Serialize>(path: PathBuf, value: &T) -> Result<PathBuf> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let body = serde_json::to_string_pretty(value)?;
    fs::write(&path, body.as_bytes())?;
    Ok(path)
}

/// JSON document form of a topology: nodes with coordinates and clock skew,
/// directed edges with a delay-model family and parameters. The schema is
/// documented in docs/formats.md.
#[derive(Serialize, Deserialize)]
pub struct TopologyDoc {
    pub nodes: Vec<NodeDoc>,
    pub edges: Vec<EdgeDoc>,
}

#[derive(Serialize, Deserialize)]
pub struct NodeDoc {
    pub id: u32,
    pub lat: f64,
    pub lon: f64,
    #[serde(default)]
    pub skew_ms: f64,
}

#[derive(Serialize, Deserialize)]
pub struct EdgeDoc {
    pub src: u32,
    pub dst: u32,
    pub family: String,
    #[serde(default)]
    pub params: Vec<f64>,
}

pub fn model_to_doc(model: &DelayModel) -> (String, Vec<f64>) {
    match model {
        DelayModel::Constant(ms) => ("constant".into(), vec![*ms]),
        DelayModel::Poisson { mean_ms } => ("poisson".into(), vec![*mean_ms]),
        DelayModel::Gamma { shape, scale_ms } => ("gamma".into(), vec![*shape, *scale_ms]),
        DelayModel::TruncGaussian { mu_ms, sigma_ms } => {
            ("truncated-gaussian".into(), vec![*mu_ms, *sigma_ms])
        }
        DelayModel::Empirical { values_ms, weights } => {
            let mut params = Vec::with_capacity(values_ms.len() * 2);
            for (v, w) in values_ms.iter().zip(weights) {
                params.push(*v);
                params.push(*w);
            }
            ("empirical-table".into(), params)
        }
        DelayModel::DistanceDerived { speed_km_per_ms, jitter_log_sigma } => {
            ("distance-derived".into(), vec![*speed_km_per_ms, *jitter_log_sigma])
        }
        DelayModel::Sum(_) => ("sum".into(), vec![]),
    }
}

pub fn doc_to_model(family: &str, params: &[f64]) -> Result<DelayModel> {
    let need = |n: usize| -> Result<()> {
        if params.len() == n {
            Ok(())
        } else {
            anyhow::bail!("family {family} expects {n} params, got {}", params.len())
        }
    };
    Ok(match family {
        "constant" => {
            need(1)?;
            DelayModel::Constant(params[0])
        }
        "poisson" => {
            need(1)?;
            DelayModel::Poisson { mean_ms: params[0] }
        }
        "gamma" => {
            need(2)?;
            DelayModel::Gamma { shape: params[0], scale_ms: params[1] }
        }
        "truncated-gaussian" => {
            need(2)?;
            DelayModel::TruncGaussian { mu_ms: params[0], sigma_ms: params[1] }
        }
        "empirical-table" => {
            if params.is_empty() || !params.len().is_multiple_of(2) {
                anyhow::bail!("empirical-table expects value,weight pairs");
            }
            let values_ms = params.iter().step_by(2).copied().collect();
            let weights = params.iter().skip(1).step_by(2).copied().collect();
            DelayModel::Empirical { values_ms, weights }
        }
        "distance-derived" => {
            need(2)?;
            DelayModel::DistanceDerived {
                speed_km_per_ms: params[0],
                jitter_log_sigma: params[1],
            }
        }
        other => anyhow::bail!("unknown delay-model family: {other}"),
    })
}

/// Load a topology from its JSON document form.
pub fn load_topology(path: &Path) -> Result<Topology> {
    let body = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let doc: TopologyDoc = serde_json::from_str(&body).context("parsing topology document")?;
    topology_from_doc(&doc)
}

pub fn topology_from_doc(doc: &TopologyDoc) -> Result<Topology> {
    let mut topo = Topology::new();
    for n in &doc.nodes {
        let loc = GeoPoint::new(n.lat, n.lon)
            .map_err(|e| anyhow::anyhow!("node {}: {e}", n.id))?;
        topo.add_node(NodeId(n.id), loc, n.skew_ms);
    }
    for e in &doc.edges {
        let model = doc_to_model(&e.family, &e.params)?;
        topo.set_edge(NodeId(e.src), NodeId(e.dst), model)
            .map_err(|err| anyhow::anyhow!("edge {} -> {}: {err}", e.src, e.dst))?;
    }
    Ok(topo)
}

/// Parse a CSV of `node_id, rtt_ms[, distance_km]` calibration rows.
pub fn load_delay_csv(path: &Path) -> Result<Vec<(u32, f64, Option<f64>)>> {
    let body = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (lineno, line) in body.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if lineno == 0 && line.chars().any(|c| c.is_ascii_alphabetic()) {
            continue; // header row
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() < 2 {
            anyhow::bail!("line {}: expected node_id,rtt_ms[,distance_km]", lineno + 1);
        }
        let id: u32 = cells[0].parse().with_context(|| format!("line {}: node id", lineno + 1))?;
        let rtt: f64 = cells[1].parse().with_context(|| format!("line {}: rtt", lineno + 1))?;
        let dist = if cells.len() > 2 {
            Some(cells[2].parse().with_context(|| format!("line {}: distance", lineno + 1))?)
        } else {
            None
        };
        out.push((id, rtt, dist));
    }
    Ok(out)
}
