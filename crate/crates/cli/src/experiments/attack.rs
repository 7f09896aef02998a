//! Manipulation campaign against the geolocation techniques: synthetic
//! landmarks and adversaries with per-pair propagation speeds, class A-D
//! manipulation plans, and the distance/direction/region/correlation
//! metrics.

use crate::config::ExperimentConfig;
use crate::io::{fmt, write_json, CsvWriter};
use anyhow::{Context, Result};
use locverify_core::adversary::{
    evaluate_attack, median, AdversaryClass, AdversaryConfig, CampaignData, TechniqueKind,
};
use locverify_core::geo::{great_circle_km, GeoPoint, SPEED_OF_LIGHT_KM_S};
use locverify_core::geoloc::VectorMetric;
use locverify_core::rng::SimRng;
use locverify_core::simnet::NodeId;
use serde::{Deserialize, Serialize};
use std::path::Path;

use super::ExperimentOutcome;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttackEvalParams {
    /// Optional campaign document fixing adversary classes and true/intended
    /// coordinates; landmarks and delays are still synthesized from the
    /// seed. Overrides `adversaries`, `intents_per_adversary`, `classes`.
    pub campaign_file: Option<std::path::PathBuf>,
    pub landmarks: u32,
    pub adversaries: u32,
    pub intents_per_adversary: u32,
    pub region_km: f64,
    pub speed_fraction_c: f64,
    /// Half-width of the per-pair uniform speed spread (relative).
    pub pair_speed_spread: f64,
    /// RTT samples per pair; the minimum is kept, as the techniques do.
    pub samples_per_rtt: u32,
    pub jitter_log_sigma: f64,
    pub techniques: Vec<String>,
    pub classes: Vec<String>,
    pub segpoly_k: usize,
    pub segpoly_degree: usize,
    pub geoping_metric: String,
}

impl Default for AttackEvalParams {
    fn default() -> Self {
        AttackEvalParams {
            campaign_file: None,
            landmarks: 25,
            adversaries: 40,
            intents_per_adversary: 5,
            region_km: 4000.0,
            speed_fraction_c: 1.0 / 3.0,
            pair_speed_spread: 0.12,
            samples_per_rtt: 10,
            jitter_log_sigma: 0.05,
            techniques: vec!["cbg".into(), "geoping".into(), "segpoly".into()],
            classes: vec!["A".into(), "B".into(), "C".into(), "D".into()],
            segpoly_k: 3,
            segpoly_degree: 3,
            geoping_metric: "euclidean".into(),
        }
    }
}

fn metric_from_str(s: &str) -> Result<VectorMetric> {
    Ok(match s {
        "euclidean" => VectorMetric::Euclidean,
        "manhattan" => VectorMetric::Manhattan,
        "canberra" => VectorMetric::Canberra,
        "chebyshev" => VectorMetric::Chebyshev,
        other => anyhow::bail!("unknown vector metric {other:?}"),
    })
}

fn class_from_str(s: &str) -> Result<AdversaryClass> {
    Ok(match s {
        "A" => AdversaryClass::A,
        "B" => AdversaryClass::B,
        "C" => AdversaryClass::C,
        "D" => AdversaryClass::D,
        other => anyhow::bail!("unknown adversary class {other:?}"),
    })
}

const KM_PER_DEG: f64 = 111.19492664455873;

/// Externally supplied campaign: per-adversary class and coordinates.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignSpec {
    pub adversaries: Vec<CampaignAdversary>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignAdversary {
    /// "A" | "B" | "C" | "D".
    pub class: String,
    /// [lat_deg, lon_deg].
    pub true_loc: [f64; 2],
    pub intended: Vec<[f64; 2]>,
}

/// The campaign world: everything derived deterministically from the seed.
pub struct Campaign {
    pub data: CampaignData,
    pub true_locs: Vec<GeoPoint>,
    pub intents: Vec<Vec<GeoPoint>>,
    /// Per-adversary class restriction when the campaign came from a file.
    pub fixed_classes: Option<Vec<AdversaryClass>>,
}

pub fn build_campaign(params: &AttackEvalParams, rng: &mut SimRng) -> Result<Campaign> {
    let half_deg = params.region_km / 2.0 / KM_PER_DEG;
    let point = |rng: &mut SimRng| {
        GeoPoint::new(
            rng.uniform_range(-half_deg, half_deg),
            rng.uniform_range(-half_deg, half_deg),
        )
        .expect("in range")
    };
    let landmarks: Vec<(NodeId, GeoPoint)> = (0..params.landmarks)
        .map(|i| (NodeId(i), point(rng)))
        .collect();
    let (true_locs, intents, fixed_classes) = match &params.campaign_file {
        Some(path) => {
            let body = std::fs::read_to_string(path)
                .with_context(|| format!("reading campaign {}", path.display()))?;
            let spec: CampaignSpec = serde_json::from_str(&body).context("campaign document")?;
            let mut locs = Vec::new();
            let mut ints = Vec::new();
            let mut classes = Vec::new();
            for adv in &spec.adversaries {
                locs.push(
                    GeoPoint::new(adv.true_loc[0], adv.true_loc[1])
                        .map_err(|e| anyhow::anyhow!("true_loc: {e}"))?,
                );
                ints.push(
                    adv.intended
                        .iter()
                        .map(|c| {
                            GeoPoint::new(c[0], c[1]).map_err(|e| anyhow::anyhow!("intended: {e}"))
                        })
                        .collect::<Result<Vec<_>>>()?,
                );
                classes.push(class_from_str(&adv.class)?);
            }
            (locs, ints, Some(classes))
        }
        None => (
            (0..params.adversaries).map(|_| point(rng)).collect(),
            (0..params.adversaries)
                .map(|_| (0..params.intents_per_adversary).map(|_| point(rng)).collect())
                .collect(),
            None,
        ),
    };

    // One propagation speed per unordered pair, then measured RTT = min of
    // jittered samples.
    let base_speed = params.speed_fraction_c * SPEED_OF_LIGHT_KM_S / 1000.0; // km/ms
    let measure = |a: GeoPoint, b: GeoPoint, rng: &mut SimRng| -> f64 {
        let speed = base_speed * (1.0 + rng.uniform_range(-params.pair_speed_spread, params.pair_speed_spread));
        let base = 2.0 * great_circle_km(a, b) / speed;
        let mut best = f64::INFINITY;
        for _ in 0..params.samples_per_rtt.max(1) {
            best = best.min(base * rng.lognormal_factor(params.jitter_log_sigma));
        }
        best
    };
    let n = landmarks.len();
    let mut landmark_rtts = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let rtt = measure(landmarks[i].1, landmarks[j].1, rng);
            landmark_rtts[i][j] = rtt;
            landmark_rtts[j][i] = rtt;
        }
    }
    let adversary_true_rtts: Vec<Vec<f64>> = true_locs
        .iter()
        .map(|t| landmarks.iter().map(|(_, lm)| measure(*t, *lm, rng)).collect())
        .collect();
    Ok(Campaign {
        data: CampaignData {
            landmarks,
            landmark_rtts,
            adversary_true_rtts,
        },
        true_locs,
        intents,
        fixed_classes,
    })
}

/// Per-(technique, class) campaign metrics.
#[derive(Serialize)]
pub struct ClassSummary {
    pub technique: String,
    pub class: String,
    pub attempts: usize,
    pub resolved: usize,
    pub median_error_km: Option<f64>,
    pub pearson_attempted_vs_error: Option<f64>,
    /// Set when the technique could not calibrate on this campaign's
    /// landmark data (no attempts were evaluated).
    pub calibration_error: Option<String>,
}

pub fn run_campaign(
    params: &AttackEvalParams,
    campaign: &Campaign,
    technique: TechniqueKind,
    class: AdversaryClass,
) -> Result<(Vec<locverify_core::adversary::AttackAttempt>, ClassSummary, Vec<usize>)> {
    // Flatten (adversary, intent) pairs into one attempt list; each attempt
    // reuses the adversary's measured true RTTs.
    let mut adversaries = Vec::new();
    let mut true_rtts = Vec::new();
    let mut adversary_of_attempt = Vec::new();
    for (a, t) in campaign.true_locs.iter().enumerate() {
        if let Some(fixed) = &campaign.fixed_classes {
            if fixed[a] != class {
                continue;
            }
        }
        for intent in &campaign.intents[a] {
            adversaries.push(AdversaryConfig {
                class,
                true_loc: *t,
                intended_loc: *intent,
                known_rtts_ms: Some(campaign.data.adversary_true_rtts[a].clone()),
            });
            true_rtts.push(campaign.data.adversary_true_rtts[a].clone());
            adversary_of_attempt.push(a);
        }
    }
    let data = CampaignData {
        landmarks: campaign.data.landmarks.clone(),
        landmark_rtts: campaign.data.landmark_rtts.clone(),
        adversary_true_rtts: true_rtts,
    };
    let eval = match evaluate_attack(technique, &data, &adversaries) {
        Ok(eval) => eval,
        Err(e) => {
            // A technique that cannot calibrate on this campaign's data
            // yields no attempts; the summary records why.
            return Ok((
                Vec::new(),
                ClassSummary {
                    technique: format!("{technique:?}"),
                    class: format!("{class:?}"),
                    attempts: 0,
                    resolved: 0,
                    median_error_km: None,
                    pearson_attempted_vs_error: None,
                    calibration_error: Some(e.to_string()),
                },
                Vec::new(),
            ));
        }
    };
    let mut errors: Vec<f64> = eval
        .attempts
        .iter()
        .filter_map(|a| a.outcome.as_ref().ok().map(|m| m.distance_error_km))
        .collect();
    let resolved = errors.len();
    let summary = ClassSummary {
        technique: format!("{technique:?}"),
        class: format!("{class:?}"),
        attempts: eval.attempts.len(),
        resolved,
        median_error_km: median(&mut errors),
        pearson_attempted_vs_error: eval.correlation,
        calibration_error: None,
    };
    let _ = params;
    Ok((eval.attempts, summary, adversary_of_attempt))
}

pub fn technique_from_str(params: &AttackEvalParams, s: &str) -> Result<TechniqueKind> {
    Ok(match s {
        "cbg" => TechniqueKind::Cbg,
        "geoping" => TechniqueKind::GeoPing(metric_from_str(&params.geoping_metric)?),
        "segpoly" => TechniqueKind::SegPoly {
            k: params.segpoly_k,
            degree: params.segpoly_degree,
        },
        other => anyhow::bail!("unknown technique {other:?}"),
    })
}

pub fn run(config: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentOutcome> {
    let params: AttackEvalParams = config.params()?;
    let mut rng = SimRng::seed_from_u64(config.seed);
    let campaign = build_campaign(&params, &mut rng)?;
    // A campaign file fixes each adversary's class; evaluate the classes it
    // actually uses.
    let class_names: Vec<String> = match &campaign.fixed_classes {
        Some(fixed) => {
            let mut names: Vec<String> = fixed.iter().map(|c| format!("{c:?}")).collect();
            names.sort();
            names.dedup();
            names
        }
        None => params.classes.clone(),
    };

    let mut attempts_csv = CsvWriter::new(
        out_dir.join("attack-attempts.csv"),
        "technique,class,adversary,attempted_km,dist_error_km,dir_error_deg,area_km2,error",
    );
    let mut summaries = Vec::new();
    for technique_name in &params.techniques {
        let technique = technique_from_str(&params, technique_name)?;
        for class_name in &class_names {
            let class = class_from_str(class_name)?;
            let (attempts, summary, adversary_of) =
                run_campaign(&params, &campaign, technique, class)
                    .with_context(|| format!("{technique_name}/{class_name}"))?;
            for (i, attempt) in attempts.iter().enumerate() {
                match &attempt.outcome {
                    Ok(m) => attempts_csv.row(&[
                        technique_name.clone(),
                        class_name.clone(),
                        adversary_of[i].to_string(),
                        fmt(attempt.attempted_km),
                        fmt(m.distance_error_km),
                        m.direction_error_deg.map(fmt).unwrap_or_default(),
                        m.region_area_km2.map(fmt).unwrap_or_default(),
                        String::new(),
                    ]),
                    Err(e) => attempts_csv.row(&[
                        technique_name.clone(),
                        class_name.clone(),
                        adversary_of[i].to_string(),
                        fmt(attempt.attempted_km),
                        String::new(),
                        String::new(),
                        String::new(),
                        format!("{e:?}"),
                    ]),
                }
            }
            summaries.push(summary);
        }
    }

    let mut summary_csv = CsvWriter::new(
        out_dir.join("attack-summary.csv"),
        "technique,class,attempts,resolved,median_error_km,pearson,calibration_error",
    );
    for s in &summaries {
        summary_csv.row(&[
            s.technique.clone(),
            s.class.clone(),
            s.attempts.to_string(),
            s.resolved.to_string(),
            s.median_error_km.map(fmt).unwrap_or_default(),
            s.pearson_attempted_vs_error.map(fmt).unwrap_or_default(),
            s.calibration_error.clone().unwrap_or_default(),
        ]);
    }

    let summary = serde_json::json!({ "classes": summaries });
    let files = vec![
        attempts_csv.finish()?,
        summary_csv.finish()?,
        write_json(out_dir.join("attack-summary.json"), &summary)?,
    ];
    Ok(ExperimentOutcome { files, summary })
}
