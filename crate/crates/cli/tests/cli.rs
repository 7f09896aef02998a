//! Harness-level tests: config parsing, the external file formats, and the
//! binary's exit-code contract.

use locverify::config::ExperimentConfig;
use locverify::io::{load_delay_csv, load_topology, topology_from_doc, NodeDoc, EdgeDoc, TopologyDoc};
use locverify_core::rng::SimRng;
use locverify_core::simnet::NodeId;
use std::path::PathBuf;
use std::process::Command;

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("locverify-cli-{}-{tag}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn unknown_experiment_is_a_config_error() {
    let dir = temp_dir("unknown");
    let config = ExperimentConfig::new("no-such-experiment", 1);
    let err = locverify::run(&config, &dir).unwrap_err();
    assert!(err.to_string().contains("unknown experiment"));
}

#[test]
fn unknown_param_field_is_rejected_with_its_name() {
    let config: ExperimentConfig = serde_json::from_str(
        r#"{ "experiment": "owd-pmf", "seed": 1, "params": { "scenarioz": [] } }"#,
    )
    .unwrap();
    let err = locverify::run(&config, &temp_dir("field")).unwrap_err();
    let msg = format!("{err:#}");
    assert!(msg.contains("scenarioz"), "error should name the bad field: {msg}");
}

#[test]
fn seed_is_mandatory_in_config_documents() {
    let parsed: Result<ExperimentConfig, _> =
        serde_json::from_str(r#"{ "experiment": "owd-pmf" }"#);
    assert!(parsed.is_err(), "config without a seed must not parse");
}

#[test]
fn topology_json_roundtrip_and_validation() {
    let doc = TopologyDoc {
        nodes: vec![
            NodeDoc { id: 0, lat: 10.0, lon: 20.0, skew_ms: 1.5 },
            NodeDoc { id: 1, lat: 11.0, lon: 21.0, skew_ms: 0.0 },
        ],
        edges: vec![
            EdgeDoc { src: 0, dst: 1, family: "constant".into(), params: vec![7.5] },
            EdgeDoc { src: 1, dst: 0, family: "poisson".into(), params: vec![30.0] },
        ],
    };
    let topo = topology_from_doc(&doc).unwrap();
    let mut rng = SimRng::seed_from_u64(1);
    assert_eq!(topo.sample_owd(NodeId(0), NodeId(1), &mut rng).unwrap(), 7.5);
    assert_eq!(topo.clock_skew_ms(NodeId(0)).unwrap(), 1.5);

    // File round trip.
    let dir = temp_dir("topo");
    let path = dir.join("topology.json");
    std::fs::write(&path, serde_json::to_string(&doc).unwrap()).unwrap();
    let loaded = load_topology(&path).unwrap();
    assert_eq!(loaded.distance_km(NodeId(0), NodeId(1)).unwrap(),
               topo.distance_km(NodeId(0), NodeId(1)).unwrap());

    // Bad family is rejected.
    let bad = TopologyDoc {
        nodes: vec![NodeDoc { id: 0, lat: 0.0, lon: 0.0, skew_ms: 0.0 }],
        edges: vec![EdgeDoc { src: 0, dst: 0, family: "weibull".into(), params: vec![] }],
    };
    assert!(topology_from_doc(&bad).is_err());
}

#[test]
fn delay_csv_loader_accepts_optional_distance() {
    let dir = temp_dir("csv");
    let path = dir.join("delays.csv");
    std::fs::write(&path, "node_id,rtt_ms,distance_km\n0,12.5,500\n1,20.0\n# comment\n2,7.25,310.5\n").unwrap();
    let rows = load_delay_csv(&path).unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0], (0, 12.5, Some(500.0)));
    assert_eq!(rows[1], (1, 20.0, None));
    // The rows feed straight into technique calibration.
    let peers: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|(_, rtt, d)| d.map(|d| (*rtt, d)))
        .collect();
    let line = locverify_core::geoloc::cbg_calibrate(&peers).unwrap();
    assert!(line.km_per_ms > 0.0);
}

#[test]
fn attack_campaign_file_fixes_classes_and_coordinates() {
    let dir = temp_dir("campaign");
    let campaign = serde_json::json!({
        "adversaries": [
            { "class": "A", "true_loc": [2.0, 2.0], "intended": [[-3.0, 4.0]] },
            { "class": "B", "true_loc": [-1.0, 5.0], "intended": [[6.0, -2.0], [0.5, 0.5]] },
        ]
    });
    let campaign_path = dir.join("campaign.json");
    std::fs::write(&campaign_path, campaign.to_string()).unwrap();
    let mut config = ExperimentConfig::new("attack-eval", 5);
    config.params = serde_json::json!({
        "campaign_file": campaign_path,
        "landmarks": 14,
        "techniques": ["cbg"],
        "segpoly_k": 2, "segpoly_degree": 2,
    });
    let outcome = locverify::run(&config, &dir).unwrap();
    let classes = outcome.summary["classes"].as_array().unwrap();
    // Only the classes in the file, with the file's attempt counts.
    assert_eq!(classes.len(), 2);
    let a = classes.iter().find(|c| c["class"] == "A").unwrap();
    let b = classes.iter().find(|c| c["class"] == "B").unwrap();
    assert_eq!(a["attempts"], 1);
    assert_eq!(b["attempts"], 2);
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_locverify"))
}

#[test]
fn binary_exit_codes() {
    // Success path: a tiny experiment.
    let dir = temp_dir("bin-ok");
    let status = bin()
        .args(["wireless-iters", "--seed", "3", "--out"])
        .arg(&dir)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(dir.join("wireless-iters-manifest.json").exists());

    // Config errors exit 2.
    let status = bin().arg("definitely-not-an-experiment").status().unwrap();
    assert_eq!(status.code(), Some(2));

    // Reference checks exit 0 when green.
    let status = bin().arg("--check").stdout(std::process::Stdio::null()).status().unwrap();
    assert_eq!(status.code(), Some(0));
}

#[test]
fn config_file_overrides_flags() {
    let dir = temp_dir("precedence");
    let config_path = dir.join("config.json");
    let out_sub = dir.join("from-config");
    std::fs::write(
        &config_path,
        serde_json::json!({
            "experiment": "wireless-iters",
            "seed": 9,
            "out_dir": out_sub,
            "params": { "k_list": [2], "taus": [0.05] }
        })
        .to_string(),
    )
    .unwrap();
    // The --out flag loses to the config's out_dir.
    let ignored_out = dir.join("from-flag");
    let status = bin()
        .args(["--config"])
        .arg(&config_path)
        .args(["--out"])
        .arg(&ignored_out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(out_sub.join("wireless-iters-manifest.json").exists());
    assert!(!ignored_out.exists());
}
