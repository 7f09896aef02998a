//! Cross-module integration: the network substrate, the estimation
//! protocols, and the verification engine working together on constructed
//! topologies.

use locverify_core::cpv::{verify, CpvParams, Verdict, VerifyOptions};
use locverify_core::geo::GeoPoint;
use locverify_core::owd::{run_protocol_round, ClientBehavior, RoundConfig};
use locverify_core::rng::SimRng;
use locverify_core::simnet::{DelayModel, NodeId, Topology};

/// Distance-derived world: three verifiers around a region and two clients,
/// one inside the triangle and one outside.
fn geographic_world() -> (Topology, [NodeId; 3], NodeId, NodeId) {
    let mut topo = Topology::new();
    let verifiers = [NodeId(0), NodeId(1), NodeId(2)];
    let coords = [
        (0.0, 0.0),
        (0.0, 9.0),
        (7.0, 4.5),
        (2.2, 4.4), // inside client
        (9.5, 13.0), // outside client
    ];
    for (i, &(lat, lon)) in coords.iter().enumerate() {
        topo.add_node(NodeId(i as u32), GeoPoint::new(lat, lon).unwrap(), 0.0);
    }
    let model = DelayModel::DistanceDerived {
        speed_km_per_ms: 99.930819,
        jitter_log_sigma: 0.05,
    };
    for a in 0..coords.len() as u32 {
        for b in 0..coords.len() as u32 {
            if a != b {
                topo.set_edge(NodeId(a), NodeId(b), model.clone()).unwrap();
            }
        }
    }
    (topo, verifiers, NodeId(3), NodeId(4))
}

#[test]
fn verification_separates_inside_from_outside_on_jittered_delays() {
    let (topo, verifiers, inside, outside) = geographic_world();
    let params = CpvParams {
        iterations: 60,
        epsilon_km2: 10.0,
        tau: 0.2,
    };
    let mut rng = SimRng::seed_from_u64(2024);
    let trace_in = verify(&topo, verifiers, inside, params, &VerifyOptions::default(), &mut rng).unwrap();
    let trace_out = verify(&topo, verifiers, outside, params, &VerifyOptions::default(), &mut rng).unwrap();
    assert_eq!(trace_in.verdict, Verdict::Accept, "gamma {}", trace_in.gamma);
    assert_eq!(trace_out.verdict, Verdict::Reject, "gamma {}", trace_out.gamma);
    assert!(trace_in.gamma > trace_out.gamma + 0.15);
}

#[test]
fn estimator_inequality_holds_on_consistent_rounds() {
    // With deterministic edges every timestamp sees the same directed
    // delays, so a round is a single six-delay realization and the
    // pair-minimum estimate can never exceed the round-trip half. (On
    // jittered edges each forwarded timestamp samples its leg afresh, so
    // the nine sums are not one realization and the theorem does not
    // apply per round.)
    let mut topo = Topology::new();
    let verifiers = [NodeId(0), NodeId(1), NodeId(2)];
    let client = NodeId(3);
    let coords = [(0.0, 0.0), (0.0, 9.0), (7.0, 4.5), (2.2, 4.4)];
    for (i, &(lat, lon)) in coords.iter().enumerate() {
        topo.add_node(NodeId(i as u32), GeoPoint::new(lat, lon).unwrap(), 0.0);
    }
    let mut rng = SimRng::seed_from_u64(7);
    for a in 0..coords.len() as u32 {
        for b in 0..coords.len() as u32 {
            if a != b {
                // Asymmetric constant delays drawn once per directed edge.
                let ms = rng.uniform_range(3.0, 40.0);
                topo.set_edge(NodeId(a), NodeId(b), DelayModel::Constant(ms)).unwrap();
            }
        }
    }
    let round = run_protocol_round(
        &topo,
        verifiers,
        client,
        ClientBehavior::Honest,
        RoundConfig::default(),
        0.0,
        &mut rng,
    )
    .unwrap();
    let mp = round.min_pairs();
    let av = round.average();
    for (x_mp, x_av) in mp.client.iter().zip(av.client.iter()) {
        assert!(x_mp <= x_av, "{x_mp} > {x_av}");
    }
    for (y_mp, y_av) in mp.verifier.iter().zip(av.verifier.iter()) {
        assert!(y_mp <= y_av);
    }
}

#[test]
fn wireless_last_mile_shifts_gamma_down() {
    // Adding a heavy-tailed last-mile delay on the client edges can only
    // make the inside client look worse.
    let (topo, verifiers, inside, _) = geographic_world();
    let params = CpvParams {
        iterations: 80,
        epsilon_km2: 8.0,
        tau: 0.0,
    };
    let gamma_with = |last_mile: Option<DelayModel>| {
        let mut rng = SimRng::seed_from_u64(99);
        verify(
            &topo,
            verifiers,
            inside,
            params,
            &VerifyOptions {
                last_mile,
                ..VerifyOptions::default()
            },
            &mut rng,
        )
        .unwrap()
        .gamma
    };
    let wired = gamma_with(None);
    let wireless = gamma_with(Some(DelayModel::TruncGaussian {
        mu_ms: -110.0,
        sigma_ms: 15.0,
    }));
    assert!(
        wireless <= wired,
        "last-mile delay must not improve confidence: {wireless} vs {wired}"
    );
    assert!(wired > 0.5);
}

#[test]
fn core_types_are_safely_shareable() {
    // Simulation state is owned per instance; the data types themselves can
    // cross threads, so independent instances parallelize freely.
    fn assert_send_sync<T: Send + Sync>() {}
    assert_send_sync::<Topology>();
    assert_send_sync::<DelayModel>();
    assert_send_sync::<locverify_core::cpv::VerdictTrace>();
    assert_send_sync::<locverify_core::owd::EdgeDelays>();
    assert_send_sync::<locverify_core::pmf::DiscretePmf>();
    assert_send_sync::<locverify_core::wireless::WirelessCdf>();
    assert_send_sync::<locverify_core::geoloc::SegPolyModel>();
    assert_send_sync::<SimRng>();
}
