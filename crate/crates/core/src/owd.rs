//! One-way delay estimation between a client and three verifiers.
//!
//! Two estimators run over the same signed-timestamp exchange:
//!
//! * minimum pairs (`mp`): the smaller of the two directed sums on each
//!   verifier pair is kept and the three simultaneous equations
//!   `x_i + x_j = m_k` are solved for the client edges;
//! * average (`av`): half the round trip through the client.
//!
//! The analytic machinery below derives the exact error distribution of both
//! estimators from per-edge delay PMFs.

use crate::pmf::{DiscretePmf, HalfGridPmf, PmfError};
use crate::rng::SimRng;
use crate::simnet::{
    send, sign_timestamp, verify_timestamp, EventQueue, Message, NodeId, Payload, SimError,
    Topology,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OwdError {
    /// A forwarded timestamp failed signature validation: possible client
    /// cheating attempt; the round aborts.
    InvalidSignature,
    /// The client never forwarded enough timestamps.
    Timeout,
    Sim(SimError),
    Pmf(PmfError),
}

impl core::fmt::Display for OwdError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            OwdError::InvalidSignature => write!(f, "possible client cheating attempt"),
            OwdError::Timeout => write!(f, "client did not forward timestamps in time"),
            OwdError::Sim(e) => write!(f, "simulation error: {e}"),
            OwdError::Pmf(e) => write!(f, "pmf error: {e}"),
        }
    }
}

impl From<SimError> for OwdError {
    fn from(e: SimError) -> Self {
        OwdError::Sim(e)
    }
}

impl From<PmfError> for OwdError {
    fn from(e: PmfError) -> Self {
        OwdError::Pmf(e)
    }
}

/// Raw measurements of one protocol round: the nine timestamp sums
/// `e[i][j] = d_ic + d_cj` and the six directed verifier-verifier OWDs
/// `dv[0..3]` = forward (v1->v2, v2->v3, v3->v1), `dv[3..6]` = reverse.
#[derive(Clone, Debug)]
pub struct EdgeDelays {
    pub e: [[f64; 3]; 3],
    pub dv: [f64; 6],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Protocol {
    MinPairs,
    Average,
}

/// Six smaller-OWD estimates: three client edges and three verifier edges,
/// in kilometre-mappable milliseconds.
#[derive(Clone, Copy, Debug)]
pub struct SixOwds {
    pub client: [f64; 3],
    pub verifier: [f64; 3],
    pub protocol: Protocol,
}

/// How the simulated client treats timestamps it must forward.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ClientBehavior {
    /// Forwards each timestamp immediately to all three verifiers.
    Honest,
    /// Never forwards: the round times out.
    Mute,
    /// Holds every timestamp for the given extra delay before forwarding.
    DelayAll(f64),
    /// Holds timestamps originating at one verifier before forwarding them to
    /// one destination verifier (selective delay-adding).
    DelayEdge { origin: usize, dest: usize, extra_ms: f64 },
    /// Forwards with a corrupted signature.
    Forge,
}

#[derive(Clone, Copy, Debug)]
pub struct RoundConfig {
    /// Gap between the three verifiers' probe transmissions.
    pub probe_gap_ms: f64,
    /// How long after the last probe the verifiers wait before declaring the
    /// round dead.
    pub timeout_ms: f64,
}

impl Default for RoundConfig {
    fn default() -> Self {
        // Probes every 2 seconds, as in the reference deployment.
        RoundConfig {
            probe_gap_ms: 2000.0,
            timeout_ms: 30_000.0,
        }
    }
}

/// Execute one full round of the timestamp protocol inside a fresh event
/// queue: each verifier sends a signed clock reading to the client, the
/// client forwards it to all three verifiers, and every verifier records
/// `e_ij = r - b`. Verifier-verifier OWDs are measured directly (the
/// verifiers trust each other and share synchronized clocks for this step).
pub fn run_protocol_round(
    topology: &Topology,
    verifiers: [NodeId; 3],
    client: NodeId,
    behavior: ClientBehavior,
    config: RoundConfig,
    start_ms: f64,
    rng: &mut SimRng,
) -> Result<EdgeDelays, OwdError> {
    let keys = [0x517c_c1b7_2722_0a95u64, 0x6c62_272e_07bb_0142, 0x2fcb_8f9d_4c34_d1e6];
    let mut queue: EventQueue<Message> = EventQueue::new();

    // Verifier probes, spaced by the probe gap.
    for (i, &v) in verifiers.iter().enumerate() {
        let sent = start_ms + i as f64 * config.probe_gap_ms;
        let stamp = sent + topology.clock_skew_ms(v)?;
        let msg = Message {
            src: v,
            dst: client,
            payload: Payload::Timestamp { origin: v, stamp_ms: stamp },
            sent_at_ms: sent,
            signature: Some(sign_timestamp(keys[i], v, stamp)),
        };
        send(topology, &mut queue, msg, rng)?;
    }

    let deadline = start_ms + 2.0 * config.probe_gap_ms + config.timeout_ms;
    let mut e = [[f64::NAN; 3]; 3];
    let mut filled = 0usize;

    while let Some((now, msg)) = queue.pop() {
        if now > deadline {
            break;
        }
        if msg.dst == client {
            // Client handles an inbound probe according to its behavior.
            let (origin, stamp) = match msg.payload {
                Payload::Timestamp { origin, stamp_ms } => (origin, stamp_ms),
                Payload::Opaque(_) => continue,
            };
            let origin_idx = verifiers.iter().position(|&v| v == origin).unwrap_or(3);
            for (j, &v) in verifiers.iter().enumerate() {
                let (fwd_delay, signature) = match behavior {
                    ClientBehavior::Honest => (0.0, msg.signature),
                    ClientBehavior::Mute => continue,
                    ClientBehavior::DelayAll(extra) => (extra, msg.signature),
                    ClientBehavior::DelayEdge { origin: o, dest, extra_ms } => {
                        if origin_idx == o && j == dest {
                            (extra_ms, msg.signature)
                        } else {
                            (0.0, msg.signature)
                        }
                    }
                    ClientBehavior::Forge => (
                        0.0,
                        msg.signature.map(|s| crate::simnet::Signature {
                            signer: s.signer,
                            mac: s.mac ^ 0xBAD,
                        }),
                    ),
                };
                let fwd = Message {
                    src: client,
                    dst: v,
                    payload: Payload::Timestamp { origin, stamp_ms: stamp },
                    sent_at_ms: now + fwd_delay,
                    signature,
                };
                send(topology, &mut queue, fwd, rng)?;
            }
        } else if let Some(j) = verifiers.iter().position(|&v| v == msg.dst) {
            let (origin, stamp) = match msg.payload {
                Payload::Timestamp { origin, stamp_ms } => (origin, stamp_ms),
                Payload::Opaque(_) => continue,
            };
            let Some(i) = verifiers.iter().position(|&v| v == origin) else {
                continue;
            };
            let valid = msg
                .signature
                .map(|s| verify_timestamp(keys[i], &s, origin, stamp))
                .unwrap_or(false);
            if !valid {
                return Err(OwdError::InvalidSignature);
            }
            let r = now + topology.clock_skew_ms(msg.dst)?;
            if e[i][j].is_nan() {
                e[i][j] = r - stamp;
                filled += 1;
            }
        }
    }

    if filled < 9 {
        return Err(OwdError::Timeout);
    }

    // Verifier-verifier OWDs, measured skew-free between mutually trusting,
    // synchronized verifiers. Forward ring then reverse ring.
    let pairs = [(0usize, 1usize), (1, 2), (2, 0)];
    let mut dv = [0.0; 6];
    for (k, &(a, b)) in pairs.iter().enumerate() {
        dv[k] = topology.sample_owd(verifiers[a], verifiers[b], rng)?;
        dv[k + 3] = topology.sample_owd(verifiers[b], verifiers[a], rng)?;
    }

    Ok(EdgeDelays { e, dv })
}

/// Solve the minimum-pairs simultaneous equations for the three client-edge
/// estimates. `m_1 = min(e12, e21)`, `m_2 = min(e23, e32)`,
/// `m_3 = min(e31, e13)`; then `x_1 = (m1 + m3 - m2) / 2` and cyclically.
pub fn solve_min_pairs(e: &[[f64; 3]; 3]) -> [f64; 3] {
    let m1 = e[0][1].min(e[1][0]);
    let m2 = e[1][2].min(e[2][1]);
    let m3 = e[2][0].min(e[0][2]);
    [
        (m1 + m3 - m2) / 2.0,
        (m2 + m1 - m3) / 2.0,
        (m3 + m2 - m1) / 2.0,
    ]
}

/// Average-protocol client-edge estimates: half the round trip through the
/// client, `x_i = e_ii / 2`.
pub fn estimate_av(e: &[[f64; 3]; 3]) -> [f64; 3] {
    [e[0][0] / 2.0, e[1][1] / 2.0, e[2][2] / 2.0]
}

impl EdgeDelays {
    /// Minimum-pairs estimates for all six edges.
    pub fn min_pairs(&self) -> SixOwds {
        let client = solve_min_pairs(&self.e);
        let verifier = [
            self.dv[0].min(self.dv[3]),
            self.dv[1].min(self.dv[4]),
            self.dv[2].min(self.dv[5]),
        ];
        SixOwds {
            client,
            verifier,
            protocol: Protocol::MinPairs,
        }
    }

    /// Average estimates for all six edges.
    pub fn average(&self) -> SixOwds {
        let client = estimate_av(&self.e);
        let verifier = [
            0.5 * (self.dv[0] + self.dv[3]),
            0.5 * (self.dv[1] + self.dv[4]),
            0.5 * (self.dv[2] + self.dv[5]),
        ];
        SixOwds {
            client,
            verifier,
            protocol: Protocol::Average,
        }
    }
}

/// One draw of the six directed client-edge delays, ordered
/// `(d_1c, d_c1, d_2c, d_c2, d_3c, d_c3)`.
pub type SixDelays = [f64; 6];

/// Point estimates of the smaller OWD on the v1-client edge for one delay
/// realization: the minimum-pairs estimate and the round-trip half.
pub fn smaller_owd_estimate_pointwise(d: &SixDelays) -> (f64, f64) {
    let [d1c, dc1, d2c, dc2, d3c, dc3] = *d;
    let e = [
        [d1c + dc1, d1c + dc2, d1c + dc3],
        [d2c + dc1, d2c + dc2, d2c + dc3],
        [d3c + dc1, d3c + dc2, d3c + dc3],
    ];
    let t_mp = solve_min_pairs(&e)[0];
    let t_av = 0.5 * (d1c + dc1);
    (t_mp, t_av)
}

/// Absolute estimator errors against the smaller directed delay for one
/// realization, in half-millisecond units (exact when the delays are
/// integers). Returns `(mp_half_units, av_half_units)`.
pub fn pointwise_errors_half_units(d: &[i64; 6]) -> (i64, i64) {
    let a = d[0] - d[1];
    let b = d[2] - d[3];
    let c = d[4] - d[5];
    (mp_error_half_units(a, b, c), a.abs())
}

/// Minimum-pairs absolute error in half-ms units as a function of the three
/// directed differences `a = d_1c - d_c1`, `b = d_2c - d_c2`,
/// `c = d_3c - d_c3`. This is the closed-form case analysis of the estimator:
/// the ordering of (a, b, c) picks the case, the sign of `a` picks which
/// direction held the smaller delay.
pub fn mp_error_half_units(a: i64, b: i64, c: i64) -> i64 {
    let smaller_is_fwd = a <= 0;
    if c < b && b <= a {
        // t = d_c1 + b/2
        if smaller_is_fwd {
            (b - 2 * a).abs()
        } else {
            b.abs()
        }
    } else if b <= c && c < a {
        // t = d_c1 + c/2
        if smaller_is_fwd {
            (c - 2 * a).abs()
        } else {
            c.abs()
        }
    } else if (c <= a && a < b) || (a == b && b == c) || (b < a && a <= c) {
        // t = (d_1c + d_c1) / 2: identical to the average estimate
        a.abs()
    } else if a < c && c <= b {
        // t = d_1c - c/2
        if smaller_is_fwd {
            c.abs()
        } else {
            (2 * a - c).abs()
        }
    } else {
        // remaining region: a <= b < c; t = d_1c - b/2
        debug_assert!(a <= b && b < c);
        if smaller_is_fwd {
            b.abs()
        } else {
            (2 * a - b).abs()
        }
    }
}

/// Analytic PMF of the average protocol's absolute error for the v1 edge.
/// `P{eps = 0} = sum_i f_fwd(i) f_rev(i)`;
/// `P{eps = x > 0} = sum_i f_fwd(i) f_rev(2x+i) + sum_i f_rev(i) f_fwd(2x+i)`.
pub fn av_error_pmf(fwd: &DiscretePmf, rev: &DiscretePmf) -> Result<HalfGridPmf, OwdError> {
    let mut out = HalfGridPmf::zeros(1);
    // eps = 0
    let mut p0 = 0.0;
    for (i, mf) in fwd.iter() {
        p0 += mf * rev.mass_at(i);
    }
    out.add_mass_half_units(0, p0);
    // eps = x > 0 on the half-ms grid: 2x runs over positive integers up to
    // the widest possible |fwd - rev| spread.
    let fwd_max = fwd.offset() + fwd.len() as i64 - 1;
    let rev_max = rev.offset() + rev.len() as i64 - 1;
    let max_span = (fwd_max - rev.offset()).max(rev_max - fwd.offset()).max(0);
    for two_x in 1..=max_span {
        let mut p = 0.0;
        for (i, mf) in fwd.iter() {
            p += mf * rev.mass_at(two_x + i);
        }
        for (i, mr) in rev.iter() {
            p += mr * fwd.mass_at(two_x + i);
        }
        if p > 0.0 {
            out.add_mass_half_units(two_x as usize, p);
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug)]
pub struct MpPmfOptions {
    /// Maximum tolerated total truncated tail mass across the six inputs.
    pub max_truncated_mass: f64,
}

impl Default for MpPmfOptions {
    fn default() -> Self {
        MpPmfOptions {
            max_truncated_mass: 1e-6,
        }
    }
}

/// Analytic PMF of the minimum-pairs absolute error for the v1 edge, from
/// the six per-edge delay PMFs ordered `(d_1c, d_c1, d_2c, d_c2, d_3c,
/// d_c3)`.
///
/// The estimator error depends on the realization only through the three
/// independent directed differences, so the full fourteen-cell case table is
/// evaluated by exhaustive enumeration over the joint support of those
/// differences; this is term-for-term the nested-sum expansion of the error
/// probability.
pub fn mp_error_pmf(
    edges: &[DiscretePmf; 6],
    options: MpPmfOptions,
) -> Result<HalfGridPmf, OwdError> {
    let truncated: f64 = edges.iter().map(|p| p.truncated_mass()).sum();
    if truncated > options.max_truncated_mass {
        return Err(OwdError::Pmf(PmfError::TruncationMass));
    }
    let ga = edges[0].difference(&edges[1]);
    let gb = edges[2].difference(&edges[3]);
    let gc = edges[4].difference(&edges[5]);

    let mut out = HalfGridPmf::zeros(1);
    for (a, pa) in ga.iter() {
        if pa == 0.0 {
            continue;
        }
        for (b, pb) in gb.iter() {
            let pab = pa * pb;
            if pab == 0.0 {
                continue;
            }
            for (c, pc) in gc.iter() {
                if pc == 0.0 {
                    continue;
                }
                let eps = mp_error_half_units(a, b, c);
                out.add_mass_half_units(eps as usize, pab * pc);
            }
        }
    }
    Ok(out)
}

/// Monte-Carlo oracle for the error distributions: simulates the protocol
/// arithmetic directly on Poisson-sampled edges and bins the absolute errors
/// on the half-ms grid. Returns `(mp, av)`.
pub fn monte_carlo_error_pmfs(
    means: &[f64; 6],
    samples: u64,
    rng: &mut SimRng,
) -> (HalfGridPmf, HalfGridPmf) {
    let mut mp = HalfGridPmf::zeros(1);
    let mut av = HalfGridPmf::zeros(1);
    let w = 1.0 / samples as f64;
    for _ in 0..samples {
        let mut d = [0i64; 6];
        for (k, &mean) in means.iter().enumerate() {
            d[k] = rng.poisson(mean) as i64;
        }
        let (mp_err, av_err) = pointwise_errors_half_units(&d);
        mp.add_mass_half_units(mp_err as usize, w);
        av.add_mass_half_units(av_err as usize, w);
    }
    (mp, av)
}
