//! Deterministic, seedable simulated network: nodes with geographic
//! positions and clock skew, directed edges with stochastic delay models, and
//! an event queue with a total, reproducible delivery order.

use crate::geo::{great_circle_km, GeoPoint};
use crate::rng::SimRng;
use alloc::collections::{BTreeMap, BinaryHeap};
use alloc::vec::Vec;
use core::cmp::Reverse;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SimError {
    MissingNode,
    MissingEdge,
    InvalidModel,
}

impl core::fmt::Display for SimError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SimError::MissingNode => write!(f, "node not present in topology"),
            SimError::MissingEdge => write!(f, "edge has no delay model"),
            SimError::InvalidModel => write!(f, "delay model parameters invalid"),
        }
    }
}

/// Node handle, unique within a topology.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

/// Stochastic one-way delay model for a directed edge. All samples are
/// nonnegative milliseconds.
#[derive(Clone, Debug)]
pub enum DelayModel {
    /// Fixed delay.
    Constant(f64),
    /// Poisson-distributed integer delay.
    Poisson { mean_ms: f64 },
    /// Gamma-distributed delay.
    Gamma { shape: f64, scale_ms: f64 },
    /// Gaussian truncated to [0, inf).
    TruncGaussian { mu_ms: f64, sigma_ms: f64 },
    /// Categorical table of (value, weight) pairs.
    Empirical { values_ms: Vec<f64>, weights: Vec<f64> },
    /// Base delay = great-circle distance / speed, optionally scaled by a
    /// lognormal factor with log-std `jitter_log_sigma` (median 1).
    DistanceDerived { speed_km_per_ms: f64, jitter_log_sigma: f64 },
    /// Sum of independent components, each with its own baked-in distance
    /// context (used for relay composition and last-mile augmentation).
    Sum(Vec<(DelayModel, f64)>),
}

impl DelayModel {
    pub fn validate(&self) -> Result<(), SimError> {
        match self {
            DelayModel::Constant(ms) => {
                if ms.is_finite() && *ms >= 0.0 {
                    Ok(())
                } else {
                    Err(SimError::InvalidModel)
                }
            }
            DelayModel::Poisson { mean_ms } => {
                if mean_ms.is_finite() && *mean_ms >= 0.0 {
                    Ok(())
                } else {
                    Err(SimError::InvalidModel)
                }
            }
            DelayModel::Gamma { shape, scale_ms } => {
                if *shape > 0.0 && *scale_ms > 0.0 {
                    Ok(())
                } else {
                    Err(SimError::InvalidModel)
                }
            }
            DelayModel::TruncGaussian { sigma_ms, .. } => {
                if *sigma_ms > 0.0 {
                    Ok(())
                } else {
                    Err(SimError::InvalidModel)
                }
            }
            DelayModel::Empirical { values_ms, weights } => {
                let ok = !values_ms.is_empty()
                    && values_ms.len() == weights.len()
                    && values_ms.iter().all(|v| v.is_finite() && *v >= 0.0)
                    && weights.iter().all(|w| w.is_finite() && *w >= 0.0)
                    && weights.iter().sum::<f64>() > 0.0;
                if ok {
                    Ok(())
                } else {
                    Err(SimError::InvalidModel)
                }
            }
            DelayModel::DistanceDerived { speed_km_per_ms, jitter_log_sigma } => {
                if *speed_km_per_ms > 0.0 && *jitter_log_sigma >= 0.0 {
                    Ok(())
                } else {
                    Err(SimError::InvalidModel)
                }
            }
            DelayModel::Sum(parts) => {
                if parts.is_empty() {
                    return Err(SimError::InvalidModel);
                }
                for (m, _) in parts {
                    m.validate()?;
                }
                Ok(())
            }
        }
    }

    /// Draw one delay. `distance_km` supplies the edge length for
    /// distance-derived models.
    pub fn sample(&self, distance_km: f64, rng: &mut SimRng) -> f64 {
        match self {
            DelayModel::Constant(ms) => *ms,
            DelayModel::Poisson { mean_ms } => rng.poisson(*mean_ms) as f64,
            DelayModel::Gamma { shape, scale_ms } => rng.gamma(*shape, *scale_ms),
            DelayModel::TruncGaussian { mu_ms, sigma_ms } => rng.truncated_gaussian(*mu_ms, *sigma_ms),
            DelayModel::Empirical { values_ms, weights } => {
                let total: f64 = weights.iter().sum();
                let mut u = rng.uniform() * total;
                for (v, w) in values_ms.iter().zip(weights) {
                    if u < *w {
                        return *v;
                    }
                    u -= w;
                }
                *values_ms.last().unwrap()
            }
            DelayModel::DistanceDerived { speed_km_per_ms, jitter_log_sigma } => {
                let base = distance_km / speed_km_per_ms;
                if *jitter_log_sigma > 0.0 {
                    base * rng.lognormal_factor(*jitter_log_sigma)
                } else {
                    base
                }
            }
            DelayModel::Sum(parts) => parts.iter().map(|(m, d)| m.sample(*d, rng)).sum(),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct NodeInfo {
    pub loc: GeoPoint,
    pub clock_skew_ms: f64,
}

/// Directed-edge network over geographically placed nodes.
#[derive(Clone, Debug, Default)]
pub struct Topology {
    nodes: BTreeMap<NodeId, NodeInfo>,
    edges: BTreeMap<(NodeId, NodeId), DelayModel>,
}

impl Topology {
    pub fn new() -> Self {
        Topology::default()
    }

    pub fn add_node(&mut self, id: NodeId, loc: GeoPoint, clock_skew_ms: f64) {
        self.nodes.insert(id, NodeInfo { loc, clock_skew_ms });
    }

    pub fn set_edge(&mut self, src: NodeId, dst: NodeId, model: DelayModel) -> Result<(), SimError> {
        model.validate()?;
        if !self.nodes.contains_key(&src) || !self.nodes.contains_key(&dst) {
            return Err(SimError::MissingNode);
        }
        self.edges.insert((src, dst), model);
        Ok(())
    }

    /// Install the same model in both directions.
    pub fn set_edge_bidirectional(
        &mut self,
        a: NodeId,
        b: NodeId,
        model: DelayModel,
    ) -> Result<(), SimError> {
        self.set_edge(a, b, model.clone())?;
        self.set_edge(b, a, model)
    }

    pub fn node(&self, id: NodeId) -> Result<&NodeInfo, SimError> {
        self.nodes.get(&id).ok_or(SimError::MissingNode)
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.keys().copied()
    }

    pub fn edge(&self, src: NodeId, dst: NodeId) -> Result<&DelayModel, SimError> {
        self.edges.get(&(src, dst)).ok_or(SimError::MissingEdge)
    }

    pub fn set_edge_model_override(&mut self, src: NodeId, dst: NodeId, model: DelayModel) {
        self.edges.insert((src, dst), model);
    }

    pub fn distance_km(&self, a: NodeId, b: NodeId) -> Result<f64, SimError> {
        Ok(great_circle_km(self.node(a)?.loc, self.node(b)?.loc))
    }

    pub fn clock_skew_ms(&self, id: NodeId) -> Result<f64, SimError> {
        Ok(self.node(id)?.clock_skew_ms)
    }

    /// One one-way delay sample along a directed edge.
    pub fn sample_owd(&self, src: NodeId, dst: NodeId, rng: &mut SimRng) -> Result<f64, SimError> {
        let dist = self.distance_km(src, dst)?;
        let model = self.edge(src, dst)?;
        Ok(model.sample(dist, rng))
    }

    /// Effective delay model for provider -> client traffic relayed through a
    /// middlebox: the sum of the two hops with their distances baked in.
    pub fn relay_compose(
        &self,
        provider: NodeId,
        mb: NodeId,
        client: NodeId,
    ) -> Result<DelayModel, SimError> {
        let first = self.edge(provider, mb)?.clone();
        let second = self.edge(mb, client)?.clone();
        let d1 = self.distance_km(provider, mb)?;
        let d2 = self.distance_km(mb, client)?;
        Ok(DelayModel::Sum(alloc::vec![(first, d1), (second, d2)]))
    }
}

/// Message traveling across the simulated network.
#[derive(Clone, Debug, PartialEq)]
pub struct Message {
    pub src: NodeId,
    pub dst: NodeId,
    pub payload: Payload,
    pub sent_at_ms: f64,
    pub signature: Option<Signature>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Payload {
    /// Signed timestamp as used by the OWD protocols: the signer's clock
    /// reading plus the identity of the origin verifier.
    Timestamp { origin: NodeId, stamp_ms: f64 },
    Opaque(u64),
}

/// HMAC-style verification tag. The mixing is a keyed integer hash: not
/// cryptographically strong, but forged or absent tags are detected, which is
/// all the simulated protocols require.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Signature {
    pub signer: NodeId,
    pub mac: u64,
}

pub fn mac_tag(key: u64, origin: NodeId, stamp_ms: f64) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ key;
    for chunk in [origin.0 as u64, stamp_ms.to_bits()] {
        h ^= chunk;
        h = h.wrapping_mul(0x100_0000_01b3);
        h ^= h >> 29;
        h = h.wrapping_mul(0xbf58_476d_1ce4_e5b9);
        h ^= h >> 32;
    }
    h
}

pub fn sign_timestamp(key: u64, origin: NodeId, stamp_ms: f64) -> Signature {
    Signature {
        signer: origin,
        mac: mac_tag(key, origin, stamp_ms),
    }
}

pub fn verify_timestamp(key: u64, sig: &Signature, origin: NodeId, stamp_ms: f64) -> bool {
    sig.signer == origin && sig.mac == mac_tag(key, origin, stamp_ms)
}

/// Simulated-time priority queue. Events pop in (time, insertion sequence)
/// order, so simultaneous deliveries resolve in send order and reruns with
/// the same seed replay the exact trace.
#[derive(Debug)]
pub struct EventQueue<T> {
    heap: BinaryHeap<Reverse<Entry<T>>>,
    seq: u64,
}

#[derive(Debug)]
struct Entry<T> {
    time_ms: f64,
    seq: u64,
    item: T,
}

impl<T> PartialEq for Entry<T> {
    fn eq(&self, other: &Self) -> bool {
        self.time_ms == other.time_ms && self.seq == other.seq
    }
}
impl<T> Eq for Entry<T> {}
impl<T> PartialOrd for Entry<T> {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Entry<T> {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        self.time_ms
            .total_cmp(&other.time_ms)
            .then(self.seq.cmp(&other.seq))
    }
}

impl<T> EventQueue<T> {
    pub fn new() -> Self {
        EventQueue {
            heap: BinaryHeap::new(),
            seq: 0,
        }
    }

    pub fn schedule(&mut self, time_ms: f64, item: T) {
        let entry = Entry {
            time_ms,
            seq: self.seq,
            item,
        };
        self.seq += 1;
        self.heap.push(Reverse(entry));
    }

    pub fn pop(&mut self) -> Option<(f64, T)> {
        self.heap.pop().map(|Reverse(e)| (e.time_ms, e.item))
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }
}

impl<T> Default for EventQueue<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// Queue a message send: samples the edge delay once and returns the
/// delivery event time.
pub fn send(
    topology: &Topology,
    queue: &mut EventQueue<Message>,
    msg: Message,
    rng: &mut SimRng,
) -> Result<f64, SimError> {
    let owd = topology.sample_owd(msg.src, msg.dst, rng)?;
    let arrival = msg.sent_at_ms + owd;
    queue.schedule(arrival, msg);
    Ok(arrival)
}
