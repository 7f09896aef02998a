//! The repository's reproducible stand-in for a real measurement testbed:
//! nodes scattered uniformly over a large square region, distance-derived
//! delays at a fraction of c with multiplicative lognormal jitter.

use crate::config::RefTopoParams;
use locverify_core::geo::{
    away_ratio, outside_distance, point_in_triangle, GeoPoint, PlanarPoint, Triangle,
    SPEED_OF_LIGHT_KM_S,
};
use locverify_core::rng::SimRng;
use locverify_core::simnet::{DelayModel, NodeId, Topology};

/// Kilometres per degree of latitude on the reference sphere.
const KM_PER_DEG: f64 = 111.19492664455873; // pi * 6371 / 180

pub struct ReferenceTopology {
    pub topology: Topology,
    pub nodes: Vec<NodeId>,
}

/// Build the reference topology. Node placement consumes the RNG stream, so
/// a fixed seed pins both the layout and every later delay draw.
pub fn build(params: &RefTopoParams, rng: &mut SimRng) -> ReferenceTopology {
    let mut topology = Topology::new();
    let half_deg = params.region_km / 2.0 / KM_PER_DEG;
    let mut nodes = Vec::with_capacity(params.nodes as usize);
    for i in 0..params.nodes {
        let lat = rng.uniform_range(-half_deg, half_deg);
        let lon = rng.uniform_range(-half_deg, half_deg);
        let id = NodeId(i);
        topology.add_node(id, GeoPoint::new(lat, lon).expect("in range"), 0.0);
        nodes.push(id);
    }
    let model = DelayModel::DistanceDerived {
        speed_km_per_ms: params.speed_fraction_c * SPEED_OF_LIGHT_KM_S / 1000.0,
        jitter_log_sigma: params.jitter_log_sigma,
    };
    for &a in &nodes {
        for &b in &nodes {
            if a != b {
                topology
                    .set_edge(a, b, model.clone())
                    .expect("nodes exist");
            }
        }
    }
    ReferenceTopology { topology, nodes }
}

/// A verification triangle over reference-topology nodes, with the planar
/// ground-truth geometry used to label clients.
pub struct RefTriangle {
    pub verifiers: [NodeId; 3],
    /// Planar triangle in a local projection centered at the centroid.
    pub planar: Triangle,
    pub origin: GeoPoint,
}

impl RefTriangle {
    pub fn project(&self, loc: GeoPoint) -> PlanarPoint {
        loc.to_planar(self.origin)
    }

    pub fn contains(&self, loc: GeoPoint) -> bool {
        point_in_triangle(self.project(loc), &self.planar)
    }

    pub fn away(&self, loc: GeoPoint) -> Option<f64> {
        away_ratio(&self.planar, self.project(loc)).ok()
    }

    pub fn outside_distance_km(&self, loc: GeoPoint) -> Option<f64> {
        outside_distance(&self.planar, self.project(loc)).ok()
    }
}

/// Select near-equilateral verification triangles: internal angles within
/// [50, 70] degrees and sides within the given span, mirroring how real
/// deployments pick triangles that are equilateral-ish in delay space.
pub fn select_triangles(
    topo: &ReferenceTopology,
    count: usize,
    side_km: (f64, f64),
    rng: &mut SimRng,
) -> Vec<RefTriangle> {
    let n = topo.nodes.len();
    let mut out: Vec<RefTriangle> = Vec::new();
    let mut attempts = 0;
    while out.len() < count && attempts < 200_000 {
        attempts += 1;
        let mut picks = [0usize; 3];
        picks[0] = rng.below(n as u64) as usize;
        picks[1] = rng.below(n as u64) as usize;
        picks[2] = rng.below(n as u64) as usize;
        if picks[0] == picks[1] || picks[1] == picks[2] || picks[0] == picks[2] {
            continue;
        }
        let verifiers = [
            topo.nodes[picks[0]],
            topo.nodes[picks[1]],
            topo.nodes[picks[2]],
        ];
        // Avoid reusing a triangle.
        if out.iter().any(|t| {
            let mut a = t.verifiers;
            let mut b = verifiers;
            a.sort_by_key(|v| v.0);
            b.sort_by_key(|v| v.0);
            a == b
        }) {
            continue;
        }
        let locs: Vec<GeoPoint> = verifiers
            .iter()
            .map(|v| topo.topology.node(*v).expect("exists").loc)
            .collect();
        let centroid = GeoPoint::new(
            locs.iter().map(|l| l.lat_deg()).sum::<f64>() / 3.0,
            locs.iter().map(|l| l.lon_deg()).sum::<f64>() / 3.0,
        )
        .expect("in range");
        let pts: Vec<PlanarPoint> = locs.iter().map(|l| l.to_planar(centroid)).collect();
        let sides = [
            pts[0].distance(&pts[1]),
            pts[1].distance(&pts[2]),
            pts[2].distance(&pts[0]),
        ];
        if sides.iter().any(|&s| s < side_km.0 || s > side_km.1) {
            continue;
        }
        // Internal angles from the law of cosines.
        let angle = |a: f64, b: f64, c: f64| -> f64 {
            ((b * b + c * c - a * a) / (2.0 * b * c)).clamp(-1.0, 1.0).acos().to_degrees()
        };
        let angles = [
            angle(sides[1], sides[0], sides[2]),
            angle(sides[2], sides[0], sides[1]),
            angle(sides[0], sides[1], sides[2]),
        ];
        if angles.iter().any(|&a| !(50.0..=70.0).contains(&a)) {
            continue;
        }
        let Ok(planar) = Triangle::new(pts[0], pts[1], pts[2]) else {
            continue;
        };
        out.push(RefTriangle {
            verifiers,
            planar,
            origin: centroid,
        });
    }
    out
}
