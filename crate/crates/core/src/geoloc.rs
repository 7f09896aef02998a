//! The three delay-based geolocation techniques evaluated under delay
//! manipulation: constraint-based geolocation (CBG), nearest-delay-vector
//! matching (GeoPing), and segmented polynomial delay-to-distance mapping
//! (SegPoly).

use crate::geo::{GeoError, GeoPoint, PlanarPoint};
use crate::math;
use crate::simnet::NodeId;
use alloc::vec;
use alloc::vec::Vec;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeolocError {
    /// Fewer calibration points than the fit requires.
    NotEnoughPoints,
    /// No invertible best line exists (all peers share one delay, or the
    /// feasible fits have non-positive slope).
    Degenerate,
    /// Delay vectors of differing lengths.
    DimensionMismatch,
    EmptyReferenceSet,
    /// The constraint disks share no common region.
    EmptyIntersection,
    /// A cluster has too few points for the polynomial degree.
    Underdetermined,
    /// More clusters requested than calibration points.
    KTooLarge,
    /// Linear system for the polynomial fit is singular.
    Singular,
    Geo(GeoError),
}

impl core::fmt::Display for GeolocError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            GeolocError::NotEnoughPoints => write!(f, "not enough calibration points"),
            GeolocError::Degenerate => write!(f, "degenerate calibration data"),
            GeolocError::DimensionMismatch => write!(f, "delay vector length mismatch"),
            GeolocError::EmptyReferenceSet => write!(f, "no reference nodes"),
            GeolocError::EmptyIntersection => write!(f, "constraint disks do not intersect"),
            GeolocError::Underdetermined => write!(f, "cluster underdetermined for degree"),
            GeolocError::KTooLarge => write!(f, "more clusters than points"),
            GeolocError::Singular => write!(f, "singular least-squares system"),
            GeolocError::Geo(e) => write!(f, "{e}"),
        }
    }
}

impl From<GeoError> for GeolocError {
    fn from(e: GeoError) -> Self {
        GeolocError::Geo(e)
    }
}

/// CBG's calibrated delay-to-distance line for one landmark. The fit runs in
/// (distance, RTT) space -- the line lies on or below every calibration
/// point with a nonnegative RTT intercept -- and is stored inverted, as
/// kilometres per millisecond plus the RTT-axis intercept.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BestLine {
    pub km_per_ms: f64,
    pub intercept_ms: f64,
}

impl BestLine {
    /// Map a measured RTT to a constraint radius.
    pub fn radius_km(&self, rtt_ms: f64) -> f64 {
        (self.km_per_ms * (rtt_ms - self.intercept_ms)).max(0.0)
    }
}

/// Fit the best line from (rtt_ms, distance_km) peer observations: the line
/// in (distance, RTT) space that minimizes total vertical slack subject to
/// lying on-or-below all points, with nonnegative intercept. The optimum is a
/// lower-convex-hull edge or the steepest feasible line through the origin.
pub fn cbg_calibrate(peers: &[(f64, f64)]) -> Result<BestLine, GeolocError> {
    if peers.len() < 2 {
        return Err(GeolocError::NotEnoughPoints);
    }
    // Work in (x = distance, y = rtt).
    let pts: Vec<(f64, f64)> = peers.iter().map(|&(rtt, dist)| (dist, rtt)).collect();
    if pts.iter().any(|&(x, y)| !x.is_finite() || !y.is_finite() || x < 0.0 || y < 0.0) {
        return Err(GeolocError::Degenerate);
    }
    // All peers at a single delay value carry no slope information.
    let rtt_lo = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let rtt_hi = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    if rtt_hi - rtt_lo < 1e-12 {
        return Err(GeolocError::Degenerate);
    }
    let feasible = |m: f64, c: f64| -> bool {
        m > 0.0 && c >= -1e-12 && pts.iter().all(|&(x, y)| y >= m * x + c - 1e-9)
    };
    let slack = |m: f64, c: f64| -> f64 { pts.iter().map(|&(x, y)| y - m * x - c).sum() };

    let mut best: Option<(f64, f64, f64)> = None; // (slack, m, c)
    let mut consider = |m: f64, c: f64| {
        if feasible(m, c) {
            let s = slack(m, c.max(0.0));
            if best.map(|(bs, _, _)| s < bs - 1e-12).unwrap_or(true) {
                best = Some((s, m, c.max(0.0)));
            }
        }
    };
    // Candidate lines through every point pair (lower-hull edges are a
    // subset; with the small peer sets used here the full pair scan is
    // simpler and exact).
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            let (x1, y1) = pts[i];
            let (x2, y2) = pts[j];
            if (x1 - x2).abs() < 1e-12 {
                continue;
            }
            let m = (y2 - y1) / (x2 - x1);
            let c = y1 - m * x1;
            consider(m, c);
        }
    }
    // Zero-intercept candidate: steepest origin line below all points.
    let m0 = pts
        .iter()
        .filter(|&&(x, _)| x > 1e-12)
        .map(|&(x, y)| y / x)
        .fold(f64::INFINITY, f64::min);
    if m0.is_finite() {
        consider(m0, 0.0);
    }
    match best {
        Some((_, m, c)) => Ok(BestLine {
            km_per_ms: 1.0 / m,
            intercept_ms: c,
        }),
        None => Err(GeolocError::Degenerate),
    }
}

/// A landmark with its calibrated delay-to-distance mapping.
#[derive(Clone, Debug)]
pub struct Landmark<M> {
    pub node: NodeId,
    pub loc: GeoPoint,
    pub calibration: M,
}

/// Convex region produced by multilateration.
#[derive(Clone, Debug)]
pub struct Region {
    pub centroid: GeoPoint,
    pub area_km2: f64,
}

/// Number of segments per constraint circle.
const CIRCLE_SEGMENTS: usize = 360;

fn disk_polygon(center: PlanarPoint, radius: f64) -> Vec<PlanarPoint> {
    // Circumscribed polygon: contains the full disk, so constraint circles
    // that barely touch still intersect. Overstates the area by ~0.005%.
    let r = radius / math::cos(math::PI / CIRCLE_SEGMENTS as f64);
    (0..CIRCLE_SEGMENTS)
        .map(|k| {
            let theta = 2.0 * math::PI * k as f64 / CIRCLE_SEGMENTS as f64;
            PlanarPoint {
                x_km: center.x_km + r * math::cos(theta),
                y_km: center.y_km + r * math::sin(theta),
            }
        })
        .collect()
}

/// Sutherland-Hodgman clip of `subject` against convex `clip` (CCW).
fn clip_convex(subject: &[PlanarPoint], clip: &[PlanarPoint]) -> Vec<PlanarPoint> {
    let mut out: Vec<PlanarPoint> = subject.to_vec();
    for i in 0..clip.len() {
        if out.is_empty() {
            return out;
        }
        let a = clip[i];
        let b = clip[(i + 1) % clip.len()];
        let inside = |p: &PlanarPoint| -> bool {
            (b.x_km - a.x_km) * (p.y_km - a.y_km) - (b.y_km - a.y_km) * (p.x_km - a.x_km) >= 0.0
        };
        let intersect = |p: &PlanarPoint, q: &PlanarPoint| -> PlanarPoint {
            let a1 = b.y_km - a.y_km;
            let b1 = a.x_km - b.x_km;
            let c1 = a1 * a.x_km + b1 * a.y_km;
            let a2 = q.y_km - p.y_km;
            let b2 = p.x_km - q.x_km;
            let c2 = a2 * p.x_km + b2 * p.y_km;
            let det = a1 * b2 - a2 * b1;
            PlanarPoint {
                x_km: (b2 * c1 - b1 * c2) / det,
                y_km: (a1 * c2 - a2 * c1) / det,
            }
        };
        let input = out;
        out = Vec::with_capacity(input.len() + 4);
        for k in 0..input.len() {
            let cur = input[k];
            let prev = input[(k + input.len() - 1) % input.len()];
            if inside(&cur) {
                if !inside(&prev) {
                    out.push(intersect(&prev, &cur));
                }
                out.push(cur);
            } else if inside(&prev) {
                out.push(intersect(&prev, &cur));
            }
        }
    }
    out
}

fn polygon_area_centroid(poly: &[PlanarPoint]) -> (f64, PlanarPoint) {
    let mut a2 = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 0..poly.len() {
        let p = poly[i];
        let q = poly[(i + 1) % poly.len()];
        let w = p.x_km * q.y_km - q.x_km * p.y_km;
        a2 += w;
        cx += (p.x_km + q.x_km) * w;
        cy += (p.y_km + q.y_km) * w;
    }
    let area = 0.5 * a2;
    if math::fabs(area) < 1e-12 {
        let n = poly.len().max(1) as f64;
        let cx = poly.iter().map(|p| p.x_km).sum::<f64>() / n;
        let cy = poly.iter().map(|p| p.y_km).sum::<f64>() / n;
        return (0.0, PlanarPoint { x_km: cx, y_km: cy });
    }
    (
        math::fabs(area),
        PlanarPoint {
            x_km: cx / (3.0 * a2),
            y_km: cy / (3.0 * a2),
        },
    )
}

/// Azimuthal equidistant projection about `origin`: distances and bearings
/// from the origin are preserved exactly, which keeps constraint-disk
/// geometry honest over the sub-continental fields used here.
fn azimuthal_forward(origin: GeoPoint, p: GeoPoint) -> PlanarPoint {
    let lat0 = origin.lat_deg().to_radians();
    let lat = p.lat_deg().to_radians();
    let dlon = (p.lon_deg() - origin.lon_deg()).to_radians();
    let cosc = (math::sin(lat0) * math::sin(lat)
        + math::cos(lat0) * math::cos(lat) * math::cos(dlon))
    .clamp(-1.0, 1.0);
    let c = libm::acos(cosc);
    if c < 1e-12 {
        return PlanarPoint { x_km: 0.0, y_km: 0.0 };
    }
    let y_dir = math::cos(lat0) * math::sin(lat) - math::sin(lat0) * math::cos(lat) * math::cos(dlon);
    let x_dir = math::cos(lat) * math::sin(dlon);
    let bearing = math::atan2(x_dir, y_dir);
    let d = crate::geo::EARTH_RADIUS_KM * c;
    PlanarPoint {
        x_km: d * math::sin(bearing),
        y_km: d * math::cos(bearing),
    }
}

fn azimuthal_inverse(origin: GeoPoint, p: PlanarPoint) -> Result<GeoPoint, GeolocError> {
    let d = math::sqrt(p.x_km * p.x_km + p.y_km * p.y_km);
    if d < 1e-12 {
        return Ok(origin);
    }
    let c = d / crate::geo::EARTH_RADIUS_KM;
    let bearing = math::atan2(p.x_km, p.y_km);
    let lat0 = origin.lat_deg().to_radians();
    let lat = libm::asin(
        (math::sin(lat0) * math::cos(c) + math::cos(lat0) * math::sin(c) * math::cos(bearing))
            .clamp(-1.0, 1.0),
    );
    let lon = origin.lon_deg().to_radians()
        + math::atan2(
            math::sin(bearing) * math::sin(c) * math::cos(lat0),
            math::cos(c) - math::sin(lat0) * math::sin(lat),
        );
    Ok(GeoPoint::new(lat.to_degrees(), lon.to_degrees())?)
}

/// Intersect constraint disks in a local plane centered at the landmark
/// centroid; return the region centroid (as a geographic point) and area.
pub fn multilaterate(centers: &[GeoPoint], radii_km: &[f64]) -> Result<Region, GeolocError> {
    if centers.len() < 3 || centers.len() != radii_km.len() {
        return Err(GeolocError::NotEnoughPoints);
    }
    let origin = GeoPoint::new(
        centers.iter().map(|c| c.lat_deg()).sum::<f64>() / centers.len() as f64,
        centers.iter().map(|c| c.lon_deg()).sum::<f64>() / centers.len() as f64,
    )?;
    // The projection stretches distances between off-origin points by up to
    // (d/R)^2 / 6 at field radius d. Inflate radii by twice that bound so a
    // point inside every spherical disk stays inside every planar disk; the
    // area overstatement is far below the method's accuracy needs.
    let planar_centers: Vec<PlanarPoint> =
        centers.iter().map(|c| azimuthal_forward(origin, *c)).collect();
    let d_max = planar_centers
        .iter()
        .map(|p| math::sqrt(p.x_km * p.x_km + p.y_km * p.y_km))
        .fold(0.0, f64::max);
    let ratio = d_max / crate::geo::EARTH_RADIUS_KM;
    let stretch = 1.0 + ratio * ratio / 3.0;
    let mut region: Option<Vec<PlanarPoint>> = None;
    for (c, &r) in planar_centers.iter().zip(radii_km) {
        if r <= 0.0 {
            return Err(GeolocError::EmptyIntersection);
        }
        let poly = disk_polygon(*c, r * stretch);
        region = Some(match region {
            None => poly,
            Some(cur) => clip_convex(&cur, &poly),
        });
        if region.as_ref().map(|r| r.len() < 3).unwrap_or(true) {
            return Err(GeolocError::EmptyIntersection);
        }
    }
    let region = region.unwrap();
    let (area, centroid) = polygon_area_centroid(&region);
    if area <= 0.0 {
        return Err(GeolocError::EmptyIntersection);
    }
    Ok(Region {
        centroid: azimuthal_inverse(origin, centroid)?,
        area_km2: area,
    })
}

/// CBG location estimate: map each landmark's RTT to a radius through its
/// best line and intersect the disks.
pub fn cbg_locate(
    landmarks: &[Landmark<BestLine>],
    rtts_ms: &[f64],
) -> Result<(GeoPoint, f64), GeolocError> {
    if landmarks.len() < 3 || landmarks.len() != rtts_ms.len() {
        return Err(GeolocError::NotEnoughPoints);
    }
    let centers: Vec<GeoPoint> = landmarks.iter().map(|l| l.loc).collect();
    let radii: Vec<f64> = landmarks
        .iter()
        .zip(rtts_ms)
        .map(|(l, &rtt)| l.calibration.radius_km(rtt))
        .collect();
    let region = multilaterate(&centers, &radii)?;
    Ok((region.centroid, region.area_km2))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VectorMetric {
    Euclidean,
    Manhattan,
    Canberra,
    Chebyshev,
}

fn vector_distance(metric: VectorMetric, a: &[f64], b: &[f64]) -> f64 {
    match metric {
        VectorMetric::Euclidean => {
            math::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>())
        }
        VectorMetric::Manhattan => a.iter().zip(b).map(|(x, y)| math::fabs(x - y)).sum(),
        VectorMetric::Canberra => a
            .iter()
            .zip(b)
            .map(|(x, y)| {
                let denom = math::fabs(*x) + math::fabs(*y);
                if denom == 0.0 {
                    0.0
                } else {
                    math::fabs(x - y) / denom
                }
            })
            .sum(),
        VectorMetric::Chebyshev => a
            .iter()
            .zip(b)
            .map(|(x, y)| math::fabs(x - y))
            .fold(0.0, f64::max),
    }
}

/// GeoPing: return the location of the reference node whose delay vector is
/// nearest to the client's. Ties break toward the lowest node id.
pub fn geoping_locate(
    references: &[(NodeId, GeoPoint, Vec<f64>)],
    client_vector: &[f64],
    metric: VectorMetric,
) -> Result<GeoPoint, GeolocError> {
    if references.is_empty() {
        return Err(GeolocError::EmptyReferenceSet);
    }
    let mut best: Option<(f64, NodeId, GeoPoint)> = None;
    for (id, loc, vector) in references {
        if vector.len() != client_vector.len() {
            return Err(GeolocError::DimensionMismatch);
        }
        let d = vector_distance(metric, vector, client_vector);
        let better = match best {
            None => true,
            Some((bd, bid, _)) => d < bd || (d == bd && *id < bid),
        };
        if better {
            best = Some((d, *id, *loc));
        }
    }
    Ok(best.unwrap().2)
}

/// One delay segment of a segmented polynomial model.
#[derive(Clone, Debug)]
pub struct SegPolyCluster {
    pub lo_ms: f64,
    pub hi_ms: f64,
    /// Polynomial coefficients, ascending powers of rtt.
    pub coeffs: Vec<f64>,
}

/// Per-landmark segmented polynomial delay-to-distance mapping: calibration
/// observations are k-means clustered on delay and each cluster carries a
/// least-squares polynomial. Cluster ranges partition the observed span.
#[derive(Clone, Debug)]
pub struct SegPolyModel {
    pub clusters: Vec<SegPolyCluster>,
}

impl SegPolyModel {
    pub fn radius_km(&self, rtt_ms: f64) -> f64 {
        // Select the cluster whose range holds the delay; clamp outside the
        // observed span to the nearest segment.
        let cluster = self
            .clusters
            .iter()
            .find(|c| rtt_ms >= c.lo_ms && rtt_ms < c.hi_ms)
            .unwrap_or_else(|| {
                if rtt_ms < self.clusters[0].lo_ms {
                    &self.clusters[0]
                } else {
                    self.clusters.last().unwrap()
                }
            });
        let mut acc = 0.0;
        for &c in cluster.coeffs.iter().rev() {
            acc = acc * rtt_ms + c;
        }
        acc.max(0.0)
    }
}

/// Plain 1-D k-means (Lloyd) with deterministic quantile initialization.
/// Returns per-point cluster assignments, clusters ordered by center.
#[allow(clippy::needless_range_loop)]
fn kmeans_1d(values: &[f64], k: usize) -> Vec<usize> {
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut centers: Vec<f64> = (0..k)
        .map(|i| sorted[((i as f64 + 0.5) / k as f64 * sorted.len() as f64) as usize])
        .collect();
    let mut assign = vec![0usize; values.len()];
    for _ in 0..100 {
        let mut changed = false;
        for (i, &v) in values.iter().enumerate() {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, &center) in centers.iter().enumerate() {
                let d = math::fabs(v - center);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            if assign[i] != best {
                assign[i] = best;
                changed = true;
            }
        }
        for c in 0..k {
            let members: Vec<f64> = values
                .iter()
                .zip(&assign)
                .filter(|(_, &a)| a == c)
                .map(|(&v, _)| v)
                .collect();
            if !members.is_empty() {
                centers[c] = members.iter().sum::<f64>() / members.len() as f64;
            }
        }
        if !changed {
            break;
        }
    }
    assign
}

/// Least-squares polynomial fit via the normal equations with partial
/// pivoting. `degree + 1` coefficients, ascending powers.
#[allow(clippy::needless_range_loop)]
fn polyfit(xs: &[f64], ys: &[f64], degree: usize) -> Result<Vec<f64>, GeolocError> {
    let n = degree + 1;
    if xs.len() < n {
        return Err(GeolocError::Underdetermined);
    }
    // Normal matrix A[i][j] = sum x^(i+j), rhs[i] = sum y x^i.
    let mut a = vec![vec![0.0; n]; n];
    let mut rhs = vec![0.0; n];
    for (&x, &y) in xs.iter().zip(ys) {
        let mut powers = vec![1.0; 2 * n - 1];
        for p in 1..2 * n - 1 {
            powers[p] = powers[p - 1] * x;
        }
        for i in 0..n {
            for j in 0..n {
                a[i][j] += powers[i + j];
            }
            rhs[i] += y * powers[i];
        }
    }
    // Gaussian elimination.
    for col in 0..n {
        let mut pivot = col;
        for row in (col + 1)..n {
            if math::fabs(a[row][col]) > math::fabs(a[pivot][col]) {
                pivot = row;
            }
        }
        if math::fabs(a[pivot][col]) < 1e-12 {
            return Err(GeolocError::Singular);
        }
        a.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in (col + 1)..n {
            let f = a[row][col] / a[col][col];
            for j in col..n {
                a[row][j] -= f * a[col][j];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut coeffs = vec![0.0; n];
    for i in (0..n).rev() {
        let mut acc = rhs[i];
        for j in (i + 1)..n {
            acc -= a[i][j] * coeffs[j];
        }
        coeffs[i] = acc / a[i][i];
    }
    Ok(coeffs)
}

/// Calibrate a segmented polynomial model from (rtt_ms, distance_km) points.
pub fn segpoly_calibrate(
    points: &[(f64, f64)],
    k: usize,
    degree: usize,
) -> Result<SegPolyModel, GeolocError> {
    if k == 0 || points.is_empty() {
        return Err(GeolocError::NotEnoughPoints);
    }
    if k > points.len() {
        return Err(GeolocError::KTooLarge);
    }
    let rtts: Vec<f64> = points.iter().map(|p| p.0).collect();
    let assign = kmeans_1d(&rtts, k);
    // Gather clusters and order them by their delay range.
    let mut clusters: Vec<(Vec<f64>, Vec<f64>)> = vec![(Vec::new(), Vec::new()); k];
    for (i, &(rtt, dist)) in points.iter().enumerate() {
        clusters[assign[i]].0.push(rtt);
        clusters[assign[i]].1.push(dist);
    }
    clusters.retain(|(xs, _)| !xs.is_empty());
    clusters.sort_by(|a, b| {
        let ma = a.0.iter().sum::<f64>() / a.0.len() as f64;
        let mb = b.0.iter().sum::<f64>() / b.0.len() as f64;
        ma.total_cmp(&mb)
    });
    let mut built: Vec<SegPolyCluster> = Vec::with_capacity(clusters.len());
    for (xs, ys) in &clusters {
        let coeffs = polyfit(xs, ys, degree)?;
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        built.push(SegPolyCluster { lo_ms: lo, hi_ms: hi, coeffs });
    }
    // Partition the observed span: boundaries midway between neighbors,
    // outer edges open to the span limits.
    for i in 0..built.len() {
        if i + 1 < built.len() {
            let mid = 0.5 * (built[i].hi_ms + built[i + 1].lo_ms);
            built[i].hi_ms = mid;
            built[i + 1].lo_ms = mid;
        } else {
            built[i].hi_ms = f64::INFINITY;
        }
    }
    built[0].lo_ms = f64::NEG_INFINITY;
    Ok(SegPolyModel { clusters: built })
}

/// SegPoly location estimate: multilateration with segmented-polynomial
/// radii.
pub fn segpoly_locate(
    landmarks: &[Landmark<SegPolyModel>],
    rtts_ms: &[f64],
) -> Result<(GeoPoint, f64), GeolocError> {
    if landmarks.len() < 3 || landmarks.len() != rtts_ms.len() {
        return Err(GeolocError::NotEnoughPoints);
    }
    let centers: Vec<GeoPoint> = landmarks.iter().map(|l| l.loc).collect();
    let radii: Vec<f64> = landmarks
        .iter()
        .zip(rtts_ms)
        .map(|(l, &rtt)| l.calibration.radius_km(rtt))
        .collect();
    let region = multilaterate(&centers, &radii)?;
    Ok((region.centroid, region.area_km2))
}
