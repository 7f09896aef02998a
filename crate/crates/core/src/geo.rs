//! Geodesy and triangle geometry shared by the rest of the stack:
//! great-circle distance, spherical direction error, Heron areas,
//! point-in-triangle predicates, and the proximity metrics used when scoring
//! verification runs.

use crate::math;

/// Spherical Earth radius in km.
pub const EARTH_RADIUS_KM: f64 = 6371.0;
/// Speed of light in vacuum, km/s.
pub const SPEED_OF_LIGHT_KM_S: f64 = 299_792.458;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeoError {
    /// Latitude or longitude outside its legal range, or not finite.
    InvalidCoordinate,
    /// Inputs coincide where distinct points are required.
    DegenerateInput,
    /// Side lengths that violate the triangle inequality. Callers count these.
    TriangleInequalityViolation,
    /// The queried point is on the wrong side of the triangle boundary for
    /// the requested metric.
    WrongRegion,
}

impl core::fmt::Display for GeoError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            GeoError::InvalidCoordinate => write!(f, "coordinate out of range or not finite"),
            GeoError::DegenerateInput => write!(f, "degenerate input points"),
            GeoError::TriangleInequalityViolation => write!(f, "triangle inequality violation"),
            GeoError::WrongRegion => write!(f, "point is not in the required region"),
        }
    }
}

/// Geographic position in degrees. Longitude uses (-180, 180].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeoPoint {
    lat_deg: f64,
    lon_deg: f64,
}

impl GeoPoint {
    pub fn new(lat_deg: f64, lon_deg: f64) -> Result<Self, GeoError> {
        if !lat_deg.is_finite()
            || !lon_deg.is_finite()
            || !(-90.0..=90.0).contains(&lat_deg)
            || lon_deg <= -180.0
            || lon_deg > 180.0
        {
            return Err(GeoError::InvalidCoordinate);
        }
        Ok(GeoPoint { lat_deg, lon_deg })
    }

    pub fn lat_deg(&self) -> f64 {
        self.lat_deg
    }

    pub fn lon_deg(&self) -> f64 {
        self.lon_deg
    }

    fn lat_rad(&self) -> f64 {
        self.lat_deg.to_radians()
    }

    fn lon_rad(&self) -> f64 {
        self.lon_deg.to_radians()
    }

    /// Project onto a local tangent plane centered at `origin`
    /// (equirectangular; adequate for the sub-continental regions used here).
    pub fn to_planar(&self, origin: GeoPoint) -> PlanarPoint {
        let x = EARTH_RADIUS_KM * (self.lon_rad() - origin.lon_rad()) * math::cos(origin.lat_rad());
        let y = EARTH_RADIUS_KM * (self.lat_rad() - origin.lat_rad());
        PlanarPoint { x_km: x, y_km: y }
    }
}

/// Position on a local plane, km.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlanarPoint {
    pub x_km: f64,
    pub y_km: f64,
}

impl PlanarPoint {
    pub fn new(x_km: f64, y_km: f64) -> Result<Self, GeoError> {
        if !x_km.is_finite() || !y_km.is_finite() {
            return Err(GeoError::InvalidCoordinate);
        }
        Ok(PlanarPoint { x_km, y_km })
    }

    /// Inverse of [`GeoPoint::to_planar`].
    pub fn to_geo(&self, origin: GeoPoint) -> Result<GeoPoint, GeoError> {
        let lat = origin.lat_rad() + self.y_km / EARTH_RADIUS_KM;
        let lon = origin.lon_rad() + self.x_km / (EARTH_RADIUS_KM * math::cos(origin.lat_rad()));
        GeoPoint::new(lat.to_degrees(), lon.to_degrees())
    }

    pub fn distance(&self, other: &PlanarPoint) -> f64 {
        let dx = self.x_km - other.x_km;
        let dy = self.y_km - other.y_km;
        math::sqrt(dx * dx + dy * dy)
    }
}

/// Planar triangle with non-collinear vertices.
#[derive(Clone, Copy, Debug)]
pub struct Triangle {
    vertices: [PlanarPoint; 3],
}

impl Triangle {
    pub fn new(a: PlanarPoint, b: PlanarPoint, c: PlanarPoint) -> Result<Self, GeoError> {
        let t = Triangle { vertices: [a, b, c] };
        if t.area() <= 0.0 {
            return Err(GeoError::DegenerateInput);
        }
        Ok(t)
    }

    pub fn vertices(&self) -> [PlanarPoint; 3] {
        self.vertices
    }

    /// Shoelace area, km^2.
    pub fn area(&self) -> f64 {
        let [a, b, c] = self.vertices;
        0.5 * math::fabs(cross(a, b, c))
    }

    pub fn centroid(&self) -> PlanarPoint {
        let [a, b, c] = self.vertices;
        PlanarPoint {
            x_km: (a.x_km + b.x_km + c.x_km) / 3.0,
            y_km: (a.y_km + b.y_km + c.y_km) / 3.0,
        }
    }

    /// Sides indexed 0..3 as (v0,v1), (v1,v2), (v2,v0).
    pub fn side(&self, i: usize) -> (PlanarPoint, PlanarPoint) {
        let [a, b, c] = self.vertices;
        match i {
            0 => (a, b),
            1 => (b, c),
            2 => (c, a),
            _ => panic!("triangle side index out of range"),
        }
    }

    /// Index of the side closest to `p`. Equidistant sides resolve to the
    /// lowest index.
    pub fn closest_side(&self, p: PlanarPoint) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for i in 0..3 {
            let (s, e) = self.side(i);
            let d = point_segment_distance(p, s, e);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }
}

fn cross(o: PlanarPoint, a: PlanarPoint, b: PlanarPoint) -> f64 {
    (a.x_km - o.x_km) * (b.y_km - o.y_km) - (a.y_km - o.y_km) * (b.x_km - o.x_km)
}

/// Distance from `p` to segment `[s, e]`, km.
pub fn point_segment_distance(p: PlanarPoint, s: PlanarPoint, e: PlanarPoint) -> f64 {
    let vx = e.x_km - s.x_km;
    let vy = e.y_km - s.y_km;
    let len2 = vx * vx + vy * vy;
    if len2 == 0.0 {
        return p.distance(&s);
    }
    let t = ((p.x_km - s.x_km) * vx + (p.y_km - s.y_km) * vy) / len2;
    let t = t.clamp(0.0, 1.0);
    let proj = PlanarPoint {
        x_km: s.x_km + t * vx,
        y_km: s.y_km + t * vy,
    };
    p.distance(&proj)
}

/// Great-circle distance between two geographic points, km (haversine on a
/// 6371 km sphere).
pub fn great_circle_km(a: GeoPoint, b: GeoPoint) -> f64 {
    let dlat = b.lat_rad() - a.lat_rad();
    let dlon = b.lon_rad() - a.lon_rad();
    let h = math::sin(dlat / 2.0) * math::sin(dlat / 2.0)
        + math::cos(a.lat_rad()) * math::cos(b.lat_rad()) * math::sin(dlon / 2.0) * math::sin(dlon / 2.0);
    let h = h.clamp(0.0, 1.0);
    let central = 2.0 * math::atan2(math::sqrt(h), math::sqrt(1.0 - h));
    EARTH_RADIUS_KM * central
}

/// Initial great-circle bearing from `from` toward `to`, radians in (-pi, pi].
fn initial_bearing(from: GeoPoint, to: GeoPoint) -> f64 {
    let dlon = to.lon_rad() - from.lon_rad();
    let y = math::sin(dlon) * math::cos(to.lat_rad());
    let x = math::cos(from.lat_rad()) * math::sin(to.lat_rad())
        - math::sin(from.lat_rad()) * math::cos(to.lat_rad()) * math::cos(dlon);
    math::atan2(y, x)
}

/// Absolute spherical angle, in [0, 180] degrees, between the great circles
/// running from `true_loc` to `intended` and from `true_loc` to `calculated`.
pub fn direction_error_deg(
    true_loc: GeoPoint,
    intended: GeoPoint,
    calculated: GeoPoint,
) -> Result<f64, GeoError> {
    if great_circle_km(true_loc, intended) < 1e-9 || great_circle_km(true_loc, calculated) < 1e-9 {
        return Err(GeoError::DegenerateInput);
    }
    let b1 = initial_bearing(true_loc, intended);
    let b2 = initial_bearing(true_loc, calculated);
    let mut diff = math::fabs(b1 - b2).to_degrees();
    if diff > 180.0 {
        diff = 360.0 - diff;
    }
    Ok(diff)
}

/// Heron's formula. Errors on a triangle-inequality violation; CPV counts
/// those against the client, so the error is part of the contract.
pub fn heron_area(a: f64, b: f64, c: f64) -> Result<f64, GeoError> {
    if !(a >= 0.0 && b >= 0.0 && c >= 0.0) {
        return Err(GeoError::TriangleInequalityViolation);
    }
    if a >= b + c || b >= a + c || c >= a + b {
        return Err(GeoError::TriangleInequalityViolation);
    }
    let s = 0.5 * (a + b + c);
    let under = s * (s - a) * (s - b) * (s - c);
    Ok(math::sqrt(under.max(0.0)))
}

/// Whether `p` lies inside `t`, boundary included, decided by the signs of
/// the barycentric coordinates.
pub fn point_in_triangle(p: PlanarPoint, t: &Triangle) -> bool {
    let [a, b, c] = t.vertices();
    let s1 = cross(a, b, p);
    let s2 = cross(b, c, p);
    let s3 = cross(c, a, p);
    (s1 >= 0.0 && s2 >= 0.0 && s3 >= 0.0) || (s1 <= 0.0 && s2 <= 0.0 && s3 <= 0.0)
}

/// Ratio of the distance between interior point `g` and the triangle's
/// closest side to that side's length. Zero exactly when `g` lies on a side.
pub fn away_ratio(t: &Triangle, g: PlanarPoint) -> Result<f64, GeoError> {
    if !point_in_triangle(g, t) {
        return Err(GeoError::WrongRegion);
    }
    let i = t.closest_side(g);
    let (s, e) = t.side(i);
    let side_len = s.distance(&e);
    Ok(point_segment_distance(g, s, e) / side_len)
}

/// Distance from a strictly-outside point to the intersection of the line
/// through it and the centroid with the triangle's closest side.
pub fn outside_distance(t: &Triangle, adv: PlanarPoint) -> Result<f64, GeoError> {
    if point_in_triangle(adv, t) {
        return Err(GeoError::WrongRegion);
    }
    let g = t.centroid();
    let i = t.closest_side(adv);
    let (s, e) = t.side(i);
    // Intersect line(adv, g) with line(s, e).
    let rx = g.x_km - adv.x_km;
    let ry = g.y_km - adv.y_km;
    let sx = e.x_km - s.x_km;
    let sy = e.y_km - s.y_km;
    let denom = rx * sy - ry * sx;
    if math::fabs(denom) < 1e-12 {
        // Ray toward the centroid runs parallel to the closest side; report
        // the plain distance to that side.
        return Ok(point_segment_distance(adv, s, e));
    }
    let tpar = ((s.x_km - adv.x_km) * sy - (s.y_km - adv.y_km) * sx) / denom;
    let ix = adv.x_km + tpar * rx;
    let iy = adv.y_km + tpar * ry;
    Ok(adv.distance(&PlanarPoint { x_km: ix, y_km: iy }))
}
