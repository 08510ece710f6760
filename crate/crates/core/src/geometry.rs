//! Planar geometry primitives shared by the world model, the grid planner and
//! the simulator.

use nalgebra::Vector2;

pub type Vec2 = Vector2<f64>;
pub type Vec3 = nalgebra::Vector3<f64>;

/// Minimum enclosed area for a polygon to count as non-degenerate (m²).
pub const MIN_POLYGON_AREA: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolygonError {
    TooFewVertices,
    Degenerate,
    NotConvex,
}

impl std::fmt::Display for PolygonError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PolygonError::TooFewVertices => write!(f, "footprint needs at least 3 vertices"),
            PolygonError::Degenerate => write!(f, "footprint is degenerate (area <= 1e-9 m^2)"),
            PolygonError::NotConvex => write!(f, "footprint not convex"),
        }
    }
}

/// Convex polygon stored counter-clockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<Vec2>,
}

impl ConvexPolygon {
    /// Builds a polygon from vertices in either winding. Clockwise input is
    /// reversed so that edge normals always point outward.
    pub fn new(vertices: Vec<Vec2>) -> Result<Self, PolygonError> {
        if vertices.len() < 3 {
            return Err(PolygonError::TooFewVertices);
        }
        let area = signed_area(&vertices);
        if area.abs() <= MIN_POLYGON_AREA {
            return Err(PolygonError::Degenerate);
        }
        let mut vertices = vertices;
        if area < 0.0 {
            vertices.reverse();
        }
        let n = vertices.len();
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            if cross(b - a, c - b) < -1e-12 {
                return Err(PolygonError::NotConvex);
            }
        }
        Ok(Self { vertices })
    }

    /// Axis-aligned rectangle from its center and full size.
    pub fn rectangle(center: Vec2, size: Vec2) -> Self {
        let h = size * 0.5;
        Self {
            vertices: vec![
                Vec2::new(center.x - h.x, center.y - h.y),
                Vec2::new(center.x + h.x, center.y - h.y),
                Vec2::new(center.x + h.x, center.y + h.y),
                Vec2::new(center.x - h.x, center.y + h.y),
            ],
        }
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn centroid(&self) -> Vec2 {
        let n = self.vertices.len();
        let mut c = Vec2::zeros();
        let mut a2 = 0.0;
        for i in 0..n {
            let p = self.vertices[i];
            let q = self.vertices[(i + 1) % n];
            let w = cross(p, q);
            a2 += w;
            c += (p + q) * w;
        }
        c / (3.0 * a2)
    }

    fn edges(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Exact signed distance: positive outside, negative inside.
    pub fn signed_distance(&self, p: Vec2) -> f64 {
        self.signed_distance_and_gradient(p).0
    }

    /// Signed distance and its gradient (unit vector pointing away from the
    /// polygon). On the medial axis the gradient of the first nearest edge is
    /// returned.
    pub fn signed_distance_and_gradient(&self, p: Vec2) -> (f64, Vec2) {
        let mut inside = true;
        let mut best_d = f64::INFINITY;
        let mut best_closest = p;
        let mut best_normal = Vec2::x();
        let mut max_edge_dist = f64::NEG_INFINITY;
        let mut max_edge_normal = Vec2::x();
        for (a, b) in self.edges() {
            let e = b - a;
            let len = e.norm();
            let normal = Vec2::new(e.y, -e.x) / len;
            let side = (p - a).dot(&normal);
            if side > 0.0 {
                inside = false;
            }
            if side > max_edge_dist {
                max_edge_dist = side;
                max_edge_normal = normal;
            }
            let t = ((p - a).dot(&e) / (len * len)).clamp(0.0, 1.0);
            let closest = a + e * t;
            let d = (p - closest).norm();
            if d < best_d {
                best_d = d;
                best_closest = closest;
                best_normal = normal;
            }
        }
        if inside {
            // for convex polygons the interior distance is the nearest
            // supporting line
            (max_edge_dist, max_edge_normal)
        } else if best_d > 0.0 {
            (best_d, (p - best_closest) / best_d)
        } else {
            (0.0, best_normal)
        }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        self.edges().all(|(a, b)| cross(b - a, p - a) >= -1e-12)
    }

    /// Range of `dir · v` over the vertices.
    pub fn projection_range(&self, dir: Vec2) -> (f64, f64) {
        self.vertices.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            let s = v.dot(&dir);
            (lo.min(s), hi.max(s))
        })
    }

    /// True if the segment `p -> q` intersects the polygon grown by `padding`.
    pub fn segment_hits(&self, p: Vec2, q: Vec2, padding: f64) -> bool {
        if self.signed_distance(p) <= padding || self.signed_distance(q) <= padding {
            return true;
        }
        // segment-vs-polygon: crossing any edge or passing within padding of
        // a vertex or edge
        for (a, b) in self.edges() {
            if segment_segment_distance(p, q, a, b) <= padding {
                return true;
            }
        }
        false
    }

    pub fn bounds(&self) -> (Vec2, Vec2) {
        let mut lo = Vec2::repeat(f64::INFINITY);
        let mut hi = Vec2::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }
}

pub fn cross(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

fn signed_area(v: &[Vec2]) -> f64 {
    let n = v.len();
    (0..n).map(|i| cross(v[i], v[(i + 1) % n])).sum::<f64>() * 0.5
}

pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let e = b - a;
    let l2 = e.norm_squared();
    if l2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&e) / l2).clamp(0.0, 1.0);
    (p - (a + e * t)).norm()
}

pub fn segment_segment_distance(p: Vec2, q: Vec2, a: Vec2, b: Vec2) -> f64 {
    let d1 = q - p;
    let d2 = b - a;
    let denom = cross(d1, d2);
    if denom.abs() > 1e-15 {
        let t = cross(a - p, d2) / denom;
        let u = cross(a - p, d1) / denom;
        if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u) {
            return 0.0;
        }
    }
    point_segment_distance(p, a, b)
        .min(point_segment_distance(q, a, b))
        .min(point_segment_distance(a, p, q))
        .min(point_segment_distance(b, p, q))
}

/// Axis-aligned rectangle in the ground plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min: Vec2,
    pub max: Vec2,
}

impl Rect {
    pub fn from_center_size(center: Vec2, size: Vec2) -> Self {
        Self { min: center - size * 0.5, max: center + size * 0.5 }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn area(&self) -> f64 {
        (self.max.x - self.min.x) * (self.max.y - self.min.y)
    }

    pub fn size(&self) -> Vec2 {
        self.max - self.min
    }
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::PI;
    let mut r = (a + PI).rem_euclid(2.0 * PI) - PI;
    if r <= -PI {
        r += 2.0 * PI;
    }
    r
}
