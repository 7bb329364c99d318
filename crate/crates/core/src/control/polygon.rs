use nalgebra::{Matrix2, Vector2};

use crate::planner::{ContactPhase, Pose2};

/// Convex polygon stored both as counter-clockwise vertices and as the
/// half-planes `normal' r <= offset` of its edges.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<Vector2<f64>>,
    normals: Vec<Vector2<f64>>,
    offsets: Vec<f64>,
}

impl ConvexPolygon {
    /// Convex hull of `points` (monotone chain). Returns `None` when the hull
    /// has no interior.
    pub fn hull(points: &[Vector2<f64>]) -> Option<Self> {
        let mut pts: Vec<Vector2<f64>> = points.to_vec();
        pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
        pts.dedup_by(|a, b| (*a - *b).norm() < 1e-12);
        if pts.len() < 3 {
            return None;
        }
        let cross = |o: &Vector2<f64>, a: &Vector2<f64>, b: &Vector2<f64>| (a - o).perp(&(b - o));
        let mut hull: Vec<Vector2<f64>> = Vec::with_capacity(2 * pts.len());
        for pass in 0..2 {
            let start = hull.len();
            let iter: Box<dyn Iterator<Item = &Vector2<f64>>> = if pass == 0 {
                Box::new(pts.iter())
            } else {
                Box::new(pts.iter().rev())
            };
            for p in iter {
                while hull.len() >= start + 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 1e-14 {
                    hull.pop();
                }
                hull.push(*p);
            }
            hull.pop();
        }
        Self::from_ccw(hull)
    }

    /// Polygon from counter-clockwise vertices.
    pub fn from_ccw(vertices: Vec<Vector2<f64>>) -> Option<Self> {
        let n = vertices.len();
        if n < 3 {
            return None;
        }
        let mut normals = Vec::with_capacity(n);
        let mut offsets = Vec::with_capacity(n);
        for i in 0..n {
            let e = vertices[(i + 1) % n] - vertices[i];
            let len = e.norm();
            if len < 1e-12 {
                return None;
            }
            let nrm = Vector2::new(e.y, -e.x) / len;
            normals.push(nrm);
            offsets.push(nrm.dot(&vertices[i]));
        }
        let poly = Self { vertices, normals, offsets };
        (poly.signed_distance(&poly.centroid()) < -1e-9).then_some(poly)
    }

    /// Rectangle of `length` x `width` centred on `pose`, shrunk by `margin`.
    pub fn rectangle(pose: &Pose2, length: f64, width: f64, margin: f64) -> Option<Self> {
        let (hl, hw) = (length / 2.0 - margin, width / 2.0 - margin);
        if hl <= 0.0 || hw <= 0.0 {
            return None;
        }
        let (s, c) = pose.yaw.sin_cos();
        let rot = Matrix2::new(c, -s, s, c);
        let corners = [(-hl, -hw), (hl, -hw), (hl, hw), (-hl, hw)];
        Self::from_ccw(corners.iter().map(|&(x, y)| pose.position + rot * Vector2::new(x, y)).collect())
    }

    pub fn vertices(&self) -> &[Vector2<f64>] {
        &self.vertices
    }

    /// Half-planes `(normal, offset)` with `normal' r <= offset`.
    pub fn half_planes(&self) -> impl Iterator<Item = (Vector2<f64>, f64)> + '_ {
        self.normals.iter().copied().zip(self.offsets.iter().copied())
    }

    pub fn centroid(&self) -> Vector2<f64> {
        self.vertices.iter().sum::<Vector2<f64>>() / self.vertices.len() as f64
    }

    /// Largest half-plane violation; negative inside.
    pub fn signed_distance(&self, r: &Vector2<f64>) -> f64 {
        self.half_planes().map(|(n, b)| n.dot(r) - b).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, r: &Vector2<f64>, tol: f64) -> bool {
        self.signed_distance(r) <= tol
    }

    /// Closest point of the polygon to `r`.
    pub fn project(&self, r: &Vector2<f64>) -> Vector2<f64> {
        if self.contains(r, 0.0) {
            return *r;
        }
        let n = self.vertices.len();
        (0..n)
            .map(|i| {
                let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
                let e = b - a;
                let s = ((r - a).dot(&e) / e.norm_squared()).clamp(0.0, 1.0);
                a + e * s
            })
            .min_by(|p, q| (p - r).norm_squared().total_cmp(&(q - r).norm_squared()))
            .expect("polygon has vertices")
    }
}

/// Feasible ZMP region for a contact phase: the stance foot rectangle, or the
/// convex hull of both rectangles in double support.
pub fn support_polygon(
    phase: ContactPhase,
    left: &Pose2,
    right: &Pose2,
    length: f64,
    width: f64,
    margin: f64,
) -> Option<ConvexPolygon> {
    match phase {
        ContactPhase::LeftSS => ConvexPolygon::rectangle(left, length, width, margin),
        ContactPhase::RightSS => ConvexPolygon::rectangle(right, length, width, margin),
        ContactPhase::DS => {
            let l = ConvexPolygon::rectangle(left, length, width, margin)?;
            let r = ConvexPolygon::rectangle(right, length, width, margin)?;
            let pts: Vec<_> = l.vertices.iter().chain(&r.vertices).copied().collect();
            ConvexPolygon::hull(&pts)
        }
    }
}
