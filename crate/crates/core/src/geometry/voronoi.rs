use serde::{Deserialize, Serialize};

use super::{GeometryError, Point2, Triangulation, VertexId};

/// A generator's region, clipped to the universe box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoronoiCell {
    pub generator: VertexId,
    /// Counter-clockwise ring without a repeated closing vertex.
    pub boundary: Vec<Point2>,
}

impl VoronoiCell {
    pub fn area(&self) -> f64 {
        let n = self.boundary.len();
        let mut twice = 0.0;
        for i in 0..n {
            let a = self.boundary[i];
            let b = self.boundary[(i + 1) % n];
            twice += a.x * b.y - a.y * b.x;
        }
        0.5 * twice
    }

    pub fn centroid(&self) -> Point2 {
        let n = self.boundary.len().max(1) as f64;
        let (sx, sy) = self
            .boundary
            .iter()
            .fold((0.0, 0.0), |(x, y), p| (x + p.x, y + p.y));
        Point2::new(sx / n, sy / n)
    }
}

/// Sutherland–Hodgman step: keeps the part of `polygon` where
/// `(x - origin) · normal <= 0`.
pub fn clip_to_halfplane(polygon: &[Point2], origin: Point2, normal: Point2) -> Vec<Point2> {
    let side = |p: &Point2| (p.x - origin.x) * normal.x + (p.y - origin.y) * normal.y;
    let n = polygon.len();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let cur = polygon[i];
        let next = polygon[(i + 1) % n];
        let (sc, sn) = (side(&cur), side(&next));
        if sc <= 0.0 {
            out.push(cur);
        }
        if (sc < 0.0 && sn > 0.0) || (sc > 0.0 && sn < 0.0) {
            let t = sc / (sc - sn);
            out.push(cur.lerp(next, t));
        }
    }
    out
}

fn dedup_ring(ring: Vec<Point2>, scale: f64) -> Vec<Point2> {
    let eps = scale * 1e-12;
    let mut out: Vec<Point2> = Vec::with_capacity(ring.len());
    for p in ring {
        if out.last().is_none_or(|q: &Point2| q.distance(p) > eps) {
            out.push(p);
        }
    }
    while out.len() > 1 && out[0].distance(*out.last().unwrap()) <= eps {
        out.pop();
    }
    out
}

impl Triangulation {
    /// The universe box cut by the perpendicular bisector with every Delaunay
    /// neighbor. Each unclipped corner is the circumcenter of an incident
    /// triangle.
    pub fn voronoi_cell(&self, v: VertexId) -> Result<VoronoiCell, GeometryError> {
        if self.vertex(v).is_none() {
            return Err(GeometryError::UnknownVertex(v));
        }
        if self.is_super(v) {
            return Err(GeometryError::SuperVertex(v));
        }
        let universe = self.universe();
        let p = self.position(v);
        let mut ring = universe.corners().to_vec();
        for n in self.neighbors(v) {
            let q = self.position(n);
            let mid = p.lerp(q, 0.5);
            let normal = Point2::new(q.x - p.x, q.y - p.y);
            ring = clip_to_halfplane(&ring, mid, normal);
            if ring.is_empty() {
                break;
            }
        }
        let scale = universe.width().max(universe.height());
        Ok(VoronoiCell {
            generator: v,
            boundary: dedup_ring(ring, scale),
        })
    }
}
