use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::predicates::{compare_distance, in_circumcircle_sos, incircle_unchecked, orient_unchecked};
use super::{GeometryError, InCircleResult, Orientation, Point2};

pub type VertexId = usize;
pub type TriangleId = usize;
pub type SegmentId = usize;

/// Sentinel for a missing neighbor or triangle reference.
pub const NONE: usize = usize::MAX;
/// Ids `0..SUPER_VERTEX_COUNT` are the synthetic enclosing vertices.
pub const SUPER_VERTEX_COUNT: usize = 3;
/// Two generators closer than this are considered the same location.
pub const COINCIDENCE_TOLERANCE: f64 = 1e-9;

/// Distance of the super vertices, in multiples of the universe span.
const SUPER_SCALE: f64 = 1e3;

/// Axis-aligned box holding every generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min: Point2,
    pub max: Point2,
}

impl BoundingBox {
    pub fn new(min: Point2, max: Point2) -> Result<Self, GeometryError> {
        min.check()?;
        max.check()?;
        if !(min.x < max.x && min.y < max.y) {
            return Err(GeometryError::InvalidUniverse(format!(
                "min ({}, {}) must be below max ({}, {})",
                min.x, min.y, max.x, max.y
            )));
        }
        Ok(BoundingBox { min, max })
    }

    /// Square box `[-half, half]²`.
    pub fn centered(half: f64) -> Self {
        BoundingBox {
            min: Point2::new(-half, -half),
            max: Point2::new(half, half),
        }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn center(&self) -> Point2 {
        Point2::new(
            0.5 * (self.min.x + self.max.x),
            0.5 * (self.min.y + self.max.y),
        )
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn contains_strictly(&self, p: Point2) -> bool {
        p.x > self.min.x && p.x < self.max.x && p.y > self.min.y && p.y < self.max.y
    }

    /// Corners in counter-clockwise order starting at `min`.
    pub fn corners(&self) -> [Point2; 4] {
        [
            self.min,
            Point2::new(self.max.x, self.min.y),
            self.max,
            Point2::new(self.min.x, self.max.y),
        ]
    }

    /// Nearest point at least `margin` inside the box.
    pub fn clamp_inside(&self, p: Point2, margin: f64) -> Point2 {
        let mx = margin.min(0.25 * self.width());
        let my = margin.min(0.25 * self.height());
        Point2::new(
            p.x.clamp(self.min.x + mx, self.max.x - mx),
            p.y.clamp(self.min.y + my, self.max.y - my),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub position: Point2,
    pub payload: Option<u64>,
    pub alive: bool,
    pub(crate) triangle: TriangleId,
}

/// Fixed-arity triangle record. `neighbors[i]` lies across the edge opposite
/// `vertices[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triangle {
    pub vertices: [VertexId; 3],
    pub neighbors: [TriangleId; 3],
    pub alive: bool,
}

/// A line-segment object: two point objects joined by a constrained body.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub tail: VertexId,
    pub head: VertexId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Inside(TriangleId),
    OnEdge(TriangleId, usize),
    OnVertex(VertexId),
}

/// Record of a removed generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeleteEvent {
    pub vertex: VertexId,
    pub position: Point2,
    pub payload: Option<u64>,
    /// Generators whose cells absorbed the removed cell.
    pub former_neighbors: Vec<VertexId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Triangulation {
    universe: BoundingBox,
    vertices: Vec<Vertex>,
    triangles: Vec<Triangle>,
    free_vertices: Vec<VertexId>,
    free_triangles: Vec<TriangleId>,
    constraints: BTreeSet<(VertexId, VertexId)>,
    segments: Vec<Option<Segment>>,
    hint: TriangleId,
}

fn edge_key(a: VertexId, b: VertexId) -> (VertexId, VertexId) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Triangulation {
    pub fn new(universe: BoundingBox) -> Self {
        let c = universe.center();
        let s = universe.width().max(universe.height()) * SUPER_SCALE;
        let supers = [
            Point2::new(c.x - 1.8 * s, c.y - s),
            Point2::new(c.x + 1.8 * s, c.y - s),
            Point2::new(c.x, c.y + 2.0 * s),
        ];
        let vertices = supers
            .iter()
            .map(|&position| Vertex {
                position,
                payload: None,
                alive: true,
                triangle: 0,
            })
            .collect();
        Triangulation {
            universe,
            vertices,
            triangles: vec![Triangle {
                vertices: [0, 1, 2],
                neighbors: [NONE; 3],
                alive: true,
            }],
            free_vertices: Vec::new(),
            free_triangles: Vec::new(),
            constraints: BTreeSet::new(),
            segments: Vec::new(),
            hint: 0,
        }
    }

    pub fn universe(&self) -> BoundingBox {
        self.universe
    }

    pub fn is_super(&self, v: VertexId) -> bool {
        v < SUPER_VERTEX_COUNT
    }

    pub fn vertex(&self, v: VertexId) -> Option<&Vertex> {
        self.vertices.get(v).filter(|x| x.alive)
    }

    pub fn position(&self, v: VertexId) -> Point2 {
        self.vertices[v].position
    }

    /// Live, non-super vertex ids in ascending order.
    pub fn generators(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices
            .iter()
            .enumerate()
            .skip(SUPER_VERTEX_COUNT)
            .filter(|(_, v)| v.alive)
            .map(|(i, _)| i)
    }

    pub fn generator_count(&self) -> usize {
        self.generators().count()
    }

    pub fn triangle(&self, t: TriangleId) -> Option<&Triangle> {
        self.triangles.get(t).filter(|x| x.alive)
    }

    pub fn live_triangles(&self) -> impl Iterator<Item = TriangleId> + '_ {
        self.triangles
            .iter()
            .enumerate()
            .filter(|(_, t)| t.alive)
            .map(|(i, _)| i)
    }

    pub fn live_triangle_count(&self) -> usize {
        self.live_triangles().count()
    }

    pub fn segment(&self, s: SegmentId) -> Option<Segment> {
        self.segments.get(s).copied().flatten()
    }

    pub fn segments(&self) -> impl Iterator<Item = (SegmentId, Segment)> + '_ {
        self.segments
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.map(|s| (i, s)))
    }

    pub fn segment_of_endpoint(&self, v: VertexId) -> Option<SegmentId> {
        self.segments()
            .find(|(_, s)| s.tail == v || s.head == v)
            .map(|(i, _)| i)
    }

    pub fn is_constrained(&self, a: VertexId, b: VertexId) -> bool {
        self.constraints.contains(&edge_key(a, b))
    }

    fn segment_on_edge(&self, a: VertexId, b: VertexId) -> Option<SegmentId> {
        let key = edge_key(a, b);
        self.segments()
            .find(|(_, s)| edge_key(s.tail, s.head) == key)
            .map(|(i, _)| i)
    }

    /// Point objects plus segment bodies.
    pub fn object_count(&self) -> usize {
        self.generator_count() + self.segments().count()
    }

    /// Triangle count of the object triangulation, in which every segment
    /// body is a node splitting its constrained edge (and both triangles
    /// beside it) in two.
    pub fn object_triangle_count(&self) -> usize {
        self.live_triangle_count() + 2 * self.segments().count()
    }

    // ---------------------------------------------------------------- queries

    /// Walks from the last touched triangle towards `p`.
    pub fn locate(&self, p: Point2) -> Location {
        let mut t = if self.triangles.get(self.hint).is_some_and(|x| x.alive) {
            self.hint
        } else {
            self.live_triangles().next().expect("triangulation always has a triangle")
        };
        let limit = 4 * self.triangles.len() + 16;
        let mut steps = 0usize;
        'walk: while steps < limit {
            steps += 1;
            let tri = &self.triangles[t];
            for k in 0..3 {
                let i = (k + steps) % 3;
                let a = self.vertices[tri.vertices[(i + 1) % 3]].position;
                let b = self.vertices[tri.vertices[(i + 2) % 3]].position;
                if orient_unchecked(a, b, p) == Orientation::Clockwise && tri.neighbors[i] != NONE {
                    t = tri.neighbors[i];
                    continue 'walk;
                }
            }
            return self.classify(t, p);
        }
        // Walks cannot cycle in a Delaunay triangulation; constrained edges can
        // in principle defeat that, so fall back to a scan.
        for t in self.live_triangles() {
            let tri = &self.triangles[t];
            let inside = (0..3).all(|i| {
                let a = self.vertices[tri.vertices[(i + 1) % 3]].position;
                let b = self.vertices[tri.vertices[(i + 2) % 3]].position;
                orient_unchecked(a, b, p) != Orientation::Clockwise
            });
            if inside {
                return self.classify(t, p);
            }
        }
        unreachable!("point outside the super triangle")
    }

    fn classify(&self, t: TriangleId, p: Point2) -> Location {
        let tri = &self.triangles[t];
        let mut zeros = Vec::new();
        for i in 0..3 {
            let a = self.vertices[tri.vertices[(i + 1) % 3]].position;
            let b = self.vertices[tri.vertices[(i + 2) % 3]].position;
            if orient_unchecked(a, b, p) == Orientation::Collinear {
                zeros.push(i);
            }
        }
        match zeros.as_slice() {
            [] => Location::Inside(t),
            [i] => Location::OnEdge(t, *i),
            _ => {
                // On two edges: the shared corner.
                let corner = (0..3).find(|i| !zeros.contains(i)).unwrap_or(0);
                Location::OnVertex(tri.vertices[corner])
            }
        }
    }

    /// Triangles around `v` in counter-clockwise order, each paired with the
    /// index of `v` inside it.
    pub(crate) fn star(&self, v: VertexId) -> Vec<(TriangleId, usize)> {
        let start = self.vertices[v].triangle;
        let index_of = |t: TriangleId| {
            self.triangles[t]
                .vertices
                .iter()
                .position(|&x| x == v)
                .expect("vertex triangle reference is stale")
        };
        // Rewind clockwise to an open boundary, if any.
        let mut first = start;
        loop {
            let k = index_of(first);
            let prev = self.triangles[first].neighbors[(k + 2) % 3];
            if prev == NONE || prev == start {
                break;
            }
            first = prev;
        }
        let mut out = Vec::new();
        let mut t = first;
        loop {
            let k = index_of(t);
            out.push((t, k));
            let next = self.triangles[t].neighbors[(k + 1) % 3];
            if next == NONE || next == first {
                break;
            }
            t = next;
        }
        out
    }

    /// Delaunay neighbors of `v` in counter-clockwise order, including super
    /// vertices.
    pub fn neighbors(&self, v: VertexId) -> Vec<VertexId> {
        let star = self.star(v);
        let mut out: Vec<VertexId> = star
            .iter()
            .map(|&(t, k)| self.triangles[t].vertices[(k + 1) % 3])
            .collect();
        if let Some(&(t, k)) = star.last() {
            let tri = &self.triangles[t];
            if tri.neighbors[(k + 1) % 3] == NONE {
                out.push(tri.vertices[(k + 2) % 3]);
            }
        }
        out
    }

    /// Delaunay neighbors that are generators, ascending.
    pub fn generator_neighbors(&self, v: VertexId) -> Vec<VertexId> {
        let mut out: Vec<VertexId> = self
            .neighbors(v)
            .into_iter()
            .filter(|&n| !self.is_super(n))
            .collect();
        out.sort_unstable();
        out
    }

    /// Every edge between two generators as a sorted `(low, high)` list.
    pub fn generator_edges(&self) -> Vec<(VertexId, VertexId)> {
        let mut edges = BTreeSet::new();
        for t in self.live_triangles() {
            let v = self.triangles[t].vertices;
            for i in 0..3 {
                let (a, b) = (v[i], v[(i + 1) % 3]);
                if !self.is_super(a) && !self.is_super(b) {
                    edges.insert(edge_key(a, b));
                }
            }
        }
        edges.into_iter().collect()
    }

    /// Digest of the sorted generator edge list.
    pub fn edge_hash(&self) -> String {
        let mut hasher = Sha256::new();
        for (a, b) in self.generator_edges() {
            hasher.update((a as u64).to_le_bytes());
            hasher.update((b as u64).to_le_bytes());
        }
        hex::encode(hasher.finalize())
    }

    /// `V - E + F`, counting the outer face.
    pub fn euler_characteristic(&self) -> i64 {
        let v = self.vertices.iter().filter(|x| x.alive).count() as i64;
        let mut edges = BTreeSet::new();
        let mut f = 1i64;
        for t in self.live_triangles() {
            f += 1;
            let tv = self.triangles[t].vertices;
            for i in 0..3 {
                edges.insert(edge_key(tv[i], tv[(i + 1) % 3]));
            }
        }
        v - edges.len() as i64 + f
    }

    /// Generator whose cell contains `q`; equidistant ties go to the smallest id.
    pub fn nearest_generator(&self, q: Point2) -> Result<VertexId, GeometryError> {
        q.check()?;
        if !self.universe.contains(q) {
            return Err(GeometryError::OutsideUniverse(q.x, q.y));
        }
        let start = self.nearest_start(q).ok_or(GeometryError::Empty)?;
        Ok(self.nearest_from(start, q))
    }

    fn nearest_start(&self, q: Point2) -> Option<VertexId> {
        let candidates = match self.locate(q) {
            Location::OnVertex(v) => vec![v],
            Location::Inside(t) | Location::OnEdge(t, _) => self.triangles[t].vertices.to_vec(),
        };
        candidates
            .into_iter()
            .find(|&v| !self.is_super(v))
            .or_else(|| self.generators().next())
    }

    fn nearest_from(&self, start: VertexId, q: Point2) -> VertexId {
        let mut current = start;
        loop {
            let mut best = current;
            for n in self.neighbors(current) {
                if self.is_super(n) {
                    continue;
                }
                let ord = compare_distance(q, self.vertices[n].position, self.vertices[best].position);
                if ord.is_lt() {
                    best = n;
                }
            }
            if best == current {
                break;
            }
            current = best;
        }
        // Equidistant generators lie on a common empty circle, so they are
        // connected through Delaunay edges.
        let reference = self.vertices[current].position;
        let mut seen = BTreeSet::from([current]);
        let mut queue = VecDeque::from([current]);
        while let Some(x) = queue.pop_front() {
            for n in self.neighbors(x) {
                if self.is_super(n) || seen.contains(&n) {
                    continue;
                }
                if compare_distance(q, self.vertices[n].position, reference).is_eq() {
                    seen.insert(n);
                    queue.push_back(n);
                }
            }
        }
        *seen.iter().next().expect("non-empty")
    }

    // -------------------------------------------------------------- mutation

    fn alloc_vertex(&mut self, position: Point2, payload: Option<u64>) -> VertexId {
        let record = Vertex {
            position,
            payload,
            alive: true,
            triangle: NONE,
        };
        match self.free_vertices.pop() {
            Some(v) => {
                self.vertices[v] = record;
                v
            }
            None => {
                self.vertices.push(record);
                self.vertices.len() - 1
            }
        }
    }

    fn alloc_triangle(&mut self, vertices: [VertexId; 3], neighbors: [TriangleId; 3]) -> TriangleId {
        let record = Triangle {
            vertices,
            neighbors,
            alive: true,
        };
        match self.free_triangles.pop() {
            Some(t) => {
                self.triangles[t] = record;
                t
            }
            None => {
                self.triangles.push(record);
                self.triangles.len() - 1
            }
        }
    }

    fn free_triangle(&mut self, t: TriangleId) {
        self.triangles[t].alive = false;
        self.triangles[t].neighbors = [NONE; 3];
        self.free_triangles.push(t);
    }

    fn replace_neighbor(&mut self, t: TriangleId, old: TriangleId, new: TriangleId) {
        if t == NONE {
            return;
        }
        for n in self.triangles[t].neighbors.iter_mut() {
            if *n == old {
                *n = new;
                return;
            }
        }
        debug_assert!(false, "triangle {t} does not border {old}");
    }

    /// Inserts a generator, restoring the empty-circumcircle property by
    /// local diagonal flips.
    pub fn insert_point(&mut self, p: Point2, payload: Option<u64>) -> Result<VertexId, GeometryError> {
        p.check()?;
        if !self.universe.contains_strictly(p) {
            return Err(GeometryError::OutsideUniverse(p.x, p.y));
        }
        let location = self.locate(p);
        if let Location::OnVertex(v) = location {
            return Err(GeometryError::Duplicate(v));
        }
        if let Some(start) = self.nearest_start(p) {
            let nearest = self.nearest_from(start, p);
            if self.vertices[nearest].position.distance(p) < COINCIDENCE_TOLERANCE {
                return Err(GeometryError::Duplicate(nearest));
            }
        }
        if let Location::OnEdge(t, i) = location {
            let tri = &self.triangles[t];
            let (a, b) = (tri.vertices[(i + 1) % 3], tri.vertices[(i + 2) % 3]);
            if let Some(s) = self.segment_on_edge(a, b) {
                return Err(GeometryError::OnSegment(s));
            }
        }
        let v = self.alloc_vertex(p, payload);
        let stack = match location {
            Location::Inside(t) => self.split_triangle(t, v),
            Location::OnEdge(t, i) => self.split_edge(t, i, v),
            Location::OnVertex(_) => unreachable!(),
        };
        self.legalize(stack);
        Ok(v)
    }

    fn split_triangle(&mut self, t: TriangleId, p: VertexId) -> Vec<(TriangleId, usize)> {
        let Triangle {
            vertices: [a, b, c],
            neighbors: [n_a, n_b, n_c],
            ..
        } = self.triangles[t].clone();
        let t0 = t;
        let t1 = self.alloc_triangle([p, b, c], [n_a, NONE, NONE]);
        let t2 = self.alloc_triangle([p, c, a], [n_b, NONE, NONE]);
        self.triangles[t0] = Triangle {
            vertices: [p, a, b],
            neighbors: [n_c, t1, t2],
            alive: true,
        };
        self.triangles[t1].neighbors = [n_a, t2, t0];
        self.triangles[t2].neighbors = [n_b, t0, t1];
        self.replace_neighbor(n_a, t, t1);
        self.replace_neighbor(n_b, t, t2);
        self.vertices[p].triangle = t0;
        self.vertices[a].triangle = t0;
        self.vertices[b].triangle = t1;
        self.vertices[c].triangle = t2;
        self.hint = t0;
        vec![(t0, 0), (t1, 0), (t2, 0)]
    }

    fn split_edge(&mut self, t: TriangleId, i: usize, p: VertexId) -> Vec<(TriangleId, usize)> {
        let tri = self.triangles[t].clone();
        let c = tri.vertices[i];
        let a = tri.vertices[(i + 1) % 3];
        let b = tri.vertices[(i + 2) % 3];
        let tn_bc = tri.neighbors[(i + 1) % 3];
        let tn_ca = tri.neighbors[(i + 2) % 3];
        let u = tri.neighbors[i];
        let ut = self.triangles[u].clone();
        let j = ut.neighbors.iter().position(|&x| x == t).expect("mutual neighbors");
        let d = ut.vertices[j];
        let un_ad = ut.neighbors[(j + 1) % 3];
        let un_db = ut.neighbors[(j + 2) % 3];

        let t1 = t;
        let t3 = u;
        let t2 = self.alloc_triangle([p, b, c], [NONE; 3]);
        let t4 = self.alloc_triangle([p, a, d], [NONE; 3]);
        self.triangles[t1] = Triangle {
            vertices: [p, c, a],
            neighbors: [tn_ca, t4, t2],
            alive: true,
        };
        self.triangles[t2].neighbors = [tn_bc, t1, t3];
        self.triangles[t3] = Triangle {
            vertices: [p, d, b],
            neighbors: [un_db, t2, t4],
            alive: true,
        };
        self.triangles[t4].neighbors = [un_ad, t3, t1];
        self.replace_neighbor(tn_bc, t, t2);
        self.replace_neighbor(un_ad, u, t4);
        self.vertices[p].triangle = t1;
        self.vertices[c].triangle = t1;
        self.vertices[a].triangle = t1;
        self.vertices[b].triangle = t2;
        self.vertices[d].triangle = t3;
        self.hint = t1;
        vec![(t1, 0), (t2, 0), (t3, 0), (t4, 0)]
    }

    /// Switches the diagonal of the quadrilateral formed by `t` and the
    /// triangle across the edge opposite `t.vertices[i]`. Returns the two new
    /// triangles; the first is `(c, a, d)` and the second `(c, d, b)` where
    /// `c` is the old opposite corner and `d` the neighbor's.
    pub(crate) fn flip(&mut self, t: TriangleId, i: usize) -> (TriangleId, TriangleId) {
        let tri = self.triangles[t].clone();
        let c = tri.vertices[i];
        let a = tri.vertices[(i + 1) % 3];
        let b = tri.vertices[(i + 2) % 3];
        let u = tri.neighbors[i];
        let ut = self.triangles[u].clone();
        let j = ut.neighbors.iter().position(|&x| x == t).expect("mutual neighbors");
        let d = ut.vertices[j];
        debug_assert_eq!(ut.vertices[(j + 1) % 3], b);
        debug_assert_eq!(ut.vertices[(j + 2) % 3], a);
        let tn_bc = tri.neighbors[(i + 1) % 3];
        let tn_ca = tri.neighbors[(i + 2) % 3];
        let un_ad = ut.neighbors[(j + 1) % 3];
        let un_db = ut.neighbors[(j + 2) % 3];
        self.triangles[t] = Triangle {
            vertices: [c, a, d],
            neighbors: [un_ad, u, tn_ca],
            alive: true,
        };
        self.triangles[u] = Triangle {
            vertices: [c, d, b],
            neighbors: [un_db, tn_bc, t],
            alive: true,
        };
        self.replace_neighbor(un_ad, u, t);
        self.replace_neighbor(tn_bc, t, u);
        self.vertices[a].triangle = t;
        self.vertices[c].triangle = t;
        self.vertices[d].triangle = t;
        self.vertices[b].triangle = u;
        self.hint = t;
        (t, u)
    }

    /// Whether the quadrilateral across edge `i` of `t` is strictly convex, so
    /// that flipping its diagonal yields two valid triangles.
    pub(crate) fn flippable(&self, t: TriangleId, i: usize) -> bool {
        let tri = &self.triangles[t];
        let u = tri.neighbors[i];
        if u == NONE {
            return false;
        }
        let c = tri.vertices[i];
        let a = tri.vertices[(i + 1) % 3];
        let b = tri.vertices[(i + 2) % 3];
        if self.is_constrained(a, b) {
            return false;
        }
        let ut = &self.triangles[u];
        let j = match ut.neighbors.iter().position(|&x| x == t) {
            Some(j) => j,
            None => return false,
        };
        let d = ut.vertices[j];
        let (pc, pa, pb, pd) = (
            self.vertices[c].position,
            self.vertices[a].position,
            self.vertices[b].position,
            self.vertices[d].position,
        );
        orient_unchecked(pc, pa, pd) == Orientation::CounterClockwise
            && orient_unchecked(pc, pd, pb) == Orientation::CounterClockwise
    }

    /// Whether the edge opposite `t.vertices[i]` violates the (perturbed)
    /// empty-circumcircle criterion.
    pub(crate) fn edge_is_illegal(&self, t: TriangleId, i: usize) -> bool {
        let tri = &self.triangles[t];
        let u = tri.neighbors[i];
        if u == NONE {
            return false;
        }
        let c = tri.vertices[i];
        let a = tri.vertices[(i + 1) % 3];
        let b = tri.vertices[(i + 2) % 3];
        if self.is_constrained(a, b) {
            return false;
        }
        let ut = &self.triangles[u];
        let Some(j) = ut.neighbors.iter().position(|&x| x == t) else {
            return false;
        };
        let d = ut.vertices[j];
        let at = |v: VertexId| (self.vertices[v].position, v);
        in_circumcircle_sos(at(c), at(a), at(b), at(d))
    }

    /// Lawson flips until every queued edge, and every edge touched by a flip,
    /// is locally Delaunay. Stale queue entries are skipped.
    pub(crate) fn legalize(&mut self, mut stack: Vec<(TriangleId, usize)>) -> usize {
        let mut flips = 0usize;
        while let Some((t, i)) = stack.pop() {
            if !self.triangles[t].alive {
                continue;
            }
            if self.edge_is_illegal(t, i) && self.flippable(t, i) {
                let (t1, t2) = self.flip(t, i);
                flips += 1;
                stack.extend([(t1, 0), (t1, 2), (t2, 0), (t2, 1)]);
            }
        }
        flips
    }

    /// Edges of the triangles around `v` (spokes and link), for legalization.
    pub(crate) fn star_edges(&self, v: VertexId) -> Vec<(TriangleId, usize)> {
        self.star(v)
            .into_iter()
            .flat_map(|(t, _)| [(t, 0), (t, 1), (t, 2)])
            .collect()
    }

    /// Whether every triangle around `v` stays counter-clockwise with `v`
    /// relocated to `p`.
    pub(crate) fn star_valid_at(&self, v: VertexId, p: Point2) -> bool {
        self.star(v).into_iter().all(|(t, k)| {
            let tri = &self.triangles[t];
            let a = self.vertices[tri.vertices[(k + 1) % 3]].position;
            let b = self.vertices[tri.vertices[(k + 2) % 3]].position;
            orient_unchecked(p, a, b) == Orientation::CounterClockwise
        })
    }

    pub(crate) fn set_position(&mut self, v: VertexId, p: Point2) {
        self.vertices[v].position = p;
    }

    /// Removes a generator, merging its cell into its neighbors'. The hole is
    /// re-triangulated by clipping Delaunay ears off the link polygon.
    pub fn delete_point(&mut self, v: VertexId) -> Result<DeleteEvent, GeometryError> {
        if self.vertex(v).is_none() {
            return Err(GeometryError::UnknownVertex(v));
        }
        if self.is_super(v) {
            return Err(GeometryError::SuperVertex(v));
        }
        if let Some(s) = self.segment_of_endpoint(v) {
            return Err(GeometryError::SegmentEndpoint(v, s));
        }
        let position = self.vertices[v].position;
        let payload = self.vertices[v].payload;
        let former_neighbors = self.generator_neighbors(v);

        let star = self.star(v);
        let link: Vec<VertexId> = star
            .iter()
            .map(|&(t, k)| self.triangles[t].vertices[(k + 1) % 3])
            .collect();
        let outer: Vec<TriangleId> = star
            .iter()
            .map(|&(t, k)| self.triangles[t].neighbors[k])
            .collect();
        let faces = self.triangulate_hole(&link);

        for &(t, _) in &star {
            self.free_triangle(t);
        }
        let ids: Vec<TriangleId> = faces
            .iter()
            .map(|&f| self.alloc_triangle(f, [NONE; 3]))
            .collect();
        let mut open: BTreeMap<(VertexId, VertexId), (TriangleId, usize)> = BTreeMap::new();
        let n = link.len();
        for (&t, f) in ids.iter().zip(&faces) {
            for i in 0..3 {
                let (a, b) = (f[(i + 1) % 3], f[(i + 2) % 3]);
                if let Some((u, j)) = open.remove(&(b, a)) {
                    self.triangles[t].neighbors[i] = u;
                    self.triangles[u].neighbors[j] = t;
                } else if let Some(e) = (0..n).find(|&e| link[e] == a && link[(e + 1) % n] == b) {
                    let o = outer[e];
                    self.triangles[t].neighbors[i] = o;
                    if o != NONE {
                        self.set_neighbor_across(o, b, a, t);
                    }
                } else {
                    open.insert((a, b), (t, i));
                }
            }
            for &x in f {
                self.vertices[x].triangle = t;
            }
        }
        debug_assert!(open.is_empty());
        self.vertices[v].alive = false;
        self.vertices[v].triangle = NONE;
        self.free_vertices.push(v);
        self.hint = ids[0];
        let stack = ids.iter().flat_map(|&t| [(t, 0), (t, 1), (t, 2)]).collect();
        self.legalize(stack);
        Ok(DeleteEvent {
            vertex: v,
            position,
            payload,
            former_neighbors,
        })
    }

    /// Points triangle `o` at `f` across its directed edge `(a, b)`.
    fn set_neighbor_across(&mut self, o: TriangleId, a: VertexId, b: VertexId, f: TriangleId) {
        let tri = &mut self.triangles[o];
        for i in 0..3 {
            if tri.vertices[(i + 1) % 3] == a && tri.vertices[(i + 2) % 3] == b {
                tri.neighbors[i] = f;
                return;
            }
        }
        debug_assert!(false, "triangle {o} has no edge ({a}, {b})");
    }

    /// Counter-clockwise faces covering the star-shaped polygon `link`. Each
    /// clipped ear is convex, contains no other polygon vertex, and, when
    /// possible, has an empty (perturbed) circumcircle against the whole link.
    fn triangulate_hole(&self, link: &[VertexId]) -> Vec<[VertexId; 3]> {
        let pos = |v: VertexId| self.vertices[v].position;
        let mut poly = link.to_vec();
        let mut faces = Vec::with_capacity(link.len().saturating_sub(2));
        while poly.len() > 3 {
            let m = poly.len();
            let mut chosen = None;
            let mut fallback = None;
            for i in 0..m {
                let (prev, cur, next) = (poly[(i + m - 1) % m], poly[i], poly[(i + 1) % m]);
                let (pp, pc, pn) = (pos(prev), pos(cur), pos(next));
                if orient_unchecked(pp, pc, pn) != Orientation::CounterClockwise {
                    continue;
                }
                let blocked = poly.iter().any(|&w| {
                    w != prev
                        && w != cur
                        && w != next
                        && [(pp, pc), (pc, pn), (pn, pp)]
                            .iter()
                            .all(|&(a, b)| orient_unchecked(a, b, pos(w)) != Orientation::Clockwise)
                });
                if blocked {
                    continue;
                }
                fallback.get_or_insert(i);
                let empty = link.iter().all(|&w| {
                    w == prev
                        || w == cur
                        || w == next
                        || !in_circumcircle_sos((pp, prev), (pc, cur), (pn, next), (pos(w), w))
                });
                if empty {
                    chosen = Some(i);
                    break;
                }
            }
            let i = chosen
                .or(fallback)
                .expect("a simple polygon always has an ear");
            faces.push([poly[(i + m - 1) % m], poly[i], poly[(i + 1) % m]]);
            poly.remove(i);
        }
        faces.push([poly[0], poly[1], poly[2]]);
        faces
    }

    // -------------------------------------------------------------- segments

    pub(crate) fn add_segment(&mut self, tail: VertexId, head: VertexId) -> SegmentId {
        self.constraints.insert(edge_key(tail, head));
        self.segments.push(Some(Segment { tail, head }));
        self.segments.len() - 1
    }

    /// Drops a segment body and its head point; the tail remains a point
    /// object.
    pub fn remove_segment(&mut self, s: SegmentId) -> Result<DeleteEvent, GeometryError> {
        let seg = self.segment(s).ok_or(GeometryError::UnknownVertex(s))?;
        self.constraints.remove(&edge_key(seg.tail, seg.head));
        self.segments[s] = None;
        let stack = self.star_edges(seg.tail);
        self.legalize(stack);
        self.delete_point(seg.head)
    }

    // ------------------------------------------------------------ validation

    /// Structural consistency: mutual neighbor pointers, counter-clockwise
    /// orientation and vertex back-references.
    pub fn check_topology(&self) -> Result<(), String> {
        for t in self.live_triangles() {
            let tri = &self.triangles[t];
            let [a, b, c] = tri.vertices.map(|v| self.vertices[v].position);
            if orient_unchecked(a, b, c) != Orientation::CounterClockwise {
                return Err(format!("triangle {t} {:?} is not counter-clockwise", tri.vertices));
            }
            for i in 0..3 {
                let v = tri.vertices[i];
                if !self.vertices[v].alive {
                    return Err(format!("triangle {t} references dead vertex {v}"));
                }
                let u = tri.neighbors[i];
                if u == NONE {
                    continue;
                }
                let ut = &self.triangles[u];
                if !ut.alive {
                    return Err(format!("triangle {t} borders dead triangle {u}"));
                }
                let Some(j) = ut.neighbors.iter().position(|&x| x == t) else {
                    return Err(format!("triangle {u} does not point back to {t}"));
                };
                let (a, b) = (tri.vertices[(i + 1) % 3], tri.vertices[(i + 2) % 3]);
                if ut.vertices[(j + 1) % 3] != b || ut.vertices[(j + 2) % 3] != a {
                    return Err(format!("triangles {t} and {u} disagree on their shared edge"));
                }
            }
        }
        for (v, vx) in self.vertices.iter().enumerate() {
            if !vx.alive {
                continue;
            }
            let t = vx.triangle;
            if t == NONE || !self.triangles[t].alive || !self.triangles[t].vertices.contains(&v) {
                return Err(format!("vertex {v} has a stale triangle reference"));
            }
        }
        Ok(())
    }

    /// Exhaustive scan: pairs `(triangle, vertex)` where a generator lies
    /// strictly inside the circumcircle of a triangle of generators.
    pub fn delaunay_violations(&self) -> Vec<(TriangleId, VertexId)> {
        let generators: Vec<VertexId> = self.generators().collect();
        let mut out = Vec::new();
        for t in self.live_triangles() {
            let tv = self.triangles[t].vertices;
            if tv.iter().any(|&v| self.is_super(v)) {
                continue;
            }
            let [a, b, c] = tv.map(|v| self.vertices[v].position);
            for &g in &generators {
                if tv.contains(&g) {
                    continue;
                }
                if incircle_unchecked(a, b, c, self.vertices[g].position) == InCircleResult::Inside {
                    out.push((t, g));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn universe() -> BoundingBox {
        BoundingBox::centered(10.0)
    }

    fn random_points(n: usize, seed: u64) -> Vec<Point2> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Point2::new(rng.gen_range(-9.5..9.5), rng.gen_range(-9.5..9.5)))
            .collect()
    }

    fn build(points: &[Point2]) -> Triangulation {
        let mut t = Triangulation::new(universe());
        for (i, &p) in points.iter().enumerate() {
            t.insert_point(p, Some(i as u64)).unwrap();
        }
        t
    }

    fn position_edges(t: &Triangulation) -> Vec<[(u64, u64); 2]> {
        let mut out: Vec<[(u64, u64); 2]> = t
            .generator_edges()
            .into_iter()
            .map(|(a, b)| {
                let pa = t.position(a);
                let pb = t.position(b);
                let ka = (pa.x.to_bits(), pa.y.to_bits());
                let kb = (pb.x.to_bits(), pb.y.to_bits());
                if ka < kb {
                    [ka, kb]
                } else {
                    [kb, ka]
                }
            })
            .collect();
        out.sort_unstable();
        out
    }

    #[test]
    fn inside_insertion_adds_two_triangles_before_flips() {
        let mut t = build(&[Point2::new(0.0, 0.0), Point2::new(3.0, 0.0), Point2::new(0.0, 3.0)]);
        let before = t.live_triangle_count();
        let p = Point2::new(0.5, 0.5);
        let Location::Inside(tri) = t.locate(p) else {
            panic!("expected interior location")
        };
        let v = t.alloc_vertex(p, None);
        t.split_triangle(tri, v);
        assert_eq!(t.live_triangle_count(), before + 2);
        t.check_topology().unwrap();
    }

    #[test]
    fn insertion_on_edge_keeps_topology() {
        let mut t = build(&[Point2::new(-1.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0), Point2::new(0.0, -1.0)]);
        // (0, 0) lies on the edge between the two vertical points or the two
        // horizontal ones depending on the diagonal chosen.
        t.insert_point(Point2::new(0.0, 0.0), None).unwrap();
        t.check_topology().unwrap();
        assert!(t.delaunay_violations().is_empty());
        assert_eq!(t.euler_characteristic(), 2);
    }

    #[test]
    fn rejects_points_outside_and_duplicates() {
        let mut t = build(&[Point2::new(1.0, 1.0)]);
        assert!(matches!(
            t.insert_point(Point2::new(11.0, 0.0), None),
            Err(GeometryError::OutsideUniverse(..))
        ));
        assert!(matches!(
            t.insert_point(Point2::new(10.0, 0.0), None),
            Err(GeometryError::OutsideUniverse(..))
        ));
        assert!(matches!(
            t.insert_point(Point2::new(1.0, 1.0), None),
            Err(GeometryError::Duplicate(3))
        ));
        assert!(matches!(
            t.insert_point(Point2::new(1.0 + 1e-10, 1.0), None),
            Err(GeometryError::Duplicate(3))
        ));
        assert!(t.insert_point(Point2::new(1.0 + 1e-8, 1.0), None).is_ok());
        assert!(matches!(
            t.insert_point(Point2::new(f64::NAN, 0.0), None),
            Err(GeometryError::NonFinite(..))
        ));
    }

    #[test]
    fn random_build_is_delaunay() {
        let t = build(&random_points(400, 7));
        t.check_topology().unwrap();
        assert!(t.delaunay_violations().is_empty());
        assert_eq!(t.euler_characteristic(), 2);
    }

    #[test]
    fn cocircular_grid_is_handled() {
        let mut pts = Vec::new();
        for i in -4..=4 {
            for j in -4..=4 {
                pts.push(Point2::new(i as f64, j as f64));
            }
        }
        let t = build(&pts);
        t.check_topology().unwrap();
        assert!(t.delaunay_violations().is_empty());
        assert_eq!(t.euler_characteristic(), 2);
        // Interior generators of a unit grid each have 4 axis neighbors plus
        // one diagonal per cell split; total edges of a triangulated 9x9 grid.
        assert_eq!(t.generator_edges().len(), 8 * 9 * 2 + 64);
    }

    #[test]
    fn delete_matches_rebuild() {
        let pts = random_points(200, 11);
        let mut t = build(&pts);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut alive: Vec<VertexId> = t.generators().collect();
        for _ in 0..80 {
            let k = rng.gen_range(0..alive.len());
            let v = alive.swap_remove(k);
            let ev = t.delete_point(v).unwrap();
            assert_eq!(ev.vertex, v);
            t.check_topology().unwrap();
            assert_eq!(t.euler_characteristic(), 2);
        }
        assert!(t.delaunay_violations().is_empty());
        let remaining: Vec<Point2> = t.generators().map(|v| t.position(v)).collect();
        let fresh = build(&remaining);
        assert_eq!(position_edges(&t), position_edges(&fresh));
    }

    #[test]
    fn delete_on_cocircular_grid_matches_rebuild_in_id_order() {
        let mut pts = Vec::new();
        for i in -3..=3 {
            for j in -3..=3 {
                pts.push(Point2::new(i as f64, j as f64));
            }
        }
        let mut t = build(&pts);
        let center = t.nearest_generator(Point2::new(0.0, 0.0)).unwrap();
        t.delete_point(center).unwrap();
        t.check_topology().unwrap();
        assert!(t.delaunay_violations().is_empty());
        let remaining: Vec<Point2> = t.generators().map(|v| t.position(v)).collect();
        let fresh = build(&remaining);
        assert_eq!(position_edges(&t), position_edges(&fresh));
    }

    #[test]
    fn insert_then_delete_restores_edges() {
        let mut t = build(&random_points(150, 5));
        let before = t.edge_hash();
        let v = t.insert_point(Point2::new(0.123, -0.456), None).unwrap();
        assert_ne!(t.edge_hash(), before);
        t.delete_point(v).unwrap();
        assert_eq!(t.edge_hash(), before);
    }

    #[test]
    fn delete_errors_leave_structure_untouched() {
        let mut t = build(&random_points(10, 1));
        let snapshot = t.clone();
        assert_eq!(t.delete_point(999), Err(GeometryError::UnknownVertex(999)));
        assert_eq!(t.delete_point(1), Err(GeometryError::SuperVertex(1)));
        assert_eq!(t, snapshot);
    }

    #[test]
    fn two_generators_then_delete_one() {
        let mut t = build(&[Point2::new(-1.0, 0.0), Point2::new(1.0, 0.0)]);
        t.delete_point(4).unwrap();
        assert_eq!(t.generator_count(), 1);
        assert_eq!(t.live_triangle_count(), 3);
        // The survivor is nearest everywhere.
        for q in universe().corners() {
            assert_eq!(t.nearest_generator(q).unwrap(), 3);
        }
    }

    #[test]
    fn nearest_generator_matches_scan() {
        let pts = random_points(1000, 21);
        let t = build(&pts);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..1000 {
            let q = Point2::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
            let got = t.nearest_generator(q).unwrap();
            let best = t
                .generators()
                .min_by(|&a, &b| {
                    q.distance_squared(t.position(a))
                        .partial_cmp(&q.distance_squared(t.position(b)))
                        .unwrap()
                        .then(a.cmp(&b))
                })
                .unwrap();
            assert_eq!(got, best);
        }
    }

    #[test]
    fn nearest_generator_ties_and_coincidence() {
        let mut t = Triangulation::new(universe());
        // ids 3..=7; generators 4 and 7 are equidistant from the origin.
        t.insert_point(Point2::new(5.0, 5.0), None).unwrap();
        t.insert_point(Point2::new(-1.0, 0.0), None).unwrap();
        t.insert_point(Point2::new(-5.0, 5.0), None).unwrap();
        t.insert_point(Point2::new(5.0, -5.0), None).unwrap();
        t.insert_point(Point2::new(1.0, 0.0), None).unwrap();
        assert_eq!(t.nearest_generator(Point2::new(0.0, 0.0)).unwrap(), 4);
        assert_eq!(t.nearest_generator(Point2::new(5.0, -5.0)).unwrap(), 6);
        let empty = Triangulation::new(universe());
        assert_eq!(empty.nearest_generator(Point2::new(0.0, 0.0)), Err(GeometryError::Empty));
    }

    #[test]
    fn serialization_is_deterministic() {
        let a = build(&random_points(60, 2));
        let b = build(&random_points(60, 2));
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let back: Triangulation = serde_json::from_str(&serde_json::to_string(&a).unwrap()).unwrap();
        assert_eq!(back, a);
    }
}
