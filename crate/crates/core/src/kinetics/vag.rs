use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::geometry::{Triangulation, VertexId};

use super::ObjectId;

/// Point objects closer than this are treated as one node.
pub const DEFAULT_SNAP_TOLERANCE: f64 = 1e-6;

/// Undirected simple graph with ordered nodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdjacencyGraph<N: Ord = ObjectId> {
    nodes: BTreeSet<N>,
    edges: BTreeSet<(N, N)>,
}

impl<N: Ord> Default for AdjacencyGraph<N> {
    fn default() -> Self {
        Self {
            nodes: BTreeSet::new(),
            edges: BTreeSet::new(),
        }
    }
}

impl<N: Ord + Copy> AdjacencyGraph<N> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, n: N) {
        self.nodes.insert(n);
    }

    /// Adds `a—b`; self-loops are ignored.
    pub fn add_edge(&mut self, a: N, b: N) {
        if a == b {
            return;
        }
        self.nodes.insert(a);
        self.nodes.insert(b);
        self.edges.insert(if a < b { (a, b) } else { (b, a) });
    }

    pub fn contains_edge(&self, a: N, b: N) -> bool {
        self.edges.contains(&if a < b { (a, b) } else { (b, a) })
    }

    pub fn contains_node(&self, n: N) -> bool {
        self.nodes.contains(&n)
    }

    pub fn nodes(&self) -> impl Iterator<Item = N> + '_ {
        self.nodes.iter().copied()
    }

    pub fn edges(&self) -> impl Iterator<Item = (N, N)> + '_ {
        self.edges.iter().copied()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, n: N) -> Vec<N> {
        self.edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == n {
                    Some(b)
                } else if b == n {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }

    /// Neighbor lists for every node, in node order.
    pub fn adjacency(&self) -> BTreeMap<N, Vec<N>> {
        let mut out: BTreeMap<N, Vec<N>> = self.nodes.iter().map(|&n| (n, Vec::new())).collect();
        for &(a, b) in &self.edges {
            out.get_mut(&a).expect("node").push(b);
            out.get_mut(&b).expect("node").push(a);
        }
        out
    }

    /// Euler bound `E <= 3V - 6` for simple planar graphs.
    pub fn satisfies_planar_bound(&self) -> bool {
        let v = self.node_count();
        v < 3 || self.edge_count() <= 3 * v - 6
    }
}

fn find(parent: &mut BTreeMap<VertexId, VertexId>, v: VertexId) -> VertexId {
    let p = *parent.get(&v).unwrap_or(&v);
    if p == v {
        return v;
    }
    let root = find(parent, p);
    parent.insert(v, root);
    root
}

/// Adjacency over point objects and segment bodies. A constrained edge
/// stands for a body: its endpoints and the apexes beside it touch the body
/// rather than each other. Points joined by a Delaunay edge shorter than
/// `snap_tolerance` collapse onto the smallest id in one pass.
pub fn build_vag(t: &Triangulation, snap_tolerance: f64) -> AdjacencyGraph {
    let mut parent: BTreeMap<VertexId, VertexId> = BTreeMap::new();
    let edges = t.generator_edges();
    for &(a, b) in &edges {
        if !t.is_constrained(a, b) && t.position(a).distance(t.position(b)) < snap_tolerance {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            parent.insert(hi, lo);
        }
    }
    let mut rep = |v: VertexId| ObjectId::Point(find(&mut parent, v));

    let mut g = AdjacencyGraph::new();
    for v in t.generators() {
        g.add_node(rep(v));
    }
    let body_of: BTreeMap<(VertexId, VertexId), usize> = t
        .segments()
        .map(|(s, seg)| ((seg.tail.min(seg.head), seg.tail.max(seg.head)), s))
        .collect();
    for &s in body_of.values() {
        g.add_node(ObjectId::Body(s));
    }
    for (a, b) in edges {
        match body_of.get(&(a.min(b), a.max(b))) {
            None => g.add_edge(rep(a), rep(b)),
            Some(&s) => {
                let body = ObjectId::Body(s);
                g.add_edge(rep(a), body);
                g.add_edge(rep(b), body);
            }
        }
    }
    // Apexes of the triangles on either side of each body.
    for tri in t.live_triangles() {
        let vs = t.triangle(tri).expect("live").vertices;
        for i in 0..3 {
            let (a, b, apex) = (vs[(i + 1) % 3], vs[(i + 2) % 3], vs[i]);
            if let Some(&s) = body_of.get(&(a.min(b), a.max(b))) {
                if !t.is_super(apex) {
                    g.add_edge(rep(apex), ObjectId::Body(s));
                }
            }
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BoundingBox, Point2};
    use proptest::prelude::*;

    fn points(pts: &[(f64, f64)]) -> Triangulation {
        let mut t = Triangulation::new(BoundingBox::centered(10.0));
        for &(x, y) in pts {
            let _ = t.insert_point(Point2::new(x, y), None);
        }
        t
    }

    #[test]
    fn empty_structure_gives_empty_graph() {
        let t = Triangulation::new(BoundingBox::centered(1.0));
        let g = build_vag(&t, DEFAULT_SNAP_TOLERANCE);
        assert_eq!(g.node_count(), 0);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn points_only_equals_delaunay_edges() {
        let t = points(&[(0.0, 0.0), (3.0, 0.5), (1.0, 4.0), (-2.0, 2.0), (-1.0, -3.0), (4.0, -4.0)]);
        let g = build_vag(&t, DEFAULT_SNAP_TOLERANCE);
        let expected: BTreeSet<(ObjectId, ObjectId)> = t
            .generator_edges()
            .into_iter()
            .map(|(a, b)| (ObjectId::Point(a), ObjectId::Point(b)))
            .collect();
        let got: BTreeSet<_> = g.edges().collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn heads_within_tolerance_snap() {
        let mut t = points(&[(-4.0, 0.0), (4.0, 0.0), (0.0, 5.0)]);
        t.insert_segment(3, Point2::new(0.0, 0.0)).unwrap();
        let unsnapped = build_vag(&t, 0.0).node_count();
        t.insert_segment(4, Point2::new(0.5 * DEFAULT_SNAP_TOLERANCE, 0.0)).unwrap();
        let before = build_vag(&t, 0.0);
        let after = build_vag(&t, DEFAULT_SNAP_TOLERANCE);
        assert_eq!(before.node_count(), unsnapped + 2);
        assert_eq!(after.node_count(), before.node_count() - 1);
        assert!(after.satisfies_planar_bound());
    }

    #[test]
    fn body_touches_its_endpoints_and_apexes() {
        let mut t = points(&[(-4.0, 0.0), (0.0, 3.0), (0.0, -3.0)]);
        let seg = t.insert_segment(3, Point2::new(4.0, 0.0)).unwrap().segment;
        let g = build_vag(&t, DEFAULT_SNAP_TOLERANCE);
        let body = ObjectId::Body(seg.body);
        for v in [seg.tail, seg.head, 4, 5] {
            assert!(g.contains_edge(ObjectId::Point(v), body), "{v}");
        }
        assert!(!g.contains_edge(ObjectId::Point(seg.tail), ObjectId::Point(seg.head)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn graph_is_planar(
            pts in prop::collection::vec((-9.0f64..9.0, -9.0f64..9.0), 3..60),
            segs in prop::collection::vec((0usize..60, -9.0f64..9.0, -9.0f64..9.0), 0..8),
        ) {
            let mut t = points(&pts);
            for (i, x, y) in segs {
                let gens: Vec<_> = t.generators().collect();
                let _ = t.insert_segment(gens[i % gens.len()], Point2::new(x, y));
            }
            let g = build_vag(&t, DEFAULT_SNAP_TOLERANCE);
            prop_assert!(g.satisfies_planar_bound());
        }
    }
}
