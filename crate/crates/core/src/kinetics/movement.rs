use std::collections::BTreeSet;

use crate::geometry::{
    orient_unchecked, GeometryError, Orientation, Point2, SegmentId, TriangleId, Triangulation,
    VertexId, COINCIDENCE_TOLERANCE, NONE,
};

use super::{KineticsError, MoveStep, MoveTrace, ObjectId, TopologyEvent};

/// Moving points stop this far short of another generator.
const COLLISION_RADIUS: f64 = 2.0 * COINCIDENCE_TOLERANCE;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Candidate {
    SwitchIn { triangle: TriangleId, edge: usize, gained: VertexId },
    SwitchOut { triangle: TriangleId, edge: usize, lost: VertexId },
    Collide(VertexId),
}

impl Candidate {
    fn rank(&self) -> (u8, VertexId) {
        match *self {
            Candidate::Collide(u) => (0, u),
            Candidate::SwitchIn { gained, .. } => (1, gained),
            Candidate::SwitchOut { lost, .. } => (2, lost),
        }
    }
}

fn circumcircle(a: Point2, b: Point2, c: Point2) -> Option<(Point2, f64)> {
    let (bx, by) = (b.x - a.x, b.y - a.y);
    let (cx, cy) = (c.x - a.x, c.y - a.y);
    let d = 2.0 * (bx * cy - by * cx);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    let ux = (cy * b2 - by * c2) / d;
    let uy = (bx * c2 - cx * b2) / d;
    Some((Point2::new(a.x + ux, a.y + uy), ux * ux + uy * uy))
}

/// Parameters where `start + t (target - start)` crosses the circle.
fn circle_crossings(center: Point2, r2: f64, start: Point2, target: Point2) -> Option<(f64, f64)> {
    let (dx, dy) = (target.x - start.x, target.y - start.y);
    let (sx, sy) = (start.x - center.x, start.y - center.y);
    let a = dx * dx + dy * dy;
    let b = 2.0 * (dx * sx + dy * sy);
    let c = sx * sx + sy * sy - r2;
    let disc = b * b - 4.0 * a * c;
    if a == 0.0 || disc <= 0.0 || !disc.is_finite() {
        return None;
    }
    let root = disc.sqrt();
    // Numerically stable pair of roots.
    let q = -0.5 * (b + b.signum() * root);
    let (t1, t2) = if q == 0.0 {
        (-root / (2.0 * a), root / (2.0 * a))
    } else {
        let r1 = q / a;
        let r2 = c / q;
        (r1.min(r2), r1.max(r2))
    };
    Some((t1, t2))
}

/// First parameter at which the path comes within `radius` of `q`.
fn first_approach(q: Point2, radius: f64, start: Point2, target: Point2) -> Option<f64> {
    let (dx, dy) = (target.x - start.x, target.y - start.y);
    let len = (dx * dx + dy * dy).sqrt();
    if len == 0.0 {
        return None;
    }
    let (ux, uy) = (dx / len, dy / len);
    let (wx, wy) = (q.x - start.x, q.y - start.y);
    let along = wx * ux + wy * uy;
    let across = (wx * uy - wy * ux).abs();
    if across >= radius {
        return None;
    }
    Some((along - (radius * radius - across * across).sqrt()) / len)
}

fn on_segment(p: Point2, q: Point2, r: Point2) -> bool {
    r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
}

/// Exact test for intersection of the closed segments `p1p2` and `q1q2`.
pub(crate) fn segments_intersect(p1: Point2, p2: Point2, q1: Point2, q2: Point2) -> bool {
    let o1 = orient_unchecked(p1, p2, q1);
    let o2 = orient_unchecked(p1, p2, q2);
    let o3 = orient_unchecked(q1, q2, p1);
    let o4 = orient_unchecked(q1, q2, p2);
    use Orientation::Collinear;
    if o1 != o2 && o3 != o4 && o1 != Collinear && o2 != Collinear && o3 != Collinear && o4 != Collinear {
        return true;
    }
    (o1 == Collinear && on_segment(p1, p2, q1))
        || (o2 == Collinear && on_segment(p1, p2, q2))
        || (o3 == Collinear && on_segment(q1, q2, p1))
        || (o4 == Collinear && on_segment(q1, q2, p2))
}

/// Path parameter of the first contact of `start→target` with `q1q2`.
fn contact_parameter(start: Point2, target: Point2, q1: Point2, q2: Point2) -> f64 {
    let (dx, dy) = (target.x - start.x, target.y - start.y);
    let (ex, ey) = (q2.x - q1.x, q2.y - q1.y);
    let denom = dx * ey - dy * ex;
    let len2 = dx * dx + dy * dy;
    if denom.abs() > 1e-300 {
        let t = ((q1.x - start.x) * ey - (q1.y - start.y) * ex) / denom;
        return t.clamp(0.0, 1.0);
    }
    let proj = |q: Point2| ((q.x - start.x) * dx + (q.y - start.y) * dy) / len2;
    proj(q1).min(proj(q2)).clamp(0.0, 1.0)
}

impl Triangulation {
    /// Moves a generator along the straight path to `target`, switching
    /// diagonals whenever the path crosses a circumcircle.
    pub fn move_point(&mut self, v: VertexId, target: Point2) -> Result<MoveTrace, KineticsError> {
        if let Some(s) = self.segment_of_endpoint(v) {
            return Err(KineticsError::SegmentLocked(v, s));
        }
        self.move_vertex(v, target)
    }

    pub(crate) fn move_vertex(&mut self, v: VertexId, target: Point2) -> Result<MoveTrace, KineticsError> {
        target.check()?;
        if self.vertex(v).is_none() {
            return Err(GeometryError::UnknownVertex(v).into());
        }
        if self.is_super(v) {
            return Err(GeometryError::SuperVertex(v).into());
        }
        if !self.universe().contains_strictly(target) {
            return Err(GeometryError::OutsideUniverse(target.x, target.y).into());
        }
        let start = self.position(v);
        let mut trace = MoveTrace {
            vertex: v,
            steps: Vec::new(),
        };
        if start == target {
            return Ok(trace);
        }
        let (t_end, blocker) = self.body_block(v, start, target);
        let mut t_cur = 0.0f64;
        let mut handled: BTreeSet<(u8, VertexId, VertexId)> = BTreeSet::new();
        let limit = 64 + 8 * self.generator_count();
        for _ in 0..limit {
            let Some((t, candidate)) = self.next_event(v, start, target, t_cur, t_end, &handled) else {
                break;
            };
            let p = if t >= 1.0 { target } else { start.lerp(target, t) };
            if !self.star_valid_at(v, p) {
                break;
            }
            if t > t_cur {
                handled.clear();
            }
            self.set_position(v, p);
            t_cur = t;
            match candidate {
                Candidate::SwitchIn { triangle, edge, gained } => {
                    handled.insert((1, gained, v));
                    if self.flippable(triangle, edge) {
                        self.flip(triangle, edge);
                        if !self.is_super(gained) {
                            trace.steps.push(MoveStep {
                                position: p,
                                event: TopologyEvent::DiagonalSwitchIn { gained },
                            });
                        }
                    }
                }
                Candidate::SwitchOut { triangle, edge, lost } => {
                    handled.insert((2, lost, v));
                    if self.flippable(triangle, edge) {
                        self.flip(triangle, edge);
                        if !self.is_super(lost) {
                            trace.steps.push(MoveStep {
                                position: p,
                                event: TopologyEvent::DiagonalSwitchOut { lost },
                            });
                        }
                    }
                }
                Candidate::Collide(u) => {
                    self.finish_move(v, p, TopologyEvent::Collision { with: ObjectId::Point(u) }, &mut trace)?;
                    return Ok(trace);
                }
            }
        }
        let (end, event) = match blocker {
            Some(s) => (start.lerp(target, t_end), TopologyEvent::Collision { with: ObjectId::Body(s) }),
            None => (target, TopologyEvent::None),
        };
        self.finish_move(v, end, event, &mut trace)?;
        Ok(trace)
    }

    /// Places `v` at `end`, restores the empty-circumcircle property with
    /// exact predicates and closes the trace. Neighbor changes made by the
    /// exact repair are logged as switch events at `end`.
    fn finish_move(
        &mut self,
        v: VertexId,
        end: Point2,
        event: TopologyEvent,
        trace: &mut MoveTrace,
    ) -> Result<(), KineticsError> {
        let before: BTreeSet<VertexId> = self.generator_neighbors(v).into_iter().collect();
        let mut end = end;
        if self.star_valid_at(v, end) {
            self.set_position(v, end);
        } else if self.segment_of_endpoint(v).is_none() {
            self.relocate(v, end)?;
        } else {
            end = self.position(v);
        }
        let stack = self.star_edges(v);
        self.legalize(stack);
        let after: BTreeSet<VertexId> = self.generator_neighbors(v).into_iter().collect();
        for &gained in after.difference(&before) {
            trace.steps.push(MoveStep {
                position: end,
                event: TopologyEvent::DiagonalSwitchIn { gained },
            });
        }
        for &lost in before.difference(&after) {
            trace.steps.push(MoveStep {
                position: end,
                event: TopologyEvent::DiagonalSwitchOut { lost },
            });
        }
        trace.steps.push(MoveStep { position: end, event });
        Ok(())
    }

    /// Deletes and re-inserts `v`; the free list hands the same id back.
    fn relocate(&mut self, v: VertexId, p: Point2) -> Result<(), KineticsError> {
        let old = self.position(v);
        let payload = self.vertex(v).and_then(|x| x.payload);
        self.delete_point(v)?;
        match self.insert_point(p, payload) {
            Ok(nv) => {
                debug_assert_eq!(nv, v);
                Ok(())
            }
            Err(e) => {
                self.insert_point(old, payload)?;
                Err(e.into())
            }
        }
    }

    /// First segment body (not incident to `v`) touched by the path, as a
    /// stopping parameter short of contact.
    fn body_block(&self, v: VertexId, start: Point2, target: Point2) -> (f64, Option<SegmentId>) {
        let len = start.distance(target);
        let mut best: (f64, Option<SegmentId>) = (1.0, None);
        for (s, seg) in self.segments() {
            if seg.tail == v || seg.head == v {
                continue;
            }
            let (q1, q2) = (self.position(seg.tail), self.position(seg.head));
            if segments_intersect(start, target, q1, q2) {
                let t = (contact_parameter(start, target, q1, q2) - COLLISION_RADIUS / len).max(0.0);
                if t < best.0 || best.1.is_none() {
                    best = (t, Some(s));
                }
            }
        }
        best
    }

    fn next_event(
        &self,
        v: VertexId,
        start: Point2,
        target: Point2,
        t_cur: f64,
        t_end: f64,
        handled: &BTreeSet<(u8, VertexId, VertexId)>,
    ) -> Option<(f64, Candidate)> {
        let star = self.star(v);
        let n = star.len();
        let link: Vec<VertexId> = star
            .iter()
            .map(|&(t, k)| self.triangle(t).expect("live").vertices[(k + 1) % 3])
            .collect();
        let eps = 1e-12;
        let mut best: Option<(f64, Candidate)> = None;
        let mut offer = |t: f64, c: Candidate| {
            if t < t_cur || t > t_end {
                return;
            }
            let better = match best {
                None => true,
                Some((bt, bc)) => t < bt || (t == bt && c.rank() < bc.rank()),
            };
            if better {
                best = Some((t, c));
            }
        };
        for (idx, &(t, k)) in star.iter().enumerate() {
            let tri = self.triangle(t).expect("live");
            let a = tri.vertices[(k + 1) % 3];
            let b = tri.vertices[(k + 2) % 3];

            // Entering the circumcircle of the triangle across the link edge.
            let u = tri.neighbors[k];
            if u != NONE && !self.is_constrained(a, b) {
                let ut = self.triangle(u).expect("live");
                let j = ut.neighbors.iter().position(|&x| x == t).expect("mutual");
                let d = ut.vertices[j];
                if !handled.contains(&(1, d, v)) {
                    if let Some((c, r2)) = circumcircle(self.position(a), self.position(b), self.position(d)) {
                        if let Some((t1, t2)) = circle_crossings(c, r2, start, target) {
                            if t2 > t_cur + eps {
                                offer(t1.max(t_cur), Candidate::SwitchIn { triangle: t, edge: k, gained: d });
                            }
                        }
                    }
                }
            }

            // Leaving the circle of three consecutive neighbors around spoke v-a.
            let prev = link[(idx + n - 1) % n];
            let closed = n >= 3 && self.triangle(star[(idx + n - 1) % n].0).is_some() && prev != b;
            if closed && !self.is_constrained(v, a) && !handled.contains(&(2, a, v)) {
                let (pp, pa, pb) = (self.position(prev), self.position(a), self.position(b));
                if orient_unchecked(pp, pa, pb) == Orientation::CounterClockwise {
                    if let Some((c, r2)) = circumcircle(pp, pa, pb) {
                        if let Some((_, t2)) = circle_crossings(c, r2, start, target) {
                            if t2 > t_cur + eps {
                                offer(t2, Candidate::SwitchOut { triangle: t, edge: (k + 2) % 3, lost: a });
                            }
                        }
                    }
                }
            }

            if !self.is_super(a) {
                let pa = self.position(a);
                if let Some(t1) = first_approach(pa, COLLISION_RADIUS, start, target) {
                    if t1 > t_cur {
                        offer(t1, Candidate::Collide(a));
                    }
                }
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoundingBox;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn build(points: &[(f64, f64)]) -> Triangulation {
        let mut t = Triangulation::new(BoundingBox::centered(10.0));
        for &(x, y) in points {
            t.insert_point(Point2::new(x, y), None).unwrap();
        }
        t
    }

    /// Brute-force Delaunay neighbors: pairs (v, u) such that some triangle
    /// (v, u, w) over the generators has an empty circumcircle.
    fn brute_neighbors(t: &Triangulation, v: VertexId) -> BTreeSet<VertexId> {
        use crate::geometry::{in_circumcircle, orient2d, InCircleResult, Orientation};
        let gens: Vec<VertexId> = t.generators().collect();
        let mut out = BTreeSet::new();
        for &u in &gens {
            for &w in &gens {
                if u == v || w == v || u == w {
                    continue;
                }
                let (pv, pu, pw) = (t.position(v), t.position(u), t.position(w));
                if orient2d(pv, pu, pw).unwrap() != Orientation::CounterClockwise {
                    continue;
                }
                let empty = gens.iter().all(|&x| {
                    x == v || x == u || x == w
                        || in_circumcircle(pv, pu, pw, t.position(x)).unwrap() != InCircleResult::Inside
                });
                if empty {
                    out.insert(u);
                    out.insert(w);
                }
            }
        }
        out
    }

    #[test]
    fn identity_move_is_empty() {
        let mut t = build(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]);
        let before = t.clone();
        let trace = t.move_point(3, Point2::new(0.0, 0.0)).unwrap();
        assert!(trace.steps.is_empty());
        assert_eq!(t, before);
    }

    #[test]
    fn small_move_has_single_quiet_step() {
        let mut t = build(&[(0.0, 0.0), (4.0, 0.0), (0.0, 4.0), (4.0, 4.5)]);
        let trace = t.move_point(3, Point2::new(0.01, 0.02)).unwrap();
        assert_eq!(trace.steps.len(), 1);
        assert_eq!(trace.steps[0].event, TopologyEvent::None);
        assert_eq!(trace.steps[0].position, Point2::new(0.01, 0.02));
    }

    #[test]
    fn crossing_one_circle_switches_in_once() {
        // Triangle a,b,c with d far to the right; moving d left enters the
        // circumcircle of (a,b,c) exactly once.
        let mut t = build(&[(0.0, -1.0), (0.0, 1.0), (-1.0, 0.0), (3.0, 0.0)]);
        let d = 6;
        let trace = t.move_point(d, Point2::new(0.5, 0.1)).unwrap();
        assert_eq!(trace.switch_ins(), 1);
        assert_eq!(trace.switch_outs(), 0);
        assert!(t.delaunay_violations().is_empty());
        t.check_topology().unwrap();
        // The switch happens where the path meets the unit circle.
        let hit = trace.steps[0].position;
        assert!((hit.x * hit.x + hit.y * hit.y - 1.0).abs() < 1e-9);
    }

    #[test]
    fn moves_are_reversible() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let pts: Vec<(f64, f64)> = (0..80)
            .map(|_| (rng.gen_range(-9.0..9.0), rng.gen_range(-9.0..9.0)))
            .collect();
        let mut t = build(&pts);
        for v in [5usize, 17, 40, 61] {
            let before = t.edge_hash();
            let origin = t.position(v);
            let dest = Point2::new(rng.gen_range(-9.0..9.0), rng.gen_range(-9.0..9.0));
            let out = t.move_point(v, dest).unwrap();
            assert!(!out.collided());
            assert!(t.delaunay_violations().is_empty());
            t.move_point(v, origin).unwrap();
            assert_eq!(t.edge_hash(), before);
        }
    }

    #[test]
    fn final_neighbors_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let pts: Vec<(f64, f64)> = (0..40)
            .map(|_| (rng.gen_range(-9.0..9.0), rng.gen_range(-9.0..9.0)))
            .collect();
        let mut t = build(&pts);
        for _ in 0..30 {
            let gens: Vec<VertexId> = t.generators().collect();
            let v = gens[rng.gen_range(0..gens.len())];
            let dest = Point2::new(rng.gen_range(-9.0..9.0), rng.gen_range(-9.0..9.0));
            let trace = t.move_point(v, dest).unwrap();
            let mut positions: Vec<f64> = Vec::new();
            for s in &trace.steps {
                positions.push(s.position.distance(dest));
            }
            assert!(positions.windows(2).all(|w| w[1] <= w[0] + 1e-12), "monotone progress");
            assert!(t.delaunay_violations().is_empty());
            let got: BTreeSet<VertexId> = t.generator_neighbors(v).into_iter().collect();
            assert_eq!(got, brute_neighbors(&t, v));
        }
    }

    #[test]
    fn collision_truncates_move() {
        let mut t = build(&[(0.0, 0.0), (2.0, 0.0), (1.0, 3.0)]);
        let trace = t.move_point(3, Point2::new(4.0, 0.0)).unwrap();
        assert!(trace.collided());
        let end = trace.final_position().unwrap();
        assert!(end.distance(Point2::new(2.0, 0.0)) < 1e-8);
        assert!(end.x < 2.0);
        assert!(t.delaunay_violations().is_empty());
    }

    #[test]
    fn move_errors() {
        let mut t = build(&[(0.0, 0.0)]);
        assert!(matches!(t.move_point(42, Point2::new(1.0, 1.0)), Err(KineticsError::Geometry(GeometryError::UnknownVertex(42)))));
        assert!(t.move_point(3, Point2::new(11.0, 1.0)).is_err());
        assert!(t.move_point(3, Point2::new(f64::NAN, 1.0)).is_err());
    }

    #[test]
    fn segment_intersection_cases() {
        let p = |x, y| Point2::new(x, y);
        assert!(segments_intersect(p(0.0, 0.0), p(2.0, 2.0), p(0.0, 2.0), p(2.0, 0.0)));
        assert!(!segments_intersect(p(0.0, 0.0), p(1.0, 1.0), p(2.0, 0.0), p(3.0, 0.0)));
        assert!(segments_intersect(p(0.0, 0.0), p(2.0, 0.0), p(1.0, 0.0), p(3.0, 0.0)));
        assert!(segments_intersect(p(0.0, 0.0), p(2.0, 0.0), p(2.0, 0.0), p(3.0, 1.0)));
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(48))]
        #[test]
        fn moves_keep_empty_circumcircles(
            pts in proptest::collection::vec((-9.0f64..9.0, -9.0f64..9.0), 3..40),
            pick in 0usize..40,
            dest in (-9.0f64..9.0, -9.0f64..9.0),
        ) {
            let mut t = build(&pts);
            let gens: Vec<VertexId> = t.generators().collect();
            let v = gens[pick % gens.len()];
            let trace = t.move_point(v, Point2::new(dest.0, dest.1)).unwrap();
            proptest::prop_assert!(t.check_topology().is_ok());
            proptest::prop_assert!(t.delaunay_violations().is_empty());
            if !trace.collided() {
                proptest::prop_assert_eq!(t.position(v), Point2::new(dest.0, dest.1));
            }
            let got: BTreeSet<VertexId> = t.generator_neighbors(v).into_iter().collect();
            proptest::prop_assert_eq!(got, brute_neighbors(&t, v));
        }
    }
}
