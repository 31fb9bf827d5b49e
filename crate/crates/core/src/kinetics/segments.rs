use serde::{Deserialize, Serialize};

use crate::geometry::{GeometryError, Orientation, Point2, SegmentId, Triangulation, VertexId, COINCIDENCE_TOLERANCE};
use crate::geometry::orient_unchecked;

use super::movement::segments_intersect;
use super::{KineticsError, MoveTrace};

/// A line object: two point objects joined by an open body that is an
/// object in its own right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentObject {
    pub body: SegmentId,
    pub tail: VertexId,
    pub head: VertexId,
}

/// Result of growing a segment out of an existing point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentInsertion {
    pub segment: SegmentObject,
    /// Object count change caused by the split (head point plus body).
    pub objects_added: usize,
    /// Object-triangle count change caused by the split.
    pub triangles_added: usize,
    /// Movement of the head from the split point out to the target.
    pub extension: MoveTrace,
}

fn distance_to_segment(p: Point2, a: Point2, b: Point2) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
    p.distance(Point2::new(a.x + t * dx, a.y + t * dy))
}

impl Triangulation {
    pub fn segment_object(&self, s: SegmentId) -> Option<SegmentObject> {
        self.segment(s).map(|seg| SegmentObject {
            body: s,
            tail: seg.tail,
            head: seg.head,
        })
    }

    /// Splits `tail` into a tail, a new head and the body between them, then
    /// moves the head out to `target`. The body is a constrained edge, so the
    /// adjacencies it gathers on the way are kept.
    pub fn insert_segment(&mut self, tail: VertexId, target: Point2) -> Result<SegmentInsertion, KineticsError> {
        target.check()?;
        if self.vertex(tail).is_none() {
            return Err(GeometryError::UnknownVertex(tail).into());
        }
        if self.is_super(tail) {
            return Err(GeometryError::SuperVertex(tail).into());
        }
        if !self.universe().contains_strictly(target) {
            return Err(GeometryError::OutsideUniverse(target.x, target.y).into());
        }
        let start = self.position(tail);
        let length = start.distance(target);
        if length < COINCIDENCE_TOLERANCE {
            return Err(KineticsError::ZeroLength);
        }
        self.check_segment_path(tail, start, target)?;

        let nearest = self
            .generator_neighbors(tail)
            .into_iter()
            .map(|u| self.position(u).distance(start))
            .fold(f64::INFINITY, f64::min);
        let split = 0.25 * nearest.min(length);
        let head_start = start.lerp(target, split / length);

        let objects_before = self.object_count();
        let triangles_before = self.object_triangle_count();
        let head = self.insert_point(head_start, None)?;
        if !self.neighbors(head).contains(&tail) {
            self.delete_point(head)?;
            return Err(KineticsError::Blocked(tail));
        }
        let body = self.add_segment(tail, head);
        let objects_added = self.object_count() - objects_before;
        let triangles_added = self.object_triangle_count() - triangles_before;

        let extension = self.move_vertex(head, target)?;
        Ok(SegmentInsertion {
            segment: SegmentObject { body, tail, head },
            objects_added,
            triangles_added,
            extension,
        })
    }

    fn check_segment_path(&self, tail: VertexId, start: Point2, target: Point2) -> Result<(), KineticsError> {
        for (s, seg) in self.segments() {
            let (q1, q2) = (self.position(seg.tail), self.position(seg.head));
            if seg.tail == tail || seg.head == tail {
                // Sharing the tail is allowed unless the bodies overlap.
                let other = if seg.tail == tail { q2 } else { q1 };
                let same_line = orient_unchecked(start, target, other) == Orientation::Collinear;
                let same_way = (target.x - start.x) * (other.x - start.x) + (target.y - start.y) * (other.y - start.y) > 0.0;
                if same_line && same_way {
                    return Err(KineticsError::Crossing(s));
                }
            } else if segments_intersect(start, target, q1, q2) {
                return Err(KineticsError::Crossing(s));
            }
        }
        for u in self.generators() {
            if u != tail && distance_to_segment(self.position(u), start, target) < 2.0 * COINCIDENCE_TOLERANCE {
                return Err(KineticsError::Blocked(u));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoundingBox;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scattered(n: usize, seed: u64) -> Triangulation {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Triangulation::new(BoundingBox::centered(10.0));
        for _ in 0..n {
            let _ = t.insert_point(Point2::new(rng.gen_range(-9.0..9.0), rng.gen_range(-9.0..9.0)), None);
        }
        t
    }

    fn bodies_cross(t: &Triangulation) -> bool {
        let segs: Vec<_> = t.segments().collect();
        for (i, &(_, a)) in segs.iter().enumerate() {
            for &(_, b) in &segs[i + 1..] {
                let shared = [a.tail, a.head].iter().any(|v| *v == b.tail || *v == b.head);
                if !shared
                    && segments_intersect(t.position(a.tail), t.position(a.head), t.position(b.tail), t.position(b.head))
                {
                    return true;
                }
            }
        }
        false
    }

    #[test]
    fn split_adds_two_objects_and_four_triangles() {
        let mut t = scattered(30, 1);
        let tail = t.generators().next().unwrap();
        let target = Point2::new(0.3, 0.2);
        let out = t.insert_segment(tail, target).unwrap();
        assert_eq!(out.objects_added, 2);
        assert_eq!(out.triangles_added, 4);
        assert_eq!(t.position(out.segment.head), target);
        assert!(t.is_constrained(out.segment.tail, out.segment.head));
        t.check_topology().unwrap();
    }

    #[test]
    fn zero_length_is_rejected_without_mutation() {
        let mut t = scattered(10, 2);
        let before = t.clone();
        let tail = t.generators().next().unwrap();
        let p = t.position(tail);
        assert_eq!(t.insert_segment(tail, p), Err(KineticsError::ZeroLength));
        assert_eq!(t, before);
    }

    #[test]
    fn star_of_three_segments() {
        let mut t = Triangulation::new(BoundingBox::centered(10.0));
        let hub = t.insert_point(Point2::new(0.0, 0.0), None).unwrap();
        for &(x, y) in &[(5.0, 0.0), (-2.0, 4.0), (-2.0, -4.0)] {
            t.insert_segment(hub, Point2::new(x, y)).unwrap();
        }
        assert_eq!(t.segments().count(), 3);
        assert_eq!(t.generator_count(), 4);
        assert!(!bodies_cross(&t));
        t.check_topology().unwrap();
    }

    #[test]
    fn crossing_and_locked_errors() {
        let mut t = Triangulation::new(BoundingBox::centered(10.0));
        let a = t.insert_point(Point2::new(-4.0, 0.0), None).unwrap();
        let b = t.insert_point(Point2::new(0.0, -4.0), None).unwrap();
        let seg = t.insert_segment(a, Point2::new(4.0, 0.0)).unwrap().segment;
        let before = t.clone();
        assert_eq!(t.insert_segment(b, Point2::new(0.0, 4.0)), Err(KineticsError::Crossing(seg.body)));
        assert_eq!(t.insert_segment(a, Point2::new(2.0, 0.0)), Err(KineticsError::Crossing(seg.body)));
        assert_eq!(t, before);
        assert_eq!(
            t.move_point(seg.head, Point2::new(1.0, 1.0)),
            Err(KineticsError::SegmentLocked(seg.head, seg.body))
        );
        assert!(matches!(t.delete_point(seg.tail), Err(GeometryError::SegmentEndpoint(..))));
    }

    #[test]
    fn generator_on_path_blocks() {
        let mut t = Triangulation::new(BoundingBox::centered(10.0));
        let a = t.insert_point(Point2::new(-4.0, 0.0), None).unwrap();
        let b = t.insert_point(Point2::new(0.0, 0.0), None).unwrap();
        assert_eq!(t.insert_segment(a, Point2::new(4.0, 0.0)), Err(KineticsError::Blocked(b)));
    }

    #[test]
    fn random_segments_never_cross() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut t = scattered(60, 5);
        let mut made = 0;
        for _ in 0..40 {
            let gens: Vec<_> = t.generators().filter(|&v| t.segment_of_endpoint(v).is_none()).collect();
            let tail = gens[rng.gen_range(0..gens.len())];
            let target = Point2::new(rng.gen_range(-9.0..9.0), rng.gen_range(-9.0..9.0));
            match t.insert_segment(tail, target) {
                Ok(out) => {
                    made += 1;
                    assert_eq!(out.triangles_added, 4);
                    assert_eq!(t.position(out.segment.head), target);
                }
                Err(KineticsError::Crossing(_)) | Err(KineticsError::Blocked(_)) => {}
                Err(e) => panic!("unexpected {e}"),
            }
            t.check_topology().unwrap();
            assert!(!bodies_cross(&t));
            for (_, s) in t.segments() {
                assert!(t.neighbors(s.tail).contains(&s.head));
            }
        }
        assert!(made > 3);
    }

    #[test]
    fn remove_segment_drops_head() {
        let mut t = scattered(20, 9);
        let tail = t.generators().next().unwrap();
        let out = t.insert_segment(tail, Point2::new(1.0, 1.0)).unwrap();
        let n = t.generator_count();
        t.remove_segment(out.segment.body).unwrap();
        assert_eq!(t.generator_count(), n - 1);
        assert!(t.delaunay_violations().is_empty());
        t.check_topology().unwrap();
    }
}
