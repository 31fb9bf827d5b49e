//! Moving generators, line-segment objects and the Voronoi adjacency graph.
//!
//! A point moves along a straight path in a sequence of jumps. Each jump
//! ends where the path enters the circumcircle of an external triangle
//! (the diagonal is switched in) or leaves the circumcircle of three
//! consecutive neighbors (a neighbor is switched out).

mod movement;
mod segments;
mod vag;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, Point2, SegmentId, VertexId};

pub use segments::{SegmentInsertion, SegmentObject};
pub use vag::{build_vag, AdjacencyGraph, DEFAULT_SNAP_TOLERANCE};

/// A node of the adjacency graph: a point generator or a segment body.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "snake_case")]
pub enum ObjectId {
    Point(VertexId),
    Body(SegmentId),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TopologyEvent {
    None,
    /// The moving point entered an external circumcircle and gained a neighbor.
    DiagonalSwitchIn { gained: VertexId },
    /// The moving point left a neighbor-triple circumcircle and lost a neighbor.
    DiagonalSwitchOut { lost: VertexId },
    /// The path was cut short in front of another object.
    Collision { with: ObjectId },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoveStep {
    pub position: Point2,
    pub event: TopologyEvent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoveTrace {
    pub vertex: VertexId,
    pub steps: Vec<MoveStep>,
}

impl MoveTrace {
    pub fn switch_ins(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| matches!(s.event, TopologyEvent::DiagonalSwitchIn { .. }))
            .count()
    }

    pub fn switch_outs(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| matches!(s.event, TopologyEvent::DiagonalSwitchOut { .. }))
            .count()
    }

    pub fn collided(&self) -> bool {
        self.steps
            .iter()
            .any(|s| matches!(s.event, TopologyEvent::Collision { .. }))
    }

    pub fn final_position(&self) -> Option<Point2> {
        self.steps.last().map(|s| s.position)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KineticsError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("vertex {0} belongs to segment {1}; segments cannot move after creation")]
    SegmentLocked(VertexId, SegmentId),
    #[error("segment target coincides with its start")]
    ZeroLength,
    #[error("segment would cross segment body {0}")]
    Crossing(SegmentId),
    #[error("segment path is blocked by generator {0}")]
    Blocked(VertexId),
    #[error("unknown segment {0}")]
    UnknownSegment(SegmentId),
}
