//! Incremental Delaunay triangulation with its Voronoi dual.

mod predicates;
mod triangulation;
mod voronoi;

pub use predicates::{in_circumcircle, orient2d, InCircleResult, Orientation, Point2};
pub(crate) use predicates::orient_unchecked;
pub use triangulation::{
    BoundingBox, DeleteEvent, Location, Segment, SegmentId, Triangle, TriangleId, Triangulation,
    Vertex, VertexId, COINCIDENCE_TOLERANCE, NONE, SUPER_VERTEX_COUNT,
};
pub use voronoi::{clip_to_halfplane, VoronoiCell};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("coordinate ({0}, {1}) is not finite")]
    NonFinite(f64, f64),
    #[error("three collinear points do not define a circle")]
    DegenerateCircle,
    #[error("triangle is not counter-clockwise")]
    ClockwiseTriangle,
    #[error("point ({0}, {1}) lies outside the universe")]
    OutsideUniverse(f64, f64),
    #[error("point duplicates generator {0}")]
    Duplicate(VertexId),
    #[error("unknown or deleted vertex {0}")]
    UnknownVertex(VertexId),
    #[error("vertex {0} is a super vertex")]
    SuperVertex(VertexId),
    #[error("vertex {0} is an endpoint of segment {1}")]
    SegmentEndpoint(VertexId, SegmentId),
    #[error("point lies on segment body {0}")]
    OnSegment(SegmentId),
    #[error("triangulation has no generators")]
    Empty,
    #[error("invalid universe: {0}")]
    InvalidUniverse(String),
}
