//! Exact orientation and in-circle predicates.
//!
//! The raw determinants come from Shewchuk's adaptive-precision routines
//! (via the `robust` crate), whose sign is always correct for representable
//! `f64` input. Exact zeros are resolved with a symbolic perturbation of the
//! lifted coordinates ordered by vertex id, so that [`in_circumcircle_sos`]
//! never answers `OnBoundary`.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Zero};
#[cfg(test)]
use num_traits::Signed;
use serde::{Deserialize, Serialize};

use super::GeometryError;

/// A location in map units.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance_squared(&self, other: Point2) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn distance(&self, other: Point2) -> f64 {
        self.distance_squared(other).sqrt()
    }

    pub fn lerp(&self, other: Point2, t: f64) -> Point2 {
        Point2::new(
            self.x + (other.x - self.x) * t,
            self.y + (other.y - self.y) * t,
        )
    }

    pub(crate) fn check(self) -> Result<Self, GeometryError> {
        if self.is_finite() {
            Ok(self)
        } else {
            Err(GeometryError::NonFinite(self.x, self.y))
        }
    }

    fn coord(self) -> robust::Coord<f64> {
        robust::Coord {
            x: self.x,
            y: self.y,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orientation {
    CounterClockwise,
    Collinear,
    Clockwise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InCircleResult {
    Inside,
    OnBoundary,
    Outside,
}

/// Sign of twice the signed area of `(a, b, c)`.
pub fn orient2d(a: Point2, b: Point2, c: Point2) -> Result<Orientation, GeometryError> {
    a.check()?;
    b.check()?;
    c.check()?;
    Ok(orient_unchecked(a, b, c))
}

/// Position of `d` relative to the circle through the counter-clockwise
/// triangle `(a, b, c)`.
pub fn in_circumcircle(
    a: Point2,
    b: Point2,
    c: Point2,
    d: Point2,
) -> Result<InCircleResult, GeometryError> {
    for p in [a, b, c, d] {
        p.check()?;
    }
    match orient_unchecked(a, b, c) {
        Orientation::CounterClockwise => Ok(incircle_unchecked(a, b, c, d)),
        Orientation::Collinear => Err(GeometryError::DegenerateCircle),
        Orientation::Clockwise => Err(GeometryError::ClockwiseTriangle),
    }
}

pub(crate) fn orient_value(a: Point2, b: Point2, c: Point2) -> f64 {
    robust::orient2d(a.coord(), b.coord(), c.coord())
}

pub(crate) fn orient_unchecked(a: Point2, b: Point2, c: Point2) -> Orientation {
    let det = orient_value(a, b, c);
    if det > 0.0 {
        Orientation::CounterClockwise
    } else if det < 0.0 {
        Orientation::Clockwise
    } else {
        Orientation::Collinear
    }
}

pub(crate) fn incircle_unchecked(a: Point2, b: Point2, c: Point2, d: Point2) -> InCircleResult {
    let det = robust::incircle(a.coord(), b.coord(), c.coord(), d.coord());
    if det > 0.0 {
        InCircleResult::Inside
    } else if det < 0.0 {
        InCircleResult::Outside
    } else {
        InCircleResult::OnBoundary
    }
}

/// In-circle test with symbolic perturbation.
///
/// Each point's lifted coordinate `x² + y²` is raised by `ε^rank`, where the
/// point with the largest key gets the dominant perturbation. On an exact
/// cocircular tie the answer is decided by the cofactor of the dominant
/// point, which is an orientation and never zero for distinct points.
/// `(a, b, c)` must be counter-clockwise.
pub(crate) fn in_circumcircle_sos(
    a: (Point2, usize),
    b: (Point2, usize),
    c: (Point2, usize),
    d: (Point2, usize),
) -> bool {
    match incircle_unchecked(a.0, b.0, c.0, d.0) {
        InCircleResult::Inside => return true,
        InCircleResult::Outside => return false,
        InCircleResult::OnBoundary => {}
    }
    let mut order = [(a.1, 0u8), (b.1, 1), (c.1, 2), (d.1, 3)];
    order.sort_unstable_by(|l, r| r.0.cmp(&l.0));
    for (_, which) in order {
        // Raising a triangle corner lifts the plane at `d` by the barycentric
        // weight of that corner; raising `d` itself pushes it outside.
        let sign = match which {
            0 => orient_unchecked(d.0, b.0, c.0),
            1 => orient_unchecked(a.0, d.0, c.0),
            2 => orient_unchecked(a.0, b.0, d.0),
            _ => return false,
        };
        match sign {
            Orientation::CounterClockwise => return true,
            Orientation::Clockwise => return false,
            Orientation::Collinear => continue,
        }
    }
    false
}

/// Exact comparison of `|q - a|` against `|q - b|`.
pub(crate) fn compare_distance(q: Point2, a: Point2, b: Point2) -> Ordering {
    let da = q.distance_squared(a);
    let db = q.distance_squared(b);
    let diff = da - db;
    // Each squared distance carries at most a few ulps of relative error.
    let bound = (da + db) * 8.0 * f64::EPSILON;
    if diff > bound {
        return Ordering::Greater;
    }
    if diff < -bound {
        return Ordering::Less;
    }
    exact_distance_squared(q, a).cmp(&exact_distance_squared(q, b))
}

fn exact(v: f64) -> BigRational {
    BigRational::from_f64(v).unwrap_or_else(|| BigRational::from_integer(BigInt::zero()))
}

fn exact_distance_squared(q: Point2, a: Point2) -> BigRational {
    let dx = exact(q.x) - exact(a.x);
    let dy = exact(q.y) - exact(a.y);
    &dx * &dx + &dy * &dy
}

/// Exact sign of the orientation determinant, used to cross-check the
/// adaptive routine in tests.
#[cfg(test)]
pub(crate) fn orient_exact_sign(a: Point2, b: Point2, c: Point2) -> i32 {
    let det = (exact(a.x) - exact(c.x)) * (exact(b.y) - exact(c.y))
        - (exact(a.y) - exact(c.y)) * (exact(b.x) - exact(c.x));
    if det.is_positive() {
        1
    } else if det.is_negative() {
        -1
    } else {
        0
    }
}

#[cfg(test)]
pub(crate) fn incircle_exact_sign(a: Point2, b: Point2, c: Point2, d: Point2) -> i32 {
    let row = |p: Point2| {
        let x = exact(p.x) - exact(d.x);
        let y = exact(p.y) - exact(d.y);
        let w = &x * &x + &y * &y;
        (x, y, w)
    };
    let (ax, ay, aw) = row(a);
    let (bx, by, bw) = row(b);
    let (cx, cy, cw) = row(c);
    let det = &ax * (&by * &cw - &bw * &cy) - &ay * (&bx * &cw - &bw * &cx)
        + &aw * (&bx * &cy - &by * &cx);
    if det.is_positive() {
        1
    } else if det.is_negative() {
        -1
    } else {
        0
    }
}
