//! Planar vector math and the two geographic utility metrics.
//!
//! Every relay condition in [`crate::routing`] is built on three quantities:
//! the heading angle between a node's velocity and the bearing to the
//! destination, the intersect-time metric `(D - R) / (S cos phi)` and the
//! projected distance `D - W cos(phi) S - R`.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum GeometryError {
    #[error("relative angle is undefined for a node with zero speed")]
    ZeroSpeed,
    #[error("relative angle is undefined when the node sits on the destination")]
    CoincidentDestination,
    #[error("intersect time is undefined for heading angle {0} >= pi/2")]
    InvalidHeading(f64),
    #[error("node is already within range of the destination ({dist} <= {range})")]
    AlreadyInRange { dist: f64, range: f64 },
}

/// A point on the plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Position) -> f64 {
        (other.x - self.x).hypot(other.y - self.y)
    }

    pub fn offset(self, v: Velocity, dt: f64) -> Position {
        Position::new(self.x + v.dx * dt, self.y + v.dy * dt)
    }

    /// Point `frac` of the way from `self` towards `other`.
    pub fn lerp(self, other: Position, frac: f64) -> Position {
        Position::new(
            self.x + (other.x - self.x) * frac,
            self.y + (other.y - self.y) * frac,
        )
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Velocity vector in meters per second. The zero vector is a waiting node.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Velocity {
    pub dx: f64,
    pub dy: f64,
}

impl Velocity {
    pub const ZERO: Velocity = Velocity { dx: 0.0, dy: 0.0 };

    pub const fn new(dx: f64, dy: f64) -> Self {
        Self { dx, dy }
    }

    /// Velocity of magnitude `speed` pointing from `from` to `to`; zero if
    /// the two points coincide.
    pub fn towards(from: Position, to: Position, speed: f64) -> Self {
        let d = from.distance(to);
        if d == 0.0 {
            return Velocity::ZERO;
        }
        Velocity::new((to.x - from.x) / d * speed, (to.y - from.y) / d * speed)
    }

    pub fn speed(self) -> f64 {
        self.dx.hypot(self.dy)
    }

    pub fn is_zero(self) -> bool {
        self.dx == 0.0 && self.dy == 0.0
    }
}

/// Angle between a node's moving direction and its bearing to the
/// destination, in `[0, pi]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct RelativeAngle(f64);

impl RelativeAngle {
    /// Wraps a raw angle; values outside `[0, pi]` are clamped.
    pub fn from_radians(phi: f64) -> Self {
        RelativeAngle(phi.clamp(0.0, std::f64::consts::PI))
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    /// `phi < pi/2`: the node is heading towards the destination.
    pub fn is_approaching(self) -> bool {
        self.0 < FRAC_PI_2
    }
}

pub fn relative_angle(
    pos: Position,
    vel: Velocity,
    dest: Position,
) -> Result<RelativeAngle, GeometryError> {
    let speed = vel.speed();
    if speed == 0.0 {
        return Err(GeometryError::ZeroSpeed);
    }
    let (bx, by) = (dest.x - pos.x, dest.y - pos.y);
    let bearing = bx.hypot(by);
    if bearing == 0.0 {
        return Err(GeometryError::CoincidentDestination);
    }
    let cos = ((vel.dx * bx + vel.dy * by) / (speed * bearing)).clamp(-1.0, 1.0);
    Ok(RelativeAngle(cos.acos()))
}

/// Heuristic time for a node to reach the destination's range:
/// `(dist - range) / (speed * cos phi)`.
pub fn intersect_time(
    dist: f64,
    range: f64,
    speed: f64,
    phi: RelativeAngle,
) -> Result<f64, GeometryError> {
    if speed <= 0.0 {
        return Err(GeometryError::ZeroSpeed);
    }
    if !phi.is_approaching() {
        return Err(GeometryError::InvalidHeading(phi.radians()));
    }
    if dist <= range {
        return Err(GeometryError::AlreadyInRange { dist, range });
    }
    Ok((dist - range) / (speed * phi.radians().cos()))
}

/// Distance from the destination to where the node is expected to be after
/// `window` seconds, minus the range. Larger than `dist - range` when the
/// node drifts away (`phi > pi/2`).
pub fn projected_distance(dist: f64, window: f64, speed: f64, phi: RelativeAngle, range: f64) -> f64 {
    // cos(pi/2) is not exactly zero in floating point; the heading term must vanish there.
    let cos = if phi.radians() == FRAC_PI_2 { 0.0 } else { phi.radians().cos() };
    dist - window * cos * speed - range
}
