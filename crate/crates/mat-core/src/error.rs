//! Error types shared across the crate.

use core::fmt;

use crate::msg::{RobotId, TriKey};

/// Errors surfaced by core operations.
#[derive(Debug, Clone, PartialEq)]
pub enum CoreError {
    /// Bearing quantization resolution must be positive and divide 2π.
    BadResolution { resolution: f64 },
    /// An angular predicate needs at least three bearings.
    TooFewBearings { got: usize },
    /// Triangle area below the degeneracy tolerance.
    DegenerateTriangle { area: f64 },
    /// Polygon failed structural validation.
    BadPolygon(&'static str),
    /// Fatness parameters out of range.
    BadFatness { rho: f64, alpha: f64 },
    /// An edge is incident to three or more triangles.
    EdgeOverlap { edge: (RobotId, RobotId) },
    /// A point is not contained in any triangle of the triangulation.
    OutsideTriangulation,
    /// Start and goal are not connected.
    Unreachable,
    /// A serialized message exceeded a table cap.
    MessageCap { field: &'static str, len: usize, cap: usize },
    /// Message bytes did not decode.
    MessageCorrupt,
    /// A robot attempted to own more triangles than the table cap allows.
    OwnedOverflow { robot: RobotId, cap: usize },
    /// Referenced triangle missing from the snapshot.
    UnknownTriangle { key: TriKey },
    /// Scenario/world configuration rejected.
    BadConfig(&'static str),
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::BadResolution { resolution } => {
                write!(f, "bearing resolution {resolution} is not a positive divisor of 2π")
            }
            CoreError::TooFewBearings { got } => {
                write!(f, "need at least 3 bearings, got {got}")
            }
            CoreError::DegenerateTriangle { area } => {
                write!(f, "degenerate triangle (area {area:e} below tolerance)")
            }
            CoreError::BadPolygon(why) => write!(f, "invalid polygon: {why}"),
            CoreError::BadFatness { rho, alpha } => {
                write!(f, "invalid fatness parameters rho={rho} alpha={alpha}")
            }
            CoreError::EdgeOverlap { edge } => {
                write!(f, "edge {}-{} borders 3 or more triangles", edge.0, edge.1)
            }
            CoreError::OutsideTriangulation => write!(f, "point outside every triangle"),
            CoreError::Unreachable => write!(f, "no path between the given points"),
            CoreError::MessageCap { field, len, cap } => {
                write!(f, "message field {field} has {len} entries, cap is {cap}")
            }
            CoreError::MessageCorrupt => write!(f, "message bytes failed to decode"),
            CoreError::OwnedOverflow { robot, cap } => {
                write!(f, "robot {robot} owns more than {cap} triangles")
            }
            CoreError::UnknownTriangle { key } => write!(f, "unknown triangle {key}"),
            CoreError::BadConfig(why) => write!(f, "invalid configuration: {why}"),
        }
    }
}

impl core::error::Error for CoreError {}
