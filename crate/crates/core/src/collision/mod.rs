//! Contact geometry: primitive shapes, point-contact queries, pressure-field
//! patch contact, broad phase and the contact Jacobian.

mod broad;
mod dump;
mod jacobian;
mod patch;
mod point;
mod pressure;
mod shape;

use thiserror::Error;

pub use broad::{filament_self_and_body_pairs, BodyGeometry, ColliderId, RodGeometry};
pub use dump::{parse_patch_dump, write_patch_dump, DumpPolygon};
pub use jacobian::{contact_jacobian, BodyLayout, ContactJacobian, ContactPoint, ContactSide, PatchData, SystemTopology};
pub use patch::{patch_contact_query, PatchPolygon, MIN_POLYGON_AREA};
pub use point::{closest_between_segments, closest_on_segment, point_contact_query, point_contact_query_with_margin, GeomContact};
pub use pressure::{build_pressure_body, build_pressure_body_with_slab, PressureBody, SlabExtent};
pub use shape::{box_sdf, Aabb, Pose, Shape, ShapeKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CollisionError {
    #[error("no contact query for {a} against {b}")]
    UnsupportedPair { a: &'static str, b: &'static str },
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("mesh resolution too coarse: no interior vertex")]
    ResolutionTooCoarse,
    #[error("pressure fields have equal gradients inside an overlapping tet pair")]
    DegenerateGradient,
    #[error("patch dump line {line}: {reason}")]
    DumpParse { line: usize, reason: String },
}
