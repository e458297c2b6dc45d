//! Discrete elastic rods: configuration, frames, elastic energy and its
//! first and second derivatives, lumped mass.

mod energy;
mod frames;
mod hessian;
mod mass;
mod params;
mod state;

use thiserror::Error;

pub use energy::{elastic_energy, elastic_gradient, ElasticEnergy};
pub use frames::{compute_frames, RodKinematicsCache};
pub use hessian::{elastic_hessian, hessian_pattern};
pub use mass::lumped_mass;
pub use params::{CrossSection, RodParameters};
pub use state::{Joint, RestShape, RodState, UndeformedQuantities, ANTIPARALLEL_TOLERANCE, MIN_EDGE_LENGTH};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RodError {
    #[error("invalid rod parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("rod needs at least {required} nodes, got {nodes}")]
    TooFewNodes { nodes: usize, required: usize },
    #[error("edge {edge} has degenerate length {length:e}")]
    DegenerateEdge { edge: usize, length: f64 },
    #[error("tangents are antiparallel at edge {edge}")]
    AntiparallelTangents { edge: usize },
}
