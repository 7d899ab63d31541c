use thiserror::Error;

use crate::fields::DisplacementField;
use crate::lattice::{NodeId, TriangleId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("lattice spacing must be positive and finite, got {0}")]
    InvalidEpsilon(f64),

    #[error("no lattice triangle fits in the domain at spacing {epsilon} (domain diameter {diameter})")]
    EmptyComplex { epsilon: f64, diameter: f64 },

    #[error("no bond between {0:?} and {1:?}")]
    MissingBond(NodeId, NodeId),

    #[error("triangle {0} is not in the complex")]
    MissingTriangle(TriangleId),

    #[error("field has {found} entries but the complex has {expected}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("circulation of du - σ on {0} is nonzero")]
    NonzeroCirculation(TriangleId),

    #[error("loop edge ({0:?}, {1:?}) lies on no triangle of the strain field")]
    LoopLeavesRegion(NodeId, NodeId),

    #[error("measure violates mild separation: {0}")]
    NotAdmissible(String),

    #[error("lattice complex is not usable for the reduction: {0}")]
    Topology(String),

    #[error("half-line from {origin} passes through charged triangle {blocking}")]
    BlockedHalfLine { origin: TriangleId, blocking: TriangleId },

    #[error("cannot orient bond ({0:?}, {1:?}): endpoints are equidistant from the half-line")]
    Equidistant(NodeId, NodeId),

    #[error("only unit Burgers vectors are supported here, got ({0}, {1})")]
    NonUnitBurgers(i64, i64),

    #[error("singular fields are undefined at the dislocation core")]
    AtCore,

    #[error("point ({0}, {1}) is not strictly inside the domain")]
    OutsideDomain(f64, f64),

    #[error("slip construction produced the wrong measure: {0}")]
    MeasureAudit(String),

    #[error("conjugate gradient stopped after {iterations} iterations at relative residual {relative_residual:e}")]
    NotConverged { iterations: usize, relative_residual: f64, best: Box<DisplacementField> },

    #[error("linear program failed: {0}")]
    LinearProgram(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
