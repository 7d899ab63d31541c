//! Edge dislocations on a triangular lattice: discrete elastic energy with
//! integer slip fields, a relaxation solver, continuum reference fields and
//! numerical checks of the logarithmic energy scaling.
//!
//! ```
//! use trislip::{ConvexPolygon, LatticeComplex};
//!
//! let domain = ConvexPolygon::square(1.0).unwrap();
//! let complex = LatticeComplex::build(domain, 0.125).unwrap();
//! assert!(complex.topology().is_valid());
//! ```

pub mod continuum;
pub mod degeneracies;
pub mod energy;
pub mod error;
pub mod experiment;
pub mod fields;
pub mod lattice;
pub mod measures;
pub mod multigrid;
pub mod recovery;
pub mod solver;
pub mod sparse;

pub use continuum::{beta_singular, phi, predicted_limit, psi, BurgersVector};
pub use energy::{energy, energy_split, EnergySplit, Region};
pub use error::{Error, Result};
pub use fields::{dislocation_measure, DislocationMeasure, DisplacementField, SlipField};
pub use lattice::{ConvexPolygon, DomainSpec, LatticeComplex, LatticeVector, NodeId, TriangleId};
pub use measures::{flat_norm, AtomicMeasure, FlatNorm, FlatNormOptions};
pub use recovery::{build_recovery_pair, RecoveryPair};
pub use solver::{compute_f_of_mu, minimize_displacement, Minimum, SolverOptions};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/lattice.md")]
    mod lattice {}
    #[doc = include_str!("../../../book/src/fields.md")]
    mod fields {}
    #[doc = include_str!("../../../book/src/energy.md")]
    mod energy {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/continuum.md")]
    mod continuum {}
    #[doc = include_str!("../../../book/src/recovery.md")]
    mod recovery {}
    #[doc = include_str!("../../../book/src/measures.md")]
    mod measures {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
