//! Weighted H-colorings of the even discrete torus `Z_m^d`.
//!
//! The crate covers the extremal structure of a constraint graph
//! ([`constraint_graph`]), torus geometry ([`torus`]), exact counting and
//! marginals ([`exact`]), the finite combinatorial identities behind the
//! ideal-edge bound ([`proof_quantities`]), Glauber dynamics with phase
//! classification ([`sampler`]) and the occupation / conjecture predictors
//! ([`analysis`]). Instance descriptors and file formats live in
//! [`instance`].

pub mod analysis;
pub mod constraint_graph;
pub mod error;
pub mod exact;
pub mod instance;
pub mod proof_quantities;
pub mod sampler;
pub mod torus;

pub use analysis::{Equipartition, Relation};
pub use constraint_graph::{
    blowup, eta_and_maximal_pairs, support_family, Blowup, ColorSet, ConstraintGraph, Extremal,
    MaximalPair, WeightSet,
};
pub use error::{Error, Result};
pub use exact::{Budget, Coloring, Domains, Method, PartitionFunctionResult};
pub use proof_quantities::ColorSetTuple;
pub use sampler::{ChainConfig, Initializer, PhaseKind, PhaseLabel, Thresholds};
pub use torus::{Side, TorusGraph};
