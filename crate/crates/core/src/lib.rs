//! Integer points on rational quadrics and their approximation of boundary
//! directions: exact forms and hyperbolic bases, cusp enumeration,
//! horospherical coordinates and volumes, and `O(Q)` decompositions.

pub mod approx;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod forms;
pub mod geometry;
pub mod group_dyn;
mod hp;
pub mod lattice_points;
mod quadrature;
pub mod rng;

pub use error::{Error, Result};
pub use exec::Execution;
pub use hp::GUARD_BAND;
