//! Integer-flux vector fields on the unit ball: flux quadrature, cubic
//! decompositions, regularization by harmonic and radial extension, and
//! minimal connections between point singularities.

pub mod asymptotics;
pub mod connection;
pub mod decomp;
pub mod error;
pub mod field;
pub mod flux;
pub mod geometry;
pub mod quadrature;
pub mod regularize;
pub mod solver;

pub use error::{Error, Result};
pub use field::{Singularity, VectorField};
pub use geometry::{Aabb, Cube, Vec3};
pub use quadrature::QuadratureSpec;
