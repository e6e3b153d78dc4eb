//! Numerical laboratory for localized fractional Sobolev-Poincaré inequalities
//! on planar domains with cusps and mushroom-shaped protrusions.

pub mod capacity;
pub mod chains;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod exponents;
pub mod fit;
pub mod geometry;
pub mod quasihyperbolic;
pub mod seminorm;
pub mod whitney;

pub use error::{Error, Result};
pub use exponents::{ExponentParams, GeometryExponents};
pub use geometry::{Domain, MushroomSpec, NodeSet, Point};
