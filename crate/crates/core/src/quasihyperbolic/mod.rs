//! Quasihyperbolic distance on a weighted lattice graph, the boundary-condition
//! exponent fit, and pasts and shadows of Whitney cubes.

mod beta;
mod graph;
mod shadows;

pub use beta::{estimate_qhbc_beta, fit_envelope, qhbc_samples, QhbcEstimate};
pub use graph::{Geodesic, QhGraph, QhTree};
pub use shadows::{shadow_scaling_fit, shadow_sum_check, shadows, ShadowRecord, ShadowScaling, Shadows};

use crate::error::Result;
use crate::geometry::{Domain, Point};

pub fn qh_distance(domain: &Domain, x: Point, y: Point, h_grid: f64) -> Result<f64> {
    QhGraph::new(domain, h_grid)?.distance(x, y)
}

pub fn qh_geodesic(domain: &Domain, x: Point, y: Point, h_grid: f64) -> Result<Geodesic> {
    QhGraph::new(domain, h_grid)?.geodesic(x, y)
}
