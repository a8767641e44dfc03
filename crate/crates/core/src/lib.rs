//! Brownian motion on BHV tree space: random-walk kernels, bridge sampling,
//! posterior inference for the source tree and dispersion, and marginal
//! likelihood estimation.

pub mod bridge;
pub mod evidence;
pub mod fixtures;
pub mod geodesic;
pub mod posterior;
pub mod kernels;
pub mod rng;
pub mod stats;
pub mod treespace;

pub use treespace::{Split, TaxonSet, Topology, Tree, TreeError};
