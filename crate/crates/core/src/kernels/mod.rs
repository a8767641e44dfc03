//! Transition kernels: the GGF distribution, the m-step random walk and exact
//! reference kernels.

mod ggf;
mod reference;
mod resolve;
mod walk;

pub use ggf::{
    codim2_resamples, ggf_density, ggf_log_density, ggf_sample, step_term, GgfParams, StepTerm,
};
pub use reference::{
    spider4_axis_cdf, spider4_density, star_source_density, star_source_log_density,
};
pub use resolve::{excess_degrees, log_resolution_factor, random_resolution, resolution_count};
pub use walk::{random_walk, walk_endpoint, WalkParams};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("the walk source must be fully resolved")]
    UnresolvedSource,
    #[error("dispersion {0} must be positive and finite")]
    BadDispersion(f64),
    #[error("a walk needs at least one step")]
    ZeroSteps,
    #[error("this kernel is defined for 4 taxa, got {0}")]
    NotFourTaxa(usize),
}
