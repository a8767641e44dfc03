//! Bayesian inference of the source tree and dispersion from a sample of trees.
//!
//! The state augments `(x0, t0)` with one latent walk path per datum. A sweep
//! updates every path by partial resampling, then `x0` jointly with the head of
//! every path, then `t0` with the paths held fixed.

mod sampler;

pub use sampler::{
    initialize, run_inference, run_inference_with, suggest_m, AcceptanceSummary, Counter,
    InferenceState, PosteriorTrace, Sampler, TraceRow,
};

use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::bridge::{BridgeError, ProposalTuning};
use crate::treespace::Tree;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PosteriorError {
    #[error("no data")]
    EmptyData,
    #[error("datum {index} is not fully resolved")]
    UnresolvedDatum { index: usize },
    #[error("datum {index} uses a different taxon set")]
    TaxaMismatch { index: usize },
    #[error("dispersion must be positive and finite, got {0}")]
    BadDispersion(f64),
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("bridge for datum {index}: {source}")]
    Bridge { index: usize, source: BridgeError },
}

/// Prior on `(x0, t0)`: uniform over topologies, `d(0, x0)² ~ Ga(1/2, 3.3175/D²)`
/// and `t0 ~ Exp(4.61 (N − 3)/D²)`, with `D² = N/4`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prior {
    pub n_taxa: usize,
    pub d2: f64,
    pub gamma_rate: f64,
    pub exp_rate: f64,
}

impl Prior {
    pub fn new(n_taxa: usize) -> Self {
        let d2 = n_taxa as f64 / 4.0;
        Prior {
            n_taxa,
            d2,
            gamma_rate: 3.3175 / d2,
            exp_rate: 4.61 * (n_taxa as f64 - 3.0) / d2,
        }
    }

    /// Log Gamma(1/2, rate) density of `s = d(0, x0)²`.
    pub fn log_d2(&self, s: f64) -> f64 {
        0.5 * self.gamma_rate.ln() - ln_gamma(0.5) - 0.5 * s.ln() - self.gamma_rate * s
    }

    /// Log density of `x0` with respect to volume on tree space, up to a constant.
    /// With `k = N − 3` the radial factor `s^((k−2)/2)` is divided out so that
    /// `d(0, x0)²` has exactly the Gamma law.
    pub fn log_x0(&self, x0: &Tree) -> f64 {
        let s = x0.norm_sq();
        let k = self.n_taxa as f64 - 3.0;
        self.log_d2(s) - 0.5 * (k - 2.0) * s.ln()
    }

    pub fn log_t0(&self, t0: f64) -> f64 {
        self.exp_rate.ln() - self.exp_rate * t0
    }
}

/// `ln π(x0, t0)` up to the constant topology factor.
pub fn log_prior(x0: &Tree, t0: f64, prior: &Prior) -> Result<f64, PosteriorError> {
    if !(t0 > 0.0 && t0.is_finite()) {
        return Err(PosteriorError::BadDispersion(t0));
    }
    Ok(prior.log_x0(x0) + prior.log_t0(t0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct InferenceConfig {
    pub m: usize,
    /// Total sweeps, burn-in included.
    pub iters: usize,
    pub burnin: usize,
    pub thin: usize,
    pub alpha_b: f64,
    pub alpha_0: f64,
    pub lambda0: f64,
    pub sigma0: f64,
    pub seed: u64,
    pub frechet_iters: usize,
    pub init_cap: usize,
    /// Dispersion proposals outside `[t0_min, t0_max]` are rejected.
    pub t0_min: f64,
    pub t0_max: f64,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        InferenceConfig {
            m: 50,
            iters: 10_000,
            burnin: 1_000,
            thin: 10,
            alpha_b: 0.2,
            alpha_0: 0.9,
            lambda0: 0.002,
            sigma0: 0.1,
            seed: 1,
            frechet_iters: 200,
            init_cap: 100_000,
            t0_min: 1e-12,
            t0_max: 1e3,
        }
    }
}

/// Smallest initial dispersion.
pub const T0_INIT_FLOOR: f64 = 1e-6;

impl InferenceConfig {
    pub fn validate(&self) -> Result<(), PosteriorError> {
        let bad = |s: &str| Err(PosteriorError::BadConfig(s.to_string()));
        if self.m < 2 {
            return bad("m must be at least 2");
        }
        if self.thin == 0 {
            return bad("thin must be positive");
        }
        if self.burnin > self.iters {
            return bad("burnin exceeds iters");
        }
        for (name, a) in [("alpha_b", self.alpha_b), ("alpha_0", self.alpha_0)] {
            if !(a > 0.0 && a < 1.0) {
                return Err(PosteriorError::BadConfig(format!("{name} must lie in (0, 1)")));
            }
        }
        if !(self.lambda0 > 0.0 && self.lambda0.is_finite()) {
            return bad("lambda0 must be positive");
        }
        if !(self.sigma0 > 0.0 && self.sigma0.is_finite()) {
            return bad("sigma0 must be positive");
        }
        if self.frechet_iters == 0 || self.init_cap == 0 {
            return bad("frechet_iters and init_cap must be positive");
        }
        if !(self.t0_min > 0.0 && self.t0_min < self.t0_max) {
            return bad("need 0 < t0_min < t0_max");
        }
        Ok(())
    }

    pub fn tuning(&self) -> ProposalTuning {
        ProposalTuning {
            alpha_b: self.alpha_b,
            init_cap: self.init_cap,
            ..ProposalTuning::default()
        }
    }
}

#[cfg(test)]
mod tests;
