//! Random-walk bridges: paths of the m-step GGF walk with both endpoints fixed.
//!
//! Proposals mimic the Euclidean Brownian bridge: each point is a GGF
//! perturbation of a point part-way along the geodesic to the target, mixed
//! with a plain walk step so the proposal covers every valid path. A penalty
//! budget lets the proposal take larger steps before high-codimension
//! singularities so that enough steps remain to wind around them.

mod chain;
mod proposal;

pub(crate) use chain::draw_segment;
pub use chain::{all_independence_factors, sample_bridges, BridgeChain, BridgeRun, ChainStats, TraceRow};
pub use proposal::{
    independence_log_q, propose_independence, propose_partial, propose_segment, segment_log_q,
    step_log_q, Segment,
};

use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::geodesic::Geodesic;
use crate::kernels::StepTerm;
use crate::treespace::Tree;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BridgeError {
    #[error("bridge source must be fully resolved")]
    UnresolvedSource,
    #[error("bridge target must be fully resolved")]
    UnresolvedTarget,
    #[error("need m >= {min}, got {m}")]
    TooFewSteps { m: usize, min: usize },
    #[error("index out of range: a = {a}, l = {l}, m = {m}")]
    BadSegment { a: usize, l: usize, m: usize },
    #[error("interior index j = {j} outside 1..={max}")]
    BadIndex { j: usize, max: usize },
    #[error("no valid bridge after {attempts} independence proposals")]
    InitFailed { attempts: usize },
    #[error("bridge endpoints use different taxon sets")]
    TaxaMismatch,
    #[error("direct step from source to target is not simple")]
    InvalidDirectStep,
    #[error("alpha must lie in (0, 1), got {0}")]
    BadAlpha(f64),
}

/// Penalty function selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PenaltyKind {
    /// Sum of codimensions of the orthants of codimension above 1 traversed.
    CodimSum,
    /// No step budget.
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProposalTuning {
    /// Parameter of the truncated geometric law for partial-bridge lengths.
    pub alpha_b: f64,
    pub penalty: PenaltyKind,
    /// Lower bound on the mixture weight of the geodesic-guided component.
    pub weight_floor: f64,
    /// Attempts allowed when starting a chain from independence proposals.
    pub init_cap: usize,
}

impl Default for ProposalTuning {
    fn default() -> Self {
        ProposalTuning {
            alpha_b: 0.2,
            penalty: PenaltyKind::CodimSum,
            weight_floor: 1e-3,
            init_cap: 100_000,
        }
    }
}

impl ProposalTuning {
    pub fn validate(&self) -> Result<(), BridgeError> {
        if !(self.alpha_b > 0.0 && self.alpha_b < 1.0) {
            return Err(BridgeError::BadAlpha(self.alpha_b));
        }
        Ok(())
    }
}

/// A valid walk path `y_0, ..., y_m` with the density terms of each step cached.
#[derive(Clone, Debug)]
pub struct BridgePath {
    points: Vec<Tree>,
    terms: Vec<StepTerm>,
}

impl BridgePath {
    /// Builds a path, returning `None` if some step's geodesic is not simple.
    pub fn new(points: Vec<Tree>) -> Option<Self> {
        let terms = points
            .windows(2)
            .map(|w| crate::kernels::step_term(&w[1], &w[0]))
            .collect::<Option<Vec<_>>>()?;
        Some(BridgePath { points, terms })
    }

    pub(crate) fn from_parts(points: Vec<Tree>, terms: Vec<StepTerm>) -> Self {
        debug_assert_eq!(points.len(), terms.len() + 1);
        BridgePath { points, terms }
    }

    pub fn points(&self) -> &[Tree] {
        &self.points
    }

    /// Step terms; entry `j - 1` belongs to the step `y_{j-1} -> y_j`.
    pub fn terms(&self) -> &[StepTerm] {
        &self.terms
    }

    pub fn m(&self) -> usize {
        self.terms.len()
    }

    pub fn source(&self) -> &Tree {
        &self.points[0]
    }

    pub fn target(&self) -> &Tree {
        &self.points[self.points.len() - 1]
    }

    /// `Σ_j ln f_GGF(y_j | y_{j-1}, t0/m)`.
    pub fn log_target(&self, t0: f64) -> f64 {
        let tau = t0 / self.m() as f64;
        self.terms.iter().map(|s| s.log_density(tau)).sum()
    }

    /// Recomputes every step term from the points; true if they all match the cache.
    pub fn check(&self) -> bool {
        match BridgePath::new(self.points.clone()) {
            Some(p) => p
                .terms
                .iter()
                .zip(&self.terms)
                .all(|(a, b)| a.nu == b.nu && (a.d2 - b.d2).abs() <= 1e-9 * (1.0 + a.d2)),
            None => false,
        }
    }

    pub(crate) fn splice(&mut self, a: usize, new_points: Vec<Tree>, new_terms: Vec<StepTerm>) {
        let l = new_points.len();
        debug_assert_eq!(new_terms.len(), l + 1);
        self.points.splice(a + 1..a + 1 + l, new_points);
        self.terms.splice(a..a + l + 1, new_terms);
    }

    pub(crate) fn reroot(&mut self, x0: Tree, new_points: Vec<Tree>, new_terms: Vec<StepTerm>) {
        self.points[0] = x0;
        self.splice(0, new_points, new_terms);
    }
}

/// `τ_{j,m} = ((m − j)/(m − j + 1)) (t0/m)` for interior index `1 <= j <= m − 1`.
pub fn schedule_variance(j: usize, m: usize, t0: f64) -> Result<f64, BridgeError> {
    if j == 0 || j >= m {
        return Err(BridgeError::BadIndex {
            j,
            max: m.saturating_sub(1),
        });
    }
    Ok(schedule(j, m, m, t0))
}

/// Variance for local step `jj` of a segment of horizon `horizon`, walk length `m`.
pub(crate) fn schedule(jj: usize, horizon: usize, m: usize, t0: f64) -> f64 {
    let r = (horizon - jj) as f64;
    r / (r + 1.0) * t0 / m as f64
}

/// `max{F_χ²(d(μ, 0)²/τ; N−3), floor}`, capped at `1 − floor` so the plain
/// walk component keeps weight and the proposal reaches every walk.
pub fn mixture_weight(mu: &Tree, tau: f64, floor: f64) -> f64 {
    let k = mu.max_edges() as f64;
    let f = ChiSquared::new(k).unwrap().cdf(mu.norm_sq() / tau);
    f.max(floor).min(1.0 - floor)
}

/// `f_p(Γ)`: sum of codimensions of the orthants of codimension above 1 traversed.
pub fn penalty(g: &Geodesic) -> usize {
    g.classify().penalty()
}

/// Draw from `P(k) ∝ (1 − α)^(k − lo)` on `lo..=hi`.
pub fn trunc_geom(alpha: f64, lo: usize, hi: usize, rng: &mut impl Rng) -> usize {
    let q = 1.0 - alpha;
    let total: f64 = (0..=hi - lo).map(|i| q.powi(i as i32)).sum();
    let mut u = rng.random::<f64>() * total;
    for k in lo..=hi {
        let w = q.powi((k - lo) as i32);
        if u < w {
            return k;
        }
        u -= w;
    }
    hi
}
