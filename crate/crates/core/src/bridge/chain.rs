//! Metropolis–Hastings sampling of bridges by partial resampling.

use rand::Rng;

use super::proposal::{check_ends, propose_independence, propose_segment, segment_log_q};
use super::{trunc_geom, BridgeError, BridgePath, ProposalTuning};
use crate::treespace::Tree;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ChainStats {
    pub proposed: u64,
    pub accepted: u64,
    /// Proposals discarded because some step was not simple.
    pub invalid: u64,
}

impl ChainStats {
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub accepted: bool,
    pub log_target: f64,
}

/// A bridge chain with fixed endpoints and dispersion.
#[derive(Clone, Debug)]
pub struct BridgeChain {
    path: BridgePath,
    t0: f64,
    tuning: ProposalTuning,
    log_target: f64,
    stats: ChainStats,
    init_attempts: usize,
}

impl BridgeChain {
    /// Starts from the first valid independence proposal.
    pub fn new(
        x0: &Tree,
        x_star: &Tree,
        t0: f64,
        m: usize,
        tuning: ProposalTuning,
        rng: &mut impl Rng,
    ) -> Result<Self, BridgeError> {
        tuning.validate()?;
        if m == 1 {
            check_ends(x0, x_star, 2)?;
            let path = BridgePath::new(vec![x0.clone(), x_star.clone()])
                .ok_or(BridgeError::InvalidDirectStep)?;
            return Ok(Self::from_path(path, t0, tuning));
        }
        for attempt in 1..=tuning.init_cap {
            if let Some((path, _)) = propose_independence(x0, x_star, t0, m, &tuning, rng)? {
                let mut chain = Self::from_path(path, t0, tuning);
                chain.init_attempts = attempt;
                return Ok(chain);
            }
        }
        Err(BridgeError::InitFailed {
            attempts: tuning.init_cap,
        })
    }

    pub fn from_path(path: BridgePath, t0: f64, tuning: ProposalTuning) -> Self {
        let log_target = path.log_target(t0);
        BridgeChain {
            path,
            t0,
            tuning,
            log_target,
            stats: ChainStats::default(),
            init_attempts: 0,
        }
    }

    pub fn path(&self) -> &BridgePath {
        &self.path
    }

    pub fn into_path(self) -> BridgePath {
        self.path
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn m(&self) -> usize {
        self.path.m()
    }

    pub fn log_target(&self) -> f64 {
        self.log_target
    }

    pub fn stats(&self) -> ChainStats {
        self.stats
    }

    /// Independence proposals needed to start the chain.
    pub fn init_attempts(&self) -> usize {
        self.init_attempts
    }

    /// Draws `(a, l)` and performs one partial-bridge update.
    pub fn step(&mut self, rng: &mut impl Rng) -> bool {
        let m = self.m();
        if m < 2 {
            return false;
        }
        let (a, l) = draw_segment(m, self.tuning.alpha_b, rng);
        self.step_with(a, l, rng)
    }

    /// Partial-bridge update of points `a+1 ..= a+l`, with `a + l <= m - 1`.
    pub fn step_with(&mut self, a: usize, l: usize, rng: &mut impl Rng) -> bool {
        self.tempered_step_with(a, l, 1.0, None, rng)
    }

    /// Partial update targeting `f^β q_ind^(1−β)`. `q_ind` holds the per-point
    /// independence log densities of the current path and is updated on acceptance.
    pub(crate) fn tempered_step_with(
        &mut self,
        a: usize,
        l: usize,
        beta: f64,
        q_ind: Option<&mut Vec<f64>>,
        rng: &mut impl Rng,
    ) -> bool {
        let m = self.m();
        debug_assert!(l >= 1 && a + l < m);
        self.stats.proposed += 1;
        let (t0, tuning) = (self.t0, self.tuning);
        let pts = self.path.points();
        let (start, end) = (&pts[a], &pts[a + l + 1]);
        let Some(seg) = propose_segment(start, end, l, t0, m, &tuning, rng) else {
            self.stats.invalid += 1;
            return false;
        };
        let old_q = segment_log_q(start, &pts[a + 1..=a + l], end, &self.path.terms()[a..], t0, m, &tuning);
        let tau = t0 / m as f64;
        let old_f: f64 = self.path.terms()[a..=a + l].iter().map(|s| s.log_density(tau)).sum();
        let new_f: f64 = seg.terms.iter().map(|s| s.log_density(tau)).sum();
        let mut log_a = beta * (new_f - old_f) + old_q - seg.log_q;
        let mut new_ind = Vec::new();
        if let Some(q) = q_ind.as_deref() {
            // The independence factors of points a+1 ..= min(a+l+1, m-1) change.
            new_ind = independence_factors(&self.path, a, &seg.points, t0, &tuning);
            let old_sum: f64 = q[a..a + new_ind.len()].iter().sum();
            let new_sum: f64 = new_ind.iter().sum();
            log_a += (1.0 - beta) * (new_sum - old_sum);
        }
        if !(log_a >= 0.0 || rng.random::<f64>().ln() < log_a) {
            return false;
        }
        if let Some(q) = q_ind {
            q[a..a + new_ind.len()].copy_from_slice(&new_ind);
        }
        self.log_target += new_f - old_f;
        self.path.splice(a, seg.points, seg.terms);
        self.stats.accepted += 1;
        true
    }

    /// Moves the source to `x0` and replaces the first `points.len()` interior points.
    pub(crate) fn reroot(&mut self, x0: Tree, points: Vec<Tree>, terms: Vec<crate::kernels::StepTerm>) {
        self.path.reroot(x0, points, terms);
        self.log_target = self.path.log_target(self.t0);
    }

    pub(crate) fn set_t0(&mut self, t0: f64) {
        self.t0 = t0;
        self.log_target = self.path.log_target(t0);
    }
}

/// `q_ind` log factors for points `a+1 ..= min(a+l+1, m-1)` after replacing
/// points `a+1 ..= a+l` by `new`. Index 0 of the result is point `a+1`.
fn independence_factors(
    path: &BridgePath,
    a: usize,
    new: &[Tree],
    t0: f64,
    tuning: &ProposalTuning,
) -> Vec<f64> {
    let m = path.m();
    let pts = path.points();
    let x_star = &pts[m];
    let last = (a + new.len() + 1).min(m - 1);
    let at = |j: usize| if j > a && j <= a + new.len() { &new[j - a - 1] } else { &pts[j] };
    (a + 1..=last)
        .map(|j| {
            super::step_log_q(at(j - 1), at(j), x_star, j, m, t0, m, tuning).unwrap_or(f64::NEG_INFINITY)
        })
        .collect()
}

/// Per-point independence log densities `ln q_j(y_j | y_{j-1})`, `j = 1..m-1`.
pub fn all_independence_factors(path: &BridgePath, t0: f64, tuning: &ProposalTuning) -> Vec<f64> {
    let m = path.m();
    let pts = path.points();
    (1..m)
        .map(|j| {
            super::step_log_q(&pts[j - 1], &pts[j], &pts[m], j, m, t0, m, tuning)
                .unwrap_or(f64::NEG_INFINITY)
        })
        .collect()
}

/// `l ~ TruncGeom(α)` on `1..=m-1`, then `a ~ U{0, …, m−l−1}`.
pub(crate) fn draw_segment(m: usize, alpha: f64, rng: &mut impl Rng) -> (usize, usize) {
    let l = trunc_geom(alpha, 1, m - 1, rng);
    let a = rng.random_range(0..m - l);
    (a, l)
}

/// Output of [`sample_bridges`].
#[derive(Clone, Debug)]
pub struct BridgeRun {
    pub samples: Vec<BridgePath>,
    pub trace: Vec<TraceRow>,
    pub stats: ChainStats,
    pub init_attempts: usize,
}

/// Runs `iters` updates in total, keeping every `thin`-th state after the first `burnin`.
#[allow(clippy::too_many_arguments)]
pub fn sample_bridges(
    x0: &Tree,
    x_star: &Tree,
    t0: f64,
    m: usize,
    tuning: ProposalTuning,
    iters: usize,
    burnin: usize,
    thin: usize,
    rng: &mut impl Rng,
) -> Result<BridgeRun, BridgeError> {
    let mut chain = BridgeChain::new(x0, x_star, t0, m, tuning, rng)?;
    let thin = thin.max(1);
    let mut samples = Vec::with_capacity(iters.saturating_sub(burnin) / thin);
    let mut trace = Vec::with_capacity(iters);
    for it in 0..iters {
        let accepted = chain.step(rng);
        debug_assert!(chain.log_target().is_finite());
        trace.push(TraceRow {
            iter: it + 1,
            accepted,
            log_target: chain.log_target(),
        });
        if it >= burnin && (it + 1 - burnin).is_multiple_of(thin) {
            samples.push(chain.path().clone());
        }
    }
    Ok(BridgeRun {
        samples,
        trace,
        stats: chain.stats(),
        init_attempts: chain.init_attempts(),
    })
}
