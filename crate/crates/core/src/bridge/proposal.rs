//! The mixture proposal for a run of consecutive bridge points.

use rand::Rng;

use super::{mixture_weight, schedule, BridgeError, BridgePath, PenaltyKind, ProposalTuning};
use crate::geodesic::geodesic;
use crate::kernels::{ggf_sample, step_term, StepTerm};
use crate::stats::log_add_exp;
use crate::treespace::Tree;

/// Freshly proposed interior points with their step terms and proposal density.
#[derive(Clone, Debug)]
pub struct Segment {
    pub points: Vec<Tree>,
    /// One term per step, including the last step into the fixed end point.
    pub terms: Vec<StepTerm>,
    pub log_q: f64,
}

/// Mixture parameters for one proposed point.
struct Plan {
    mu: Tree,
    tau: f64,
    w: f64,
}

fn plan(prev: &Tree, end: &Tree, jj: usize, horizon: usize, m: usize, t0: f64, tuning: &ProposalTuning) -> Plan {
    let g = geodesic(prev, end).expect("bridge trees share a taxon set");
    let remaining = horizon - jj;
    let mut p = match tuning.penalty {
        PenaltyKind::CodimSum => g.classify().penalty(),
        PenaltyKind::Zero => 0,
    };
    if p + 1 >= remaining {
        p = 0;
    }
    let h = remaining + 1 - p;
    debug_assert!(h >= 2);
    let frac = 1.0 / h as f64;
    let mu = match g.nearest_high_codim_point(frac) {
        Some((_, point)) => point,
        None => g.point(frac),
    };
    let tau = schedule(jj, horizon, m, t0);
    let w = mixture_weight(&mu, tau, tuning.weight_floor);
    Plan { mu, tau, w }
}

/// `ln q` of `y` given the plan; `walk` is the plain step term `prev -> y`.
fn mix_log_density(y: &Tree, pl: &Plan, walk: &StepTerm, t_step: f64) -> f64 {
    let plain = (1.0 - pl.w).ln() + walk.log_density(t_step);
    match step_term(y, &pl.mu) {
        Some(s) => log_add_exp(pl.w.ln() + s.log_density(pl.tau), plain),
        None => plain,
    }
}

/// Log proposal density of point `jj` (1-based, local to a segment of horizon
/// `horizon`) given its predecessor, or `None` if the step `prev -> y` is invalid.
#[allow(clippy::too_many_arguments)]
pub fn step_log_q(
    prev: &Tree,
    y: &Tree,
    end: &Tree,
    jj: usize,
    horizon: usize,
    t0: f64,
    m: usize,
    tuning: &ProposalTuning,
) -> Option<f64> {
    let walk = step_term(y, prev)?;
    let pl = plan(prev, end, jj, horizon, m, t0, tuning);
    Some(mix_log_density(y, &pl, &walk, t0 / m as f64))
}

/// Proposes `l` points bridging `start` to `end` over `l + 1` steps of a walk of
/// length `m`. `None` if some step, including the last into `end`, is not simple.
pub fn propose_segment(
    start: &Tree,
    end: &Tree,
    l: usize,
    t0: f64,
    m: usize,
    tuning: &ProposalTuning,
    rng: &mut impl Rng,
) -> Option<Segment> {
    let horizon = l + 1;
    let t_step = t0 / m as f64;
    let mut points: Vec<Tree> = Vec::with_capacity(l);
    let mut terms = Vec::with_capacity(l + 1);
    let mut log_q = 0.0;
    for jj in 1..=l {
        let prev = points.last().unwrap_or(start);
        let pl = plan(prev, end, jj, horizon, m, t0, tuning);
        let y = if rng.random::<f64>() < pl.w {
            ggf_sample(&pl.mu, pl.tau, rng)
        } else {
            ggf_sample(prev, t_step, rng)
        };
        let walk = step_term(&y, prev)?;
        log_q += mix_log_density(&y, &pl, &walk, t_step);
        terms.push(walk);
        points.push(y);
    }
    terms.push(step_term(end, points.last().unwrap_or(start))?);
    Some(Segment { points, terms, log_q })
}

/// Log density of proposing `points` by [`propose_segment`]. `terms[k]` must be
/// the step term `points[k-1] -> points[k]` (with `points[-1] = start`).
pub fn segment_log_q(
    start: &Tree,
    points: &[Tree],
    end: &Tree,
    terms: &[StepTerm],
    t0: f64,
    m: usize,
    tuning: &ProposalTuning,
) -> f64 {
    let horizon = points.len() + 1;
    let t_step = t0 / m as f64;
    let mut prev = start;
    let mut total = 0.0;
    for (k, y) in points.iter().enumerate() {
        let pl = plan(prev, end, k + 1, horizon, m, t0, tuning);
        total += mix_log_density(y, &pl, &terms[k], t_step);
        prev = y;
    }
    total
}

/// A full independence proposal from `x0` to `x_star`, with its log density.
pub fn propose_independence(
    x0: &Tree,
    x_star: &Tree,
    t0: f64,
    m: usize,
    tuning: &ProposalTuning,
    rng: &mut impl Rng,
) -> Result<Option<(BridgePath, f64)>, BridgeError> {
    check_ends(x0, x_star, m)?;
    Ok(propose_segment(x0, x_star, m - 1, t0, m, tuning, rng).map(|seg| {
        let mut points = Vec::with_capacity(m + 1);
        points.push(x0.clone());
        points.extend(seg.points);
        points.push(x_star.clone());
        (BridgePath::from_parts(points, seg.terms), seg.log_q)
    }))
}

/// Log independence-proposal density of an existing path.
pub fn independence_log_q(path: &BridgePath, t0: f64, tuning: &ProposalTuning) -> f64 {
    let m = path.m();
    let pts = path.points();
    segment_log_q(&pts[0], &pts[1..m], &pts[m], path.terms(), t0, m, tuning)
}

/// A proposal replacing points `a+1 ..= a+l` of `current`, together with
/// `ln Q_part = ln q(old) − ln q(new)`. `None` when the proposal is rejected outright.
pub fn propose_partial(
    current: &BridgePath,
    a: usize,
    l: usize,
    t0: f64,
    tuning: &ProposalTuning,
    rng: &mut impl Rng,
) -> Result<Option<(BridgePath, f64)>, BridgeError> {
    let m = current.m();
    if l == 0 || a + l > m.saturating_sub(1) {
        return Err(BridgeError::BadSegment { a, l, m });
    }
    let pts = current.points();
    let (start, end) = (&pts[a], &pts[a + l + 1]);
    let Some(seg) = propose_segment(start, end, l, t0, m, tuning, rng) else {
        return Ok(None);
    };
    let old = segment_log_q(start, &pts[a + 1..=a + l], end, &current.terms()[a..], t0, m, tuning);
    let mut next = current.clone();
    let log_ratio = old - seg.log_q;
    next.splice(a, seg.points, seg.terms);
    Ok(Some((next, log_ratio)))
}

pub(crate) fn check_ends(x0: &Tree, x_star: &Tree, m: usize) -> Result<(), BridgeError> {
    if !x0.taxa().same_as(x_star.taxa()) {
        return Err(BridgeError::TaxaMismatch);
    }
    if !x0.is_resolved() {
        return Err(BridgeError::UnresolvedSource);
    }
    if !x_star.is_resolved() {
        return Err(BridgeError::UnresolvedTarget);
    }
    if m < 2 {
        return Err(BridgeError::TooFewSteps { m, min: 2 });
    }
    Ok(())
}
