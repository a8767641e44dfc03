use std::collections::HashMap;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use super::{log_prior, InferenceConfig, PosteriorError, Prior, T0_INIT_FLOOR};
use crate::bridge::{
    draw_segment, propose_segment, segment_log_q, trunc_geom, BridgeChain, BridgePath,
    ProposalTuning,
};
use crate::geodesic::{distance, frechet_mean};
use crate::kernels::{ggf_sample, step_term, walk_endpoint, StepTerm, WalkParams};
use crate::rng::{stream, tag, Rng};
use crate::stats::quantile;
use crate::treespace::{Topology, Tree};

/// Source, dispersion and one latent path per datum.
#[derive(Clone, Debug)]
pub struct InferenceState {
    x0: Tree,
    t0: f64,
    chains: Vec<BridgeChain>,
    log_joint: f64,
}

impl InferenceState {
    pub fn x0(&self) -> &Tree {
        &self.x0
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn n_data(&self) -> usize {
        self.chains.len()
    }

    pub fn bridges(&self) -> impl Iterator<Item = &BridgePath> {
        self.chains.iter().map(|c| c.path())
    }

    /// Incrementally maintained `ln π(x0, t0) + Σ_i Σ_j ln f_GGF(y_ij | y_i,j−1, t0/m)`.
    pub fn log_joint(&self) -> f64 {
        self.log_joint
    }

    /// The log joint recomputed from the trees alone; `-inf` if some path is invalid.
    pub fn recompute_log_joint(&self, prior: &Prior) -> f64 {
        let mut total = log_prior(&self.x0, self.t0, prior).unwrap_or(f64::NAN);
        for c in &self.chains {
            match BridgePath::new(c.path().points().to_vec()) {
                Some(p) => total += p.log_target(self.t0),
                None => return f64::NEG_INFINITY,
            }
        }
        total
    }

    /// Every path starts at `x0`, is valid, and the log joint matches a recomputation.
    pub fn check(&self, prior: &Prior, tol: f64) -> bool {
        let fresh = self.recompute_log_joint(prior);
        self.chains
            .iter()
            .all(|c| c.path().source().edges() == self.x0.edges())
            && fresh.is_finite()
            && (fresh - self.log_joint).abs() <= tol * (1.0 + fresh.abs())
    }
}

fn check_data(data: &[Tree]) -> Result<(), PosteriorError> {
    let first = data.first().ok_or(PosteriorError::EmptyData)?;
    for (index, x) in data.iter().enumerate() {
        if !x.taxa().same_as(first.taxa()) {
            return Err(PosteriorError::TaxaMismatch { index });
        }
        if !x.is_resolved() {
            return Err(PosteriorError::UnresolvedDatum { index });
        }
    }
    Ok(())
}

/// Starts at the datum closest to an approximate Fréchet mean, with `t0` the
/// Fréchet variance there, and independence-proposal paths.
pub fn initialize(
    data: &[Tree],
    prior: &Prior,
    config: &InferenceConfig,
) -> Result<InferenceState, PosteriorError> {
    config.validate()?;
    check_data(data)?;
    let mut rng = stream(config.seed, &[tag::FRECHET]);
    let fm = frechet_mean(data, config.frechet_iters, &mut rng).expect("data checked");
    let mut best = (f64::INFINITY, 0);
    for (i, x) in data.iter().enumerate() {
        let d = distance(x, &fm.mean).expect("data checked");
        if d < best.0 {
            best = (d, i);
        }
    }
    let x0 = data[best.1].clone();
    let t0 = fm.variance.max(T0_INIT_FLOOR);
    let tuning = config.tuning();
    let mut chains = Vec::with_capacity(data.len());
    for (index, x) in data.iter().enumerate() {
        let mut r = stream(config.seed, &[tag::INIT, index as u64]);
        let chain = BridgeChain::new(&x0, x, t0, config.m, tuning, &mut r)
            .map_err(|source| PosteriorError::Bridge { index, source })?;
        chains.push(chain);
    }
    let mut state = InferenceState {
        x0,
        t0,
        chains,
        log_joint: 0.0,
    };
    state.log_joint = state.recompute_log_joint(prior);
    Ok(state)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counter {
    pub proposed: u64,
    pub accepted: u64,
}

impl Counter {
    pub fn rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    fn note(&mut self, accepted: bool) {
        self.proposed += 1;
        self.accepted += accepted as u64;
    }
}

/// Acceptance counts per proposal type; bridge counts are per datum update.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AcceptanceSummary {
    pub bridge: Counter,
    pub x0: Counter,
    pub t0: Counter,
    /// Dispersion proposals rejected for leaving `[t0_min, t0_max]`.
    pub t0_guard_hits: u64,
}

/// Metropolis-within-Gibbs sampler over `(paths, x0, t0)`.
pub struct Sampler {
    state: InferenceState,
    prior: Prior,
    config: InferenceConfig,
    tuning: ProposalTuning,
    data_rngs: Vec<Rng>,
    seg_rng: Rng,
    source_rng: Rng,
    disp_rng: Rng,
    acc: AcceptanceSummary,
}

impl Sampler {
    pub fn new(state: InferenceState, prior: Prior, config: InferenceConfig) -> Self {
        let seed = config.seed;
        let data_rngs = (0..state.n_data())
            .map(|i| stream(seed, &[tag::BRIDGE, i as u64]))
            .collect();
        Sampler {
            tuning: config.tuning(),
            state,
            prior,
            data_rngs,
            seg_rng: stream(seed, &[tag::BRIDGE]),
            source_rng: stream(seed, &[tag::SOURCE]),
            disp_rng: stream(seed, &[tag::DISPERSION]),
            config,
            acc: AcceptanceSummary::default(),
        }
    }

    pub fn state(&self) -> &InferenceState {
        &self.state
    }

    pub fn acceptance(&self) -> AcceptanceSummary {
        self.acc
    }

    pub fn sweep(&mut self) {
        self.step_bridges();
        self.step_x0();
        self.step_t0();
    }

    /// One shared `(a, l)`; every path gets its own accept/reject.
    pub fn step_bridges(&mut self) {
        let m = self.config.m;
        let (a, l) = draw_segment(m, self.config.alpha_b, &mut self.seg_rng);
        for (chain, r) in self.state.chains.iter_mut().zip(&mut self.data_rngs) {
            let before = chain.log_target();
            let ok = chain.step_with(a, l, r);
            self.state.log_joint += chain.log_target() - before;
            self.acc.bridge.note(ok);
        }
    }

    /// Proposes `x0* ~ GGF(x0, λ0²)` and, for `l > 0`, new first `l` points on
    /// every path; one joint accept/reject.
    pub fn step_x0(&mut self) -> bool {
        let ok = self.try_x0();
        self.acc.x0.note(ok);
        ok
    }

    fn try_x0(&mut self) -> bool {
        let (m, t0) = (self.config.m, self.state.t0);
        let tau = t0 / m as f64;
        let l = trunc_geom(self.config.alpha_0, 0, m - 1, &mut self.source_rng);
        let lambda2 = self.config.lambda0 * self.config.lambda0;
        let x_new = loop {
            let c = ggf_sample(&self.state.x0, lambda2, &mut self.source_rng);
            if c.is_resolved() {
                break c;
            }
        };
        let mut d_target = self.prior.log_x0(&x_new) - self.prior.log_x0(&self.state.x0);
        let mut d_q = 0.0;
        let mut moves: Vec<(Vec<Tree>, Vec<StepTerm>)> = Vec::with_capacity(self.state.n_data());
        for (chain, r) in self.state.chains.iter().zip(&mut self.data_rngs) {
            let p = chain.path();
            let pts = p.points();
            let end = &pts[l + 1];
            let old_f: f64 = p.terms()[..=l].iter().map(|s| s.log_density(tau)).sum();
            if l == 0 {
                let Some(term) = step_term(end, &x_new) else {
                    return false;
                };
                d_target += term.log_density(tau) - old_f;
                moves.push((Vec::new(), vec![term]));
            } else {
                let Some(seg) = propose_segment(&x_new, end, l, t0, m, &self.tuning, r) else {
                    return false;
                };
                let old_q = segment_log_q(&self.state.x0, &pts[1..=l], end, p.terms(), t0, m, &self.tuning);
                let new_f: f64 = seg.terms.iter().map(|s| s.log_density(tau)).sum();
                d_target += new_f - old_f;
                d_q += old_q - seg.log_q;
                moves.push((seg.points, seg.terms));
            }
        }
        let log_a = d_target + d_q;
        if !(log_a >= 0.0 || self.source_rng.random::<f64>().ln() < log_a) {
            return false;
        }
        for (chain, (pts, terms)) in self.state.chains.iter_mut().zip(moves) {
            chain.reroot(x_new.clone(), pts, terms);
        }
        self.state.x0 = x_new;
        self.state.log_joint += d_target;
        true
    }

    /// Log-normal random walk on `t0`, paths held fixed.
    pub fn step_t0(&mut self) -> bool {
        let ok = self.try_t0();
        self.acc.t0.note(ok);
        ok
    }

    fn try_t0(&mut self) -> bool {
        let t0 = self.state.t0;
        let z: f64 = StandardNormal.sample(&mut self.disp_rng);
        let t_new = t0 * (self.config.sigma0 * z).exp();
        if !(t_new >= self.config.t0_min && t_new <= self.config.t0_max) {
            self.acc.t0_guard_hits += 1;
            return false;
        }
        let m = self.config.m as f64;
        let (old_tau, new_tau) = (t0 / m, t_new / m);
        let mut d_target = self.prior.log_t0(t_new) - self.prior.log_t0(t0);
        for c in &self.state.chains {
            for s in c.path().terms() {
                d_target += s.log_density(new_tau) - s.log_density(old_tau);
            }
        }
        let log_a = d_target + (t_new / t0).ln();
        if !(log_a >= 0.0 || self.disp_rng.random::<f64>().ln() < log_a) {
            return false;
        }
        for c in &mut self.state.chains {
            c.set_t0(t_new);
        }
        self.state.t0 = t_new;
        self.state.log_joint += d_target;
        true
    }
}

/// One thinned posterior draw.
#[derive(Clone, Debug)]
pub struct TraceRow {
    pub iter: usize,
    pub t0: f64,
    pub log_joint: f64,
    pub x0: Tree,
}

#[derive(Clone, Debug)]
pub struct PosteriorTrace {
    pub rows: Vec<TraceRow>,
    pub t0_samples: Vec<f64>,
    pub acceptance: AcceptanceSummary,
    /// Topologies of the thinned `x0` draws, most frequent first.
    pub topologies: Vec<(Topology, usize)>,
    pub init_x0: Tree,
    pub init_t0: f64,
    pub init_log_joint: f64,
}

impl PosteriorTrace {
    pub fn n_samples(&self) -> usize {
        self.t0_samples.len()
    }

    pub fn modal_topology(&self) -> Option<&Topology> {
        self.topologies.first().map(|(t, _)| t)
    }

    /// Posterior probability of the topology.
    pub fn topology_frequency(&self, t: &Topology) -> f64 {
        let n = self.n_samples();
        if n == 0 {
            return 0.0;
        }
        self.topologies
            .iter()
            .find(|(u, _)| u == t)
            .map_or(0.0, |&(_, c)| c as f64 / n as f64)
    }

    /// Central credible interval for `t0` at the given level.
    pub fn t0_interval(&self, level: f64) -> Option<(f64, f64)> {
        if self.t0_samples.is_empty() {
            return None;
        }
        let a = (1.0 - level) / 2.0;
        Some((quantile(&self.t0_samples, a), quantile(&self.t0_samples, 1.0 - a)))
    }
}

/// Runs the sampler and collects thinned rows.
pub fn run_inference(
    data: &[Tree],
    prior: &Prior,
    config: &InferenceConfig,
) -> Result<PosteriorTrace, PosteriorError> {
    let mut rows = Vec::new();
    let mut trace = run_inference_with(data, prior, config, |r| rows.push(r.clone()))?;
    trace.rows = rows;
    Ok(trace)
}

/// Runs the sampler, passing each thinned row to `on_row` instead of storing it.
pub fn run_inference_with(
    data: &[Tree],
    prior: &Prior,
    config: &InferenceConfig,
    mut on_row: impl FnMut(&TraceRow),
) -> Result<PosteriorTrace, PosteriorError> {
    let state = initialize(data, prior, config)?;
    let (init_x0, init_t0, init_log_joint) = (state.x0.clone(), state.t0, state.log_joint);
    let mut sampler = Sampler::new(state, *prior, config.clone());
    let mut counts: HashMap<Topology, usize> = HashMap::new();
    let mut t0_samples = Vec::new();
    for it in 1..=config.iters {
        sampler.sweep();
        if it > config.burnin && (it - config.burnin).is_multiple_of(config.thin) {
            let s = sampler.state();
            *counts.entry(s.x0.topology()).or_insert(0) += 1;
            t0_samples.push(s.t0);
            on_row(&TraceRow {
                iter: it,
                t0: s.t0,
                log_joint: s.log_joint,
                x0: s.x0.clone(),
            });
        }
    }
    let mut topologies: Vec<(Topology, usize)> = counts.into_iter().collect();
    topologies.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(PosteriorTrace {
        rows: Vec::new(),
        t0_samples,
        acceptance: sampler.acceptance(),
        topologies,
        init_x0,
        init_t0,
        init_log_joint,
    })
}

/// Distinct endpoint topologies among `walks` forward walks for each candidate `m`.
pub fn suggest_m(
    x0: &Tree,
    t0: f64,
    candidates: &[usize],
    walks: usize,
    seed: u64,
) -> Vec<(usize, usize)> {
    candidates
        .iter()
        .map(|&m| {
            let p = WalkParams::new(x0.clone(), t0, m).expect("valid walk parameters");
            let mut r = stream(seed, &[tag::WALK, m as u64]);
            let mut seen = std::collections::HashSet::new();
            for _ in 0..walks {
                seen.insert(walk_endpoint(&p, &mut r).topology());
            }
            (m, seen.len())
        })
        .collect()
}
