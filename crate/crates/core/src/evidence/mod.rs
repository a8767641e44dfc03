//! Marginal likelihood of data under a fixed source tree and dispersion.
//!
//! Each datum's walk density `f_W(x | x0, t0; m)` is the normalizer of its
//! bridge law. All three estimators compare bridges sampled from that law with
//! independence proposals, through the log weights `r = ln f − ln q_ind`.

use rand::Rng;
use thiserror::Error;

use crate::bridge::{
    all_independence_factors, draw_segment, independence_log_q, propose_independence, BridgeChain,
    BridgeError, ProposalTuning,
};
use crate::kernels::{ggf_log_density, star_source_log_density};
use crate::rng::{stream, tag};
use crate::stats::{log_mean_exp, median, variance};
use crate::treespace::Tree;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvidenceError {
    #[error(transparent)]
    Bridge(#[from] BridgeError),
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("no independence proposal was accepted from any evaluation bridge ({valid} of {total} proposals valid)")]
    ChibDenominator { valid: usize, total: usize },
    #[error("tunnel iterate became non-finite at iteration {iteration}")]
    TunnelDiverged { iteration: usize },
    #[error("no valid independence proposals among {total}")]
    NoValidProposals { total: usize },
    #[error("all weights zero at stepping-stone rung {rung}")]
    EmptyRung { rung: usize },
    #[error("datum {index}: {source}")]
    Datum { index: usize, source: Box<EvidenceError> },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvidenceConfig {
    /// Conditional bridge samples.
    pub m1: usize,
    /// Independence proposals, valid or not.
    pub m2: usize,
    /// Chib evaluation bridges.
    pub h: usize,
    /// Tunnel iterations and stepping-stone rungs.
    pub k: usize,
    pub burnin: usize,
    pub thin: usize,
    /// Samples per tempered stepping-stone rung.
    pub ss_samples: usize,
    pub bootstrap: usize,
    pub tuning: ProposalTuning,
}

impl Default for EvidenceConfig {
    fn default() -> Self {
        EvidenceConfig {
            m1: 1000,
            m2: 1000,
            h: 10,
            k: 100,
            burnin: 1000,
            thin: 10,
            ss_samples: 100,
            bootstrap: 200,
            tuning: ProposalTuning::default(),
        }
    }
}

impl EvidenceConfig {
    pub fn validate(&self) -> Result<(), EvidenceError> {
        let bad = |s: &str| Err(EvidenceError::BadConfig(s.to_string()));
        if self.m1 == 0 || self.m2 == 0 {
            return bad("m1 and m2 must be positive");
        }
        if self.h == 0 || self.h > self.m1 {
            return bad("need 1 <= h <= m1");
        }
        if self.k == 0 || self.thin == 0 || self.ss_samples == 0 {
            return bad("k, thin and ss_samples must be positive");
        }
        self.tuning.validate()?;
        Ok(())
    }
}

/// A log marginal likelihood with its bootstrap standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub log_ml: f64,
    pub se: f64,
}

impl Estimate {
    pub fn exact(log_ml: f64) -> Self {
        Estimate { log_ml, se: 0.0 }
    }
}

/// Log weights `ln f − ln q_ind` of conditional bridges and independence
/// proposals for one datum; invalid proposals carry `-inf`.
#[derive(Clone, Debug, PartialEq)]
pub struct DatumSamples {
    pub posterior: Vec<f64>,
    pub proposal: Vec<f64>,
}

/// Draws `m1` thinned conditional bridges and `m2` independence proposals.
pub fn draw_samples(
    x_star: &Tree,
    x0: &Tree,
    t0: f64,
    m: usize,
    config: &EvidenceConfig,
    rng: &mut impl Rng,
) -> Result<DatumSamples, EvidenceError> {
    config.validate()?;
    let tuning = config.tuning;
    let mut chain = BridgeChain::new(x0, x_star, t0, m, tuning, rng)?;
    for _ in 0..config.burnin {
        chain.step(rng);
    }
    let mut posterior = Vec::with_capacity(config.m1);
    for _ in 0..config.m1 {
        for _ in 0..config.thin {
            chain.step(rng);
        }
        let p = chain.path();
        posterior.push(chain.log_target() - independence_log_q(p, t0, &tuning));
    }
    let mut proposal = Vec::with_capacity(config.m2);
    for _ in 0..config.m2 {
        proposal.push(match propose_independence(x0, x_star, t0, m, &tuning, rng)? {
            Some((p, lq)) => p.log_target(t0) - lq,
            None => f64::NEG_INFINITY,
        });
    }
    Ok(DatumSamples { posterior, proposal })
}

/// `ln mean min(1, e^{v})` over `v = a − b_j` (or `b_j − a`).
fn log_mean_accept(vals: impl Iterator<Item = f64>, n: usize) -> f64 {
    let terms: Vec<f64> = vals.map(|v| v.min(0.0)).collect();
    debug_assert_eq!(terms.len(), n);
    log_mean_exp(&terms)
}

/// Chib's estimate from log weights, using every `H = ⌊M1/h⌋`-th conditional
/// bridge as an evaluation point.
pub fn chib_from(s: &DatumSamples, h: usize) -> Result<f64, EvidenceError> {
    let (m1, m2) = (s.posterior.len(), s.proposal.len());
    let step = m1 / h;
    let mut point = Vec::with_capacity(h);
    for k in 1..=h {
        let r_star = s.posterior[k * step - 1];
        let num = log_mean_accept(s.posterior.iter().map(|&r| r_star - r), m1);
        let den = log_mean_accept(s.proposal.iter().map(|&r| r - r_star), m2);
        if den == f64::NEG_INFINITY {
            return Err(EvidenceError::ChibDenominator {
                valid: s.proposal.iter().filter(|r| r.is_finite()).count(),
                total: m2,
            });
        }
        point.push(r_star - (num - den));
    }
    Ok(log_mean_exp(&point))
}

/// Iterative tunnel (bridge-sampling) estimate, re-centred at the median
/// conditional log weight.
pub fn tunnel_from(s: &DatumSamples, iterations: usize) -> Result<f64, EvidenceError> {
    let (m1, m2) = (s.posterior.len() as f64, s.proposal.len() as f64);
    let c1 = m1 / (m1 + m2);
    let c2 = m2 / (m1 + m2);
    let l = median(&s.posterior);
    let ef: Vec<f64> = s.posterior.iter().map(|r| (r - l).exp()).collect();
    let eq: Vec<f64> = s.proposal.iter().map(|r| (r - l).exp()).collect();
    let mut f = 0.1;
    for iteration in 1..=iterations {
        let num: f64 = eq.iter().map(|&e| e / (c2 * e + c1 * f)).sum::<f64>() / m2;
        let den: f64 = ef.iter().map(|&e| 1.0 / (c2 * e + c1 * f)).sum::<f64>() / m1;
        let next = num / den;
        if !next.is_finite() || next <= 0.0 {
            return Err(EvidenceError::TunnelDiverged { iteration });
        }
        let done = (next - f).abs() <= 1e-15 * next;
        f = next;
        if done {
            break;
        }
    }
    Ok(f.ln() + l)
}

/// Shared draw for Chib and tunnel, with bootstrap errors.
pub fn chib_and_tunnel(
    x_star: &Tree,
    x0: &Tree,
    t0: f64,
    m: usize,
    config: &EvidenceConfig,
    rng: &mut impl Rng,
) -> Result<(Estimate, Estimate), EvidenceError> {
    if m == 1 {
        let e = Estimate::exact(direct(x_star, x0, t0)?);
        return Ok((e, e));
    }
    let s = draw_samples(x_star, x0, t0, m, config, rng)?;
    let chib = chib_from(&s, config.h)?;
    let tunnel = tunnel_from(&s, config.k)?;
    let (se_c, se_t) = bootstrap_pair(&s, config, rng);
    Ok((
        Estimate { log_ml: chib, se: se_c },
        Estimate { log_ml: tunnel, se: se_t },
    ))
}

pub fn chib_log_ml(
    x_star: &Tree,
    x0: &Tree,
    t0: f64,
    m: usize,
    config: &EvidenceConfig,
    rng: &mut impl Rng,
) -> Result<Estimate, EvidenceError> {
    chib_and_tunnel(x_star, x0, t0, m, config, rng).map(|p| p.0)
}

pub fn tunnel_log_ml(
    x_star: &Tree,
    x0: &Tree,
    t0: f64,
    m: usize,
    config: &EvidenceConfig,
    rng: &mut impl Rng,
) -> Result<Estimate, EvidenceError> {
    chib_and_tunnel(x_star, x0, t0, m, config, rng).map(|p| p.1)
}

fn direct(x_star: &Tree, x0: &Tree, t0: f64) -> Result<f64, EvidenceError> {
    if !x0.taxa().same_as(x_star.taxa()) {
        return Err(BridgeError::TaxaMismatch.into());
    }
    Ok(ggf_log_density(x_star, x0, t0))
}

/// Block length for resampling thinned chain output.
fn block_len(n: usize) -> usize {
    ((n as f64).cbrt().round() as usize).max(1)
}

fn resample_blocks(x: &[f64], block: usize, rng: &mut impl Rng, out: &mut Vec<f64>) {
    out.clear();
    let n = x.len();
    let b = block.min(n);
    while out.len() < n {
        let start = rng.random_range(0..=n - b);
        out.extend_from_slice(&x[start..start + b]);
    }
    out.truncate(n);
}

fn resample_iid(x: &[f64], rng: &mut impl Rng, out: &mut Vec<f64>) {
    out.clear();
    out.extend((0..x.len()).map(|_| x[rng.random_range(0..x.len())]));
}

fn sd(vals: &[f64]) -> f64 {
    let finite: Vec<f64> = vals.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.len() < 2 {
        return f64::INFINITY;
    }
    variance(&finite).sqrt()
}

fn bootstrap_pair(s: &DatumSamples, config: &EvidenceConfig, rng: &mut impl Rng) -> (f64, f64) {
    if config.bootstrap < 2 {
        return (f64::NAN, f64::NAN);
    }
    let block = block_len(s.posterior.len());
    let mut b = DatumSamples {
        posterior: Vec::new(),
        proposal: Vec::new(),
    };
    let mut chib = Vec::with_capacity(config.bootstrap);
    let mut tunnel = Vec::with_capacity(config.bootstrap);
    for _ in 0..config.bootstrap {
        resample_blocks(&s.posterior, block, rng, &mut b.posterior);
        resample_iid(&s.proposal, rng, &mut b.proposal);
        chib.push(chib_from(&b, config.h).unwrap_or(f64::NAN));
        tunnel.push(tunnel_from(&b, config.k).unwrap_or(f64::NAN));
    }
    (sd(&chib), sd(&tunnel))
}

/// Stepping-stone rung terms: `ln mean exp((β_k − β_{k−1}) r)` over samples from `F_{β_{k−1}}`.
fn rung_term(r: &[f64], dbeta: f64) -> f64 {
    let v: Vec<f64> = r.iter().map(|&x| dbeta * x).collect();
    log_mean_exp(&v)
}

/// Generalized stepping-stone estimate along `f^β q_ind^(1−β)`, `β_k = k/K`.
/// Rung 1 uses independence proposals directly; later rungs run the tempered
/// partial-bridge chain, each started from the previous rung's last state.
pub fn stepping_stone_log_ml(
    x_star: &Tree,
    x0: &Tree,
    t0: f64,
    m: usize,
    config: &EvidenceConfig,
    rng: &mut impl Rng,
) -> Result<Estimate, EvidenceError> {
    config.validate()?;
    if m == 1 {
        return Ok(Estimate::exact(direct(x_star, x0, t0)?));
    }
    let tuning = config.tuning;
    let kk = config.k;
    let dbeta = 1.0 / kk as f64;
    let mut rungs: Vec<Vec<f64>> = Vec::with_capacity(kk);
    let mut first = Vec::with_capacity(config.m2);
    for _ in 0..config.m2 {
        first.push(match propose_independence(x0, x_star, t0, m, &tuning, rng)? {
            Some((p, lq)) => p.log_target(t0) - lq,
            None => f64::NEG_INFINITY,
        });
    }
    rungs.push(first);
    let mut chain = BridgeChain::new(x0, x_star, t0, m, tuning, rng)?;
    let mut q = all_independence_factors(chain.path(), t0, &tuning);
    for k in 2..=kk {
        let beta = (k - 1) as f64 * dbeta;
        let burn = if k == 2 { config.burnin } else { 0 };
        let mut r = Vec::with_capacity(config.ss_samples);
        for it in 0..burn + config.ss_samples * config.thin {
            let (a, l) = draw_segment(m, tuning.alpha_b, rng);
            chain.tempered_step_with(a, l, beta, Some(&mut q), rng);
            if it >= burn && (it + 1 - burn) % config.thin == 0 {
                r.push(chain.log_target() - q.iter().sum::<f64>());
            }
        }
        rungs.push(r);
    }
    let total = ss_total(&rungs, dbeta)?;
    let se = if config.bootstrap >= 2 {
        let mut vals = Vec::with_capacity(config.bootstrap);
        let mut buf = Vec::new();
        let mut boot: Vec<Vec<f64>> = vec![Vec::new(); rungs.len()];
        for _ in 0..config.bootstrap {
            for (i, r) in rungs.iter().enumerate() {
                if i == 0 {
                    resample_iid(r, rng, &mut buf);
                } else {
                    resample_blocks(r, block_len(r.len()), rng, &mut buf);
                }
                boot[i].clone_from(&buf);
            }
            vals.push(ss_total(&boot, dbeta).unwrap_or(f64::NAN));
        }
        sd(&vals)
    } else {
        f64::NAN
    };
    Ok(Estimate { log_ml: total, se })
}

fn ss_total(rungs: &[Vec<f64>], dbeta: f64) -> Result<f64, EvidenceError> {
    let mut total = 0.0;
    for (i, r) in rungs.iter().enumerate() {
        let t = rung_term(r, dbeta);
        if t == f64::NEG_INFINITY {
            return Err(EvidenceError::EmptyRung { rung: i + 1 });
        }
        total += t;
    }
    Ok(total)
}

/// Exact log density when the source is the star tree (Brownian kernel).
pub fn star_exact_log_ml(x_star: &Tree, t0: f64) -> f64 {
    star_source_log_density(x_star, t0)
}

/// `(ml_a − ml_b)/ln 10`.
pub fn log_bayes_factor(ml_a: f64, ml_b: f64) -> f64 {
    (ml_a - ml_b) / std::f64::consts::LN_10
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Chib,
    Tunnel,
    SteppingStone,
    StarExact,
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "chib" => Ok(Method::Chib),
            "tunnel" => Ok(Method::Tunnel),
            "stepping-stone" => Ok(Method::SteppingStone),
            "star-exact" => Ok(Method::StarExact),
            _ => Err(format!("unknown method {s:?}")),
        }
    }
}

/// Per-datum estimates and their sum; the total error adds variances.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetEstimate {
    pub per_datum: Vec<Estimate>,
    pub total: f64,
    pub se: f64,
}

/// Estimates `Σ_i ln f_W(x_i | x0, t0; m)`; datum `i` uses its own random stream.
pub fn dataset_log_ml(
    data: &[Tree],
    x0: &Tree,
    t0: f64,
    m: usize,
    method: Method,
    config: &EvidenceConfig,
    seed: u64,
) -> Result<DatasetEstimate, EvidenceError> {
    let mut per_datum = Vec::with_capacity(data.len());
    for (index, x) in data.iter().enumerate() {
        let mut r = stream(seed, &[tag::EVIDENCE, index as u64]);
        let e = match method {
            Method::Chib => chib_log_ml(x, x0, t0, m, config, &mut r),
            Method::Tunnel => tunnel_log_ml(x, x0, t0, m, config, &mut r),
            Method::SteppingStone => stepping_stone_log_ml(x, x0, t0, m, config, &mut r),
            Method::StarExact => Ok(Estimate::exact(star_exact_log_ml(x, t0))),
        }
        .map_err(|e| EvidenceError::Datum {
            index,
            source: Box::new(e),
        })?;
        per_datum.push(e);
    }
    let total = per_datum.iter().map(|e| e.log_ml).sum();
    let se = per_datum.iter().map(|e| e.se * e.se).sum::<f64>().sqrt();
    Ok(DatasetEstimate { per_datum, total, se })
}

#[cfg(test)]
mod tests;
