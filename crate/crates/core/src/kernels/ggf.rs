//! Gaussian via geodesic firing.

use std::f64::consts::{LN_2, PI};
use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::resolve::{log_resolution_factor, random_nni, random_resolution};
use crate::geodesic::geodesic;
use crate::treespace::{Hierarchy, Split, Tree};

/// Two coordinates reaching zero within this fraction of the firing time count
/// as hitting a codimension-2 face together.
const TIE_TOLERANCE: f64 = 1e-12;

static CODIM2_RESAMPLES: AtomicU64 = AtomicU64::new(0);

pub(crate) fn note_resample() {
    CODIM2_RESAMPLES.fetch_add(1, Ordering::Relaxed);
}

/// Number of firings redrawn because they hit a codimension ≥ 2 face in floating point.
pub fn codim2_resamples() -> u64 {
    CODIM2_RESAMPLES.load(Ordering::Relaxed)
}

/// Location and dispersion of a GGF distribution.
#[derive(Clone, Debug)]
pub struct GgfParams {
    pub center: Tree,
    pub t: f64,
}

impl GgfParams {
    pub fn new(center: Tree, t: f64) -> Option<Self> {
        (t > 0.0 && t.is_finite()).then_some(GgfParams { center, t })
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Tree {
        ggf_sample(&self.center, self.t, rng)
    }

    pub fn density(&self, x: &Tree) -> f64 {
        ggf_density(x, &self.center, self.t)
    }
}

/// One coordinate of a firing: split, current length, velocity.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Coord {
    pub split: Split,
    pub pos: f64,
    pub vel: f64,
}

/// Moves a resolved state for unit time, replacing each coordinate that reaches
/// zero by a uniformly chosen NNI alternative. Returns false on a codimension-2 hit.
pub(crate) fn fire(state: &mut [Coord], n: usize, rng: &mut impl Rng) -> bool {
    let mut left = 1.0f64;
    loop {
        let mut first = f64::INFINITY;
        let mut second = f64::INFINITY;
        let mut hit = usize::MAX;
        for (i, c) in state.iter().enumerate() {
            if c.vel < 0.0 {
                let tau = -c.pos / c.vel;
                if tau < first {
                    second = first;
                    first = tau;
                    hit = i;
                } else if tau < second {
                    second = tau;
                }
            }
        }
        if first >= left {
            for c in state.iter_mut() {
                c.pos += c.vel * left;
            }
            return true;
        }
        if second - first <= TIE_TOLERANCE * (1.0 + first) {
            return false;
        }
        for c in state.iter_mut() {
            c.pos += c.vel * first;
        }
        left -= first;
        let splits: Vec<Split> = state.iter().map(|c| c.split).collect();
        let h = Hierarchy::new(n, &splits);
        let s = state[hit].split;
        state[hit] = Coord {
            split: random_nni(&h, &s, rng),
            pos: 0.0,
            vel: -state[hit].vel,
        };
    }
}

fn to_tree(center: &Tree, state: &[Coord]) -> Tree {
    Tree::from_trusted(
        center.taxa(),
        state.iter().map(|c| (c.split, c.pos.max(0.0))).collect(),
    )
}

/// Draws from `GGF(center, t)`. Unresolved centers are first resolved into a
/// uniformly chosen adjacent maximal orthant; new splits get half-normal velocities.
pub fn ggf_sample(center: &Tree, t: f64, rng: &mut impl Rng) -> Tree {
    let normal = Normal::new(0.0, t.sqrt()).expect("dispersion must be positive");
    let n = center.n_taxa();
    loop {
        let mut state: Vec<Coord> = center
            .edges()
            .iter()
            .map(|&(s, l)| Coord {
                split: s,
                pos: l,
                vel: normal.sample(rng),
            })
            .collect();
        if !center.is_resolved() {
            for s in random_resolution(center, rng) {
                state.push(Coord {
                    split: s,
                    pos: 0.0,
                    vel: normal.sample(rng).abs(),
                });
            }
        }
        if fire(&mut state, n, rng) {
            return to_tree(center, &state);
        }
        note_resample();
    }
}

/// The `t`-independent part of a GGF log density: squared distance, codimension-1
/// crossing count and the log resolution factor of the center.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepTerm {
    pub d2: f64,
    pub nu: usize,
    pub log_k: f64,
    pub dim: usize,
}

impl StepTerm {
    /// `ln f_GGF` at dispersion `t`.
    pub fn log_density(&self, t: f64) -> f64 {
        self.log_k
            - self.nu as f64 * LN_2
            - 0.5 * self.dim as f64 * (2.0 * PI * t).ln()
            - self.d2 / (2.0 * t)
    }
}

/// The density's dependence on `(x, center)`, or `None` where the density is zero.
pub fn step_term(x: &Tree, center: &Tree) -> Option<StepTerm> {
    if !x.is_resolved() {
        return None;
    }
    let g = geodesic(center, x).expect("trees share a taxon set");
    let c = g.classify();
    let dim = x.max_edges();
    let d2 = g.length() * g.length();
    if center.is_resolved() {
        c.is_simple.then_some(StepTerm {
            d2,
            nu: c.nu,
            log_k: 0.0,
            dim,
        })
    } else {
        c.is_simple_after_start.then(|| StepTerm {
            d2,
            nu: c.nu,
            log_k: log_resolution_factor(center),
            dim,
        })
    }
}

/// `ln f_GGF(x | center, t)`, `-inf` off the support.
pub fn ggf_log_density(x: &Tree, center: &Tree, t: f64) -> f64 {
    step_term(x, center).map_or(f64::NEG_INFINITY, |s| s.log_density(t))
}

/// `f_GGF(x | center, t)`.
pub fn ggf_density(x: &Tree, center: &Tree, t: f64) -> f64 {
    ggf_log_density(x, center, t).exp()
}
