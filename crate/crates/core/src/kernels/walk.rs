//! The m-step GGF random walk approximating Brownian motion.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::ggf::{fire, Coord};
use super::KernelError;
use crate::treespace::Tree;

#[derive(Clone, Debug)]
pub struct WalkParams {
    pub source: Tree,
    pub t0: f64,
    pub m: usize,
}

impl WalkParams {
    pub fn new(source: Tree, t0: f64, m: usize) -> Result<Self, KernelError> {
        if !source.is_resolved() {
            return Err(KernelError::UnresolvedSource);
        }
        if !(t0 > 0.0 && t0.is_finite()) {
            return Err(KernelError::BadDispersion(t0));
        }
        if m == 0 {
            return Err(KernelError::ZeroSteps);
        }
        Ok(WalkParams { source, t0, m })
    }
}

struct Walker<'a> {
    p: &'a WalkParams,
    normal: Normal<f64>,
    state: Vec<Coord>,
}

impl<'a> Walker<'a> {
    fn new(p: &'a WalkParams) -> Self {
        let state = p
            .source
            .edges()
            .iter()
            .map(|&(s, l)| Coord {
                split: s,
                pos: l,
                vel: 0.0,
            })
            .collect();
        Walker {
            p,
            normal: Normal::new(0.0, (p.t0 / p.m as f64).sqrt()).unwrap(),
            state,
        }
    }

    fn step(&mut self, rng: &mut impl Rng) {
        let n = self.p.source.n_taxa();
        loop {
            let mut next = self.state.clone();
            for c in next.iter_mut() {
                c.vel = self.normal.sample(rng);
            }
            if fire(&mut next, n, rng) {
                self.state = next;
                return;
            }
            super::ggf::note_resample();
        }
    }

    fn tree(&self) -> Tree {
        Tree::from_trusted(
            self.p.source.taxa(),
            self.state.iter().map(|c| (c.split, c.pos.max(0.0))).collect(),
        )
    }
}

/// Runs the walk, returning the endpoint and the full path `y_0, ..., y_m`.
pub fn random_walk(p: &WalkParams, rng: &mut impl Rng) -> (Tree, Vec<Tree>) {
    let mut w = Walker::new(p);
    let mut path = Vec::with_capacity(p.m + 1);
    path.push(p.source.clone());
    for _ in 0..p.m {
        w.step(rng);
        path.push(w.tree());
    }
    (path[p.m].clone(), path)
}

/// Endpoint of the walk without storing the path.
pub fn walk_endpoint(p: &WalkParams, rng: &mut impl Rng) -> Tree {
    let mut w = Walker::new(p);
    for _ in 0..p.m {
        w.step(rng);
    }
    w.tree()
}
