//! Uniform random resolution of an unresolved tree into a maximal orthant
//! containing it in its boundary.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use crate::treespace::{double_factorial, Hierarchy, Split, Tree};

/// `α_i = deg(v_i) − 3` for every vertex of degree above 3.
pub fn excess_degrees(x: &Tree) -> Vec<usize> {
    let splits: Vec<Split> = x.splits().collect();
    let h = Hierarchy::new(x.n_taxa(), &splits);
    (0..h.n_vertices())
        .map(|v| h.degree(v))
        .filter(|&d| d > 3)
        .map(|d| d - 3)
        .collect()
}

/// `Δ = Π (2α_i + 1)!!`, the number of maximal orthants with `x` in their boundary.
pub fn resolution_count(x: &Tree) -> u128 {
    excess_degrees(x)
        .iter()
        .map(|&a| double_factorial(2 * a as u64 + 1))
        .product()
}

/// `ln K(x) = Σα_i ln 2 − ln Δ`.
pub fn log_resolution_factor(x: &Tree) -> f64 {
    let alpha = excess_degrees(x);
    let sum: usize = alpha.iter().sum();
    let log_delta: f64 = alpha
        .iter()
        .map(|&a| (double_factorial(2 * a as u64 + 1) as f64).ln())
        .sum();
    sum as f64 * std::f64::consts::LN_2 - log_delta
}

/// Splits added by a uniformly random resolution of `x`. Empty if `x` is resolved.
pub fn random_resolution(x: &Tree, rng: &mut impl Rng) -> Vec<Split> {
    let n = x.n_taxa();
    let splits: Vec<Split> = x.splits().collect();
    let h = Hierarchy::new(n, &splits);
    let mut out = Vec::new();
    for v in 0..h.n_vertices() {
        if h.degree(v) <= 3 {
            continue;
        }
        let groups = h.groups(v);
        let d = groups.len();
        // local tree: group leaves 0..d, internal nodes d..
        let mut order: Vec<usize> = (0..d).collect();
        order.shuffle(rng);
        let mut edges: Vec<(usize, usize)> = order[..3].iter().map(|&g| (g, d)).collect();
        let mut next = d + 1;
        for &w in &order[3..] {
            let k = rng.random_range(0..edges.len());
            let (a, b) = edges[k];
            let u = next;
            next += 1;
            edges[k] = (a, u);
            edges.push((u, b));
            edges.push((u, w));
        }
        let mut adj = vec![Vec::new(); next];
        for &(a, b) in &edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        fn side(v: usize, from: usize, adj: &[Vec<usize>], groups: &[u64]) -> u64 {
            if v < groups.len() {
                return groups[v];
            }
            adj[v]
                .iter()
                .filter(|&&w| w != from)
                .fold(0, |m, &w| m | side(w, v, adj, groups))
        }
        for &(a, b) in &edges {
            if a >= d && b >= d {
                let mask = side(b, a, &adj, &groups);
                out.push(Split::from_bits_n(n, mask).expect("resolution edges are interior"));
            }
        }
    }
    out
}

/// Picks one of the two NNI alternatives of `s` uniformly.
pub(crate) fn random_nni(h: &Hierarchy, s: &Split, rng: &mut impl Rng) -> Split {
    let (a, b) = h.nni_alternatives(s);
    *[a, b].choose(rng).unwrap()
}
