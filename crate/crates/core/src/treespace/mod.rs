//! Taxon sets, splits, trees as points of BHV space, and Newick I/O.
//!
//! A tree on `N` taxa is stored as its set of interior splits together with
//! strictly positive lengths. Pendant edge lengths are not part of the point
//! in tree space and are dropped on parse.

mod hierarchy;
mod newick;
mod split;
mod taxa;
mod tree;

pub use hierarchy::Hierarchy;
pub use newick::{newick_labels, parse_newick};
pub use split::Split;
pub use taxa::TaxonSet;
pub use tree::{Topology, Tree, CONTRACTION_TOLERANCE};

use thiserror::Error;

/// Errors raised while building taxon sets, splits and trees.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum TreeError {
    #[error("at least 4 taxa are required, got {0}")]
    TooFewTaxa(usize),
    #[error("at most 64 taxa are supported, got {0}")]
    TooManyTaxa(usize),
    #[error("duplicate taxon label `{0}`")]
    DuplicateTaxon(String),
    #[error("unknown taxon label `{0}`")]
    UnknownTaxon(String),
    #[error("taxon `{0}` does not appear in the tree")]
    MissingTaxon(String),
    #[error("split side of size {size} is not interior for {n} taxa")]
    NotInterior { size: u32, n: usize },
    #[error("splits belong to different taxon sets")]
    TaxaMismatch,
    #[error("splits {0} and {1} are incompatible")]
    Incompatible(String, String),
    #[error("split {0} appears twice")]
    DuplicateSplit(String),
    #[error("edge length {0} is not a finite non-negative number")]
    BadLength(f64),
    #[error("malformed Newick at byte {pos}: {msg}")]
    Newick { pos: usize, msg: String },
}

/// Number of interior splits of `[N]`, i.e. `2^(N-1) - (N+1)`.
pub fn count_splits(n: usize) -> Result<u128, TreeError> {
    if n < 4 {
        return Err(TreeError::TooFewTaxa(n));
    }
    if n > 64 {
        return Err(TreeError::TooManyTaxa(n));
    }
    Ok((1u128 << (n - 1)) - (n as u128 + 1))
}

/// Number of fully resolved unrooted topologies, `(2N-5)!!`.
pub fn count_topologies(n: usize) -> Result<u128, TreeError> {
    if n < 4 {
        return Err(TreeError::TooFewTaxa(n));
    }
    Ok(double_factorial(2 * n as u64 - 5))
}

/// `k!! = k (k-2) (k-4) ...`, with `0!! = 1!! = 1`. Saturates on overflow.
pub fn double_factorial(k: u64) -> u128 {
    let mut acc: u128 = 1;
    let mut i = k;
    while i > 1 {
        acc = acc.saturating_mul(i as u128);
        i -= 2;
    }
    acc
}

/// Every fully resolved topology on `taxa`, by inserting leaves on edges in all ways.
/// Exponential in `N`; intended for small trees.
pub fn resolved_topologies(taxa: &TaxonSet) -> Vec<Topology> {
    let n = taxa.len();
    fn rec(
        edges: &mut Vec<(usize, usize)>,
        leaf: usize,
        next: usize,
        n: usize,
        taxa: &TaxonSet,
        out: &mut Vec<Topology>,
    ) {
        if leaf == n {
            let mut adj = vec![Vec::new(); next];
            for &(a, b) in edges.iter() {
                adj[a].push(b);
                adj[b].push(a);
            }
            fn below(v: usize, p: usize, adj: &[Vec<usize>], n: usize, acc: &mut Vec<u64>) -> u64 {
                let mut m = if v < n { 1u64 << v } else { 0 };
                for &w in &adj[v] {
                    if w != p {
                        m |= below(w, v, adj, n, acc);
                    }
                }
                acc.push(m);
                m
            }
            let mut masks = Vec::new();
            below(adj[0][0], 0, &adj, n, &mut masks);
            let splits = masks
                .into_iter()
                .filter_map(|m| Split::from_bits(taxa, m).ok())
                .map(|s| (s, 1.0));
            out.push(Tree::new(taxa, splits).unwrap().topology());
            return;
        }
        for k in 0..edges.len() {
            let (a, b) = edges[k];
            edges[k] = (a, next);
            edges.push((next, b));
            edges.push((leaf, next));
            rec(edges, leaf + 1, next + 1, n, taxa, out);
            edges.pop();
            edges.pop();
            edges[k] = (a, b);
        }
    }
    let mut edges = vec![(0, n), (1, n), (2, n)];
    let mut out = Vec::new();
    rec(&mut edges, 3, n + 1, n, taxa, &mut out);
    out
}

/// Euclidean norm of the edge-length vector, equal to the distance to the star tree.
pub fn tree_norm(x: &Tree) -> f64 {
    x.norm()
}

/// Counts describing a sample of trees.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSummary {
    pub n: usize,
    pub distinct_splits: usize,
    pub distinct_topologies: usize,
    pub modal_topology: Option<Topology>,
    pub modal_count: usize,
}

/// Distinct interior splits and topologies of `trees`; ties for the modal
/// topology go to the smallest in split order.
pub fn summarize(trees: &[Tree]) -> DatasetSummary {
    use std::collections::{BTreeMap, BTreeSet};
    let splits: BTreeSet<Split> = trees.iter().flat_map(|t| t.splits()).collect();
    let mut tops: BTreeMap<Topology, usize> = BTreeMap::new();
    for t in trees {
        *tops.entry(t.topology()).or_default() += 1;
    }
    let modal = tops
        .iter()
        .fold(None::<(&Topology, usize)>, |best, (t, &c)| match best {
            Some((_, b)) if b >= c => best,
            _ => Some((t, c)),
        });
    DatasetSummary {
        n: trees.len(),
        distinct_splits: splits.len(),
        distinct_topologies: tops.len(),
        modal_topology: modal.map(|m| m.0.clone()),
        modal_count: modal.map_or(0, |m| m.1),
    }
}
