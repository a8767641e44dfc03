//! Seeded test fixtures: random trees and the named tree pairs used by the
//! acceptance checks and benchmarks.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::treespace::{resolved_topologies, Split, TaxonSet, Tree, CONTRACTION_TOLERANCE};

/// Random tree: uniform leaf insertion gives a resolved topology, lengths are
/// uniform on (0.001, 2) and each edge is contracted with probability `contract`.
pub fn random_tree(taxa: &TaxonSet, rng: &mut impl Rng, contract: f64) -> Tree {
    let n = taxa.len();
    // edges of an unrooted tree as (node, node); leaves are 0..n, internal n..
    let mut edges: Vec<(usize, usize)> = vec![(0, n), (1, n), (2, n)];
    let mut next = n + 1;
    let mut order: Vec<usize> = (3..n).collect();
    order.shuffle(rng);
    for leaf in order {
        let k = rng.random_range(0..edges.len());
        let (a, b) = edges.swap_remove(k);
        let m = next;
        next += 1;
        edges.extend([(a, m), (m, b), (leaf, m)]);
    }
    // leaf masks on the side away from leaf 0: root at leaf 0
    let mut adj = vec![Vec::new(); next];
    for &(a, b) in &edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    fn below(v: usize, p: usize, adj: &[Vec<usize>], n: usize, out: &mut Vec<u64>) -> u64 {
        let mut m = if v < n { 1u64 << v } else { 0 };
        for &w in &adj[v] {
            if w != p {
                m |= below(w, v, adj, n, out);
            }
        }
        out.push(m);
        m
    }
    let mut masks = Vec::new();
    below(adj[0][0], 0, &adj, n, &mut masks);
    let e: Vec<(Split, f64)> = masks
        .into_iter()
        .filter_map(|m| Split::from_bits(taxa, m).ok())
        .map(|s| {
            let len = if rng.random::<f64>() < contract {
                0.0
            } else {
                rng.random_range(0.001..2.0)
            };
            (s, len)
        })
        .collect();
    Tree::new(taxa, e).unwrap()
}

/// Composite Simpson integral of `f` over `BHV_4`, each axis cut at `radius`.
/// The star tree is shared by the three axes and has measure zero.
pub fn integrate_bhv4(f: impl Fn(&Tree) -> f64, taxa: &TaxonSet, radius: f64, intervals: usize) -> f64 {
    let k = intervals + intervals % 2;
    let h = radius / k as f64;
    let mut total = 0.0;
    for top in resolved_topologies(taxa) {
        // the endpoint b = 0 is evaluated just inside the axis
        let at = |b: f64| f(&top.with_lengths(taxa, &[b.max(CONTRACTION_TOLERANCE)]).unwrap());
        let mut s = at(0.0) + at(radius);
        for i in 1..k {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * at(i as f64 * h);
        }
        total += s * h / 3.0;
    }
    total
}

/// Jittered-grid estimate of the integral of `f` over `BHV_5`, in polar
/// coordinates on every maximal orthant, radii up to `radius`.
pub fn integrate_bhv5(
    f: impl Fn(&Tree) -> f64,
    taxa: &TaxonSet,
    radius: f64,
    nr: usize,
    ntheta: usize,
    rng: &mut impl Rng,
) -> f64 {
    let dr = radius / nr as f64;
    let dth = std::f64::consts::FRAC_PI_2 / ntheta as f64;
    let mut total = 0.0;
    for top in resolved_topologies(taxa) {
        let mut s = 0.0;
        for i in 0..nr {
            for j in 0..ntheta {
                let r = (i as f64 + rng.random::<f64>()) * dr;
                let th = (j as f64 + rng.random::<f64>()) * dth;
                let (u, v) = (r * th.cos(), r * th.sin());
                if u < 1e-12 || v < 1e-12 {
                    continue;
                }
                s += f(&top.with_lengths(taxa, &[u, v]).unwrap()) * r;
            }
        }
        total += s * dr * dth;
    }
    total
}

/// Geodesic complexity of a named `BHV_10` pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairKind {
    TwoCodim2,
    OneCodim5,
    ConePath,
}

const BHV10_PAIRS: [(PairKind, &str, &str); 3] = [
    (
        PairKind::TwoCodim2,
        "(1:0.1,(((2:0.1,4:0.1):0.7802398923903214,10:0.1):1.0612243491170381,((((6:0.1,8:0.1):1.6382371524993433,3:0.1):0.6019609716292788,7:0.1):0.3478517937779981,5:0.1):1.4511005000860389):1.9402430583961965,9:0.1);",
        "(1:0.1,(((((((6:0.1,8:0.1):1.6019792159922113,7:0.1):1.2523922911668222,5:0.1):1.3978114060955096,3:0.1):3.3628481842061437,4:0.1):1.175257857575592,2:0.1):0.2804543996876041,10:0.1):1.9395126595007246,9:0.1);",
    ),
    (
        PairKind::OneCodim5,
        "(1:0.1,(((2:0.1,7:0.1):1.1427607517472442,(((4:0.1,5:0.1):1.7669327654279452,(8:0.1,10:0.1):1.6811737370736366):0.9623367028644229,9:0.1):0.9751805127712079):0.5712625059335544,3:0.1):0.8704110120946724,6:0.1);",
        "(1:0.1,(((((6:0.1,8:0.1):0.3624316020468094,((2:0.1,7:0.1):0.06155261280712244,9:0.1):0.8381733166232604):0.580408352145124,5:0.1):0.9005361959862952,10:0.1):0.5749465233519916,3:0.1):0.6934668695086319,4:0.1);",
    ),
    (
        PairKind::ConePath,
        "(1:0.1,(((((((2:0.1,10:0.1):0.5742947768516129,6:0.1):1.412858754569455,9:0.1):1.6219544116544047,7:0.1):0.8081679425894065,3:0.1):1.1993446883153958,8:0.1):1.7027201925621243,5:0.1):0.741473913619791,4:0.1);",
        "(1:0.1,(((((((3:0.1,6:0.1):1.7604516343618726,2:0.1):0.5727580217983813,4:0.1):1.2033433216577452,10:0.1):1.4719239956043426,9:0.1):0.6996339417631597,5:0.1):0.7272487882081424,8:0.1):1.9166845996725264,7:0.1);",
    ),
];

/// Seeded `BHV_10` endpoint pairs whose geodesics cross two codimension-2
/// points, one codimension-5 point, or pass through the origin.
pub fn bhv10_pair(kind: PairKind) -> (Tree, Tree) {
    let taxa = TaxonSet::numbered(10).unwrap();
    let (_, a, b) = BHV10_PAIRS.iter().find(|p| p.0 == kind).unwrap();
    (
        crate::treespace::parse_newick(a, &taxa).unwrap(),
        crate::treespace::parse_newick(b, &taxa).unwrap(),
    )
}
