use super::split::Split;
use super::taxa::full_mask;

/// The laminar family of clusters of a topology, rooted at taxon 0.
///
/// Every split contributes the cluster on its stored side. Vertex `k` (one past
/// the last cluster) is the root cluster `R`, all taxa except taxon 0.
#[derive(Clone, Debug)]
pub struct Hierarchy {
    n: usize,
    clusters: Vec<u64>,
    parent: Vec<usize>,
    children: Vec<Vec<usize>>,
    loose: Vec<u64>,
}

impl Hierarchy {
    /// `splits` must be pairwise compatible.
    pub fn new(n: usize, splits: &[Split]) -> Self {
        let mut clusters: Vec<u64> = splits.iter().map(|s| s.bits()).collect();
        clusters.sort_by_key(|c| (c.count_ones(), *c));
        let k = clusters.len();
        let root_bits = full_mask(n) & !1;
        let mut parent = vec![k; k];
        for i in 0..k {
            for j in i + 1..k {
                let (ci, cj) = (clusters[i], clusters[j]);
                if cj != ci && cj & ci == ci {
                    parent[i] = j;
                    break;
                }
            }
        }
        let mut children = vec![Vec::new(); k + 1];
        for (i, &p) in parent.iter().enumerate() {
            children[p].push(i);
        }
        let mut loose = vec![0u64; k + 1];
        for v in 0..=k {
            let own = if v == k { root_bits } else { clusters[v] };
            let covered = children[v].iter().fold(0, |acc, &c| acc | clusters[c]);
            loose[v] = own & !covered;
        }
        Hierarchy {
            n,
            clusters,
            parent,
            children,
            loose,
        }
    }

    pub fn root(&self) -> usize {
        self.clusters.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.clusters.len() + 1
    }

    pub fn bits(&self, v: usize) -> u64 {
        if v == self.root() {
            full_mask(self.n) & !1
        } else {
            self.clusters[v]
        }
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent.get(v).copied()
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    /// Taxa attached directly to vertex `v`.
    pub fn loose_leaves(&self, v: usize) -> u64 {
        self.loose[v]
    }

    pub fn index_of(&self, bits: u64) -> Option<usize> {
        self.clusters.iter().position(|&c| c == bits)
    }

    /// Taxon masks of the subtrees hanging off vertex `v`: child clusters, loose
    /// leaves one by one, then the complement on the side of taxon 0.
    pub fn groups(&self, v: usize) -> Vec<u64> {
        let mut g: Vec<u64> = self.children[v].iter().map(|&c| self.clusters[c]).collect();
        let mut l = self.loose[v];
        while l != 0 {
            let b = l & l.wrapping_neg();
            g.push(b);
            l &= !b;
        }
        g.push(full_mask(self.n) & !self.bits(v));
        g
    }

    pub fn degree(&self, v: usize) -> usize {
        self.children[v].len() + self.loose[v].count_ones() as usize + 1
    }

    /// The two nearest-neighbour-interchange alternatives to `s` in a tree whose
    /// topology is resolved at both ends of `s`.
    pub fn nni_alternatives(&self, s: &Split) -> (Split, Split) {
        let v = self
            .index_of(s.bits())
            .expect("split must belong to the hierarchy");
        let groups = self.groups(v);
        let a1 = groups[0];
        let a2 = s.bits() & !a1;
        let p = self.bits(self.parent[v]);
        let q = p & !s.bits();
        let n = self.n;
        (
            Split::from_bits_n(n, a1 | q).expect("NNI produces an interior split"),
            Split::from_bits_n(n, a2 | q).expect("NNI produces an interior split"),
        )
    }
}
