use super::split::Split;
use super::taxa::TaxonSet;
use super::TreeError;
use crate::rng::mix64;

/// Interior lengths below this are treated as zero and the edge is contracted.
pub const CONTRACTION_TOLERANCE: f64 = 1e-12;

/// A point of BHV tree space: pairwise compatible splits with positive lengths.
#[derive(Clone, Debug)]
pub struct Tree {
    taxa: TaxonSet,
    edges: Vec<(Split, f64)>,
}

/// The set of splits of a tree, without lengths.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Topology {
    n: usize,
    splits: Vec<Split>,
}

impl Tree {
    pub fn new<I>(taxa: &TaxonSet, edges: I) -> Result<Self, TreeError>
    where
        I: IntoIterator<Item = (Split, f64)>,
    {
        let n = taxa.len();
        let mut v = Vec::new();
        for (s, len) in edges {
            if s.n_taxa() != n {
                return Err(TreeError::TaxaMismatch);
            }
            if !len.is_finite() || len < 0.0 {
                return Err(TreeError::BadLength(len));
            }
            if len >= CONTRACTION_TOLERANCE {
                v.push((s, len));
            }
        }
        v.sort_by_key(|a| a.0);
        for w in v.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(TreeError::DuplicateSplit(w[0].0.to_string()));
            }
        }
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                if !v[i].0.is_compatible_with(&v[j].0) {
                    return Err(TreeError::Incompatible(
                        v[i].0.to_string(),
                        v[j].0.to_string(),
                    ));
                }
            }
        }
        Ok(Tree {
            taxa: taxa.clone(),
            edges: v,
        })
    }

    /// Builds a tree from edges the caller guarantees are compatible and distinct.
    /// Non-positive lengths below the contraction tolerance are still dropped.
    pub(crate) fn from_trusted(taxa: &TaxonSet, mut edges: Vec<(Split, f64)>) -> Self {
        edges.retain(|e| e.1 >= CONTRACTION_TOLERANCE);
        edges.sort_by_key(|a| a.0);
        debug_assert!(edges.windows(2).all(|w| w[0].0 != w[1].0));
        Tree {
            taxa: taxa.clone(),
            edges,
        }
    }

    /// The star tree (origin of tree space).
    pub fn star(taxa: TaxonSet) -> Self {
        Tree {
            taxa,
            edges: Vec::new(),
        }
    }

    pub fn taxa(&self) -> &TaxonSet {
        &self.taxa
    }

    pub fn n_taxa(&self) -> usize {
        self.taxa.len()
    }

    /// Maximal number of interior edges, `N - 3`.
    pub fn max_edges(&self) -> usize {
        self.taxa.len() - 3
    }

    pub fn edges(&self) -> &[(Split, f64)] {
        &self.edges
    }

    pub fn splits(&self) -> impl Iterator<Item = Split> + '_ {
        self.edges.iter().map(|e| e.0)
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// `x(e)`: the length of `s`, zero if absent.
    pub fn length(&self, s: &Split) -> f64 {
        match self.edges.binary_search_by(|e| e.0.cmp(s)) {
            Ok(i) => self.edges[i].1,
            Err(_) => 0.0,
        }
    }

    pub fn contains(&self, s: &Split) -> bool {
        self.edges.binary_search_by(|e| e.0.cmp(s)).is_ok()
    }

    pub fn is_resolved(&self) -> bool {
        self.edges.len() == self.max_edges()
    }

    pub fn is_star(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn codim(&self) -> usize {
        self.max_edges() - self.edges.len()
    }

    pub fn norm_sq(&self) -> f64 {
        self.edges.iter().map(|e| e.1 * e.1).sum()
    }

    /// Euclidean norm of the length vector, the distance to the star tree.
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn topology(&self) -> Topology {
        Topology {
            n: self.n_taxa(),
            splits: self.splits().collect(),
        }
    }

    /// Distance between the length vectors in the ambient `R^M` embedding.
    pub fn embedding_distance(&self, other: &Tree) -> f64 {
        let (a, b) = (&self.edges, &other.edges);
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < a.len() || j < b.len() {
            if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
                acc += a[i].1 * a[i].1;
                i += 1;
            } else if i == a.len() || b[j].0 < a[i].0 {
                acc += b[j].1 * b[j].1;
                j += 1;
            } else {
                let d = a[i].1 - b[j].1;
                acc += d * d;
                i += 1;
                j += 1;
            }
        }
        acc.sqrt()
    }

    /// Same splits and lengths within `tol` (absent splits count as length 0).
    pub fn approx_eq(&self, other: &Tree, tol: f64) -> bool {
        let all = self.splits().chain(other.splits());
        self.taxa.same_as(&other.taxa)
            && all
                .into_iter()
                .all(|s| (self.length(&s) - other.length(&s)).abs() <= tol)
    }

    pub fn same_topology(&self, other: &Tree) -> bool {
        self.edges.len() == other.edges.len()
            && self.splits().zip(other.splits()).all(|(a, b)| a == b)
    }
}

impl PartialEq for Tree {
    fn eq(&self, other: &Self) -> bool {
        self.taxa.same_as(&other.taxa) && self.edges == other.edges
    }
}

impl Topology {
    /// A tree with this topology and the given lengths, in split order.
    pub fn with_lengths(&self, taxa: &TaxonSet, lengths: &[f64]) -> Result<Tree, TreeError> {
        Tree::new(taxa, self.splits.iter().copied().zip(lengths.iter().copied()))
    }

    pub fn n_taxa(&self) -> usize {
        self.n
    }

    pub fn splits(&self) -> &[Split] {
        &self.splits
    }

    pub fn codim(&self) -> usize {
        self.n - 3 - self.splits.len()
    }

    /// Stable 64-bit hash of the split set, for tables and trace files.
    pub fn hash64(&self) -> u64 {
        self.splits
            .iter()
            .fold(mix64(self.n as u64), |h, s| mix64(h ^ s.bits()))
    }

    pub fn hash_hex(&self) -> String {
        format!("{:016x}", self.hash64())
    }
}
