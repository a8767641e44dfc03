use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use super::TreeError;

struct Inner {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

/// An ordered set of taxon labels. Index `i` is bit `i` of every split mask.
///
/// Cloning is cheap; clones share the same label table.
#[derive(Clone)]
pub struct TaxonSet(Arc<Inner>);

impl TaxonSet {
    pub fn new<S: AsRef<str>>(labels: &[S]) -> Result<Self, TreeError> {
        let n = labels.len();
        if n < 4 {
            return Err(TreeError::TooFewTaxa(n));
        }
        if n > 64 {
            return Err(TreeError::TooManyTaxa(n));
        }
        let mut index = HashMap::with_capacity(n);
        let mut owned = Vec::with_capacity(n);
        for (i, l) in labels.iter().enumerate() {
            let l = l.as_ref().to_string();
            if index.insert(l.clone(), i).is_some() {
                return Err(TreeError::DuplicateTaxon(l));
            }
            owned.push(l);
        }
        Ok(TaxonSet(Arc::new(Inner {
            labels: owned,
            index,
        })))
    }

    /// Taxa labelled `"1"`, ..., `"n"`.
    pub fn numbered(n: usize) -> Result<Self, TreeError> {
        let labels: Vec<String> = (1..=n).map(|i| i.to_string()).collect();
        Self::new(&labels)
    }

    /// Parses a taxon map: one label per line, blank lines and `#` comments skipped.
    pub fn from_map_text(text: &str) -> Result<Self, TreeError> {
        let labels: Vec<&str> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect();
        Self::new(&labels)
    }

    /// Builds a taxon set from unordered labels, sorting numerically where possible.
    pub fn from_unordered<S: AsRef<str>>(labels: &[S]) -> Result<Self, TreeError> {
        let mut v: Vec<&str> = labels.iter().map(|s| s.as_ref()).collect();
        v.sort_by(|a, b| label_order(a, b));
        v.dedup();
        Self::new(&v)
    }

    pub fn len(&self) -> usize {
        self.0.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn labels(&self) -> &[String] {
        &self.0.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.0.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.0.index.get(label).copied()
    }

    /// Mask with one bit per taxon.
    pub fn full_mask(&self) -> u64 {
        full_mask(self.len())
    }

    pub fn same_as(&self, other: &TaxonSet) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.labels == other.0.labels
    }
}

pub(crate) fn full_mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

fn label_order(a: &str, b: &str) -> Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y).then_with(|| a.cmp(b)),
        (Ok(_), Err(_)) => Ordering::Less,
        (Err(_), Ok(_)) => Ordering::Greater,
        _ => a.cmp(b),
    }
}

impl PartialEq for TaxonSet {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

impl fmt::Debug for TaxonSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.labels()).finish()
    }
}
