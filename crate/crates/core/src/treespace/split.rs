use std::fmt;

use super::taxa::{full_mask, TaxonSet};
use super::TreeError;

/// An interior bipartition of the taxa.
///
/// Stored as the side that does not contain taxon index 0, so two splits are
/// equal exactly when they describe the same bipartition.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Split {
    bits: u64,
    n: u8,
}

impl Split {
    /// Canonicalizes `bits` (either side may be given) and checks that the split is interior.
    pub fn from_bits(taxa: &TaxonSet, bits: u64) -> Result<Self, TreeError> {
        Self::from_bits_n(taxa.len(), bits)
    }

    pub fn from_bits_n(n: usize, bits: u64) -> Result<Self, TreeError> {
        let full = full_mask(n);
        let mut b = bits & full;
        if b & 1 == 1 {
            b = full & !b;
        }
        let size = b.count_ones();
        if size < 2 || size as usize > n - 2 {
            return Err(TreeError::NotInterior { size, n });
        }
        Ok(Split { bits: b, n: n as u8 })
    }

    pub fn from_labels<S: AsRef<str>>(taxa: &TaxonSet, side: &[S]) -> Result<Self, TreeError> {
        let mut bits = 0u64;
        for s in side {
            let i = taxa
                .index_of(s.as_ref())
                .ok_or_else(|| TreeError::UnknownTaxon(s.as_ref().to_string()))?;
            bits |= 1 << i;
        }
        Self::from_bits(taxa, bits)
    }

    /// The stored side, never containing taxon 0.
    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn n_taxa(&self) -> usize {
        self.n as usize
    }

    pub fn side_size(&self) -> u32 {
        self.bits.count_ones()
    }

    pub fn contains(&self, taxon: usize) -> bool {
        self.bits >> taxon & 1 == 1
    }

    /// True iff some intersection of the two bipartitions' sides is empty.
    pub fn is_compatible_with(&self, other: &Split) -> bool {
        let (a, b) = (self.bits, other.bits);
        a & b == 0 || a & !b == 0 || b & !a == 0
    }

    /// Checked compatibility that also rejects splits over different taxon counts.
    pub fn compatible(&self, other: &Split) -> Result<bool, TreeError> {
        if self.n != other.n {
            return Err(TreeError::TaxaMismatch);
        }
        Ok(self.is_compatible_with(other))
    }

    /// Human-readable form using taxon labels, e.g. `{1,2}|{3,4,5}`.
    pub fn display_with(&self, taxa: &TaxonSet) -> String {
        let side = |mask: u64| {
            (0..taxa.len())
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| taxa.label(i))
                .collect::<Vec<_>>()
                .join(",")
        };
        let full = full_mask(self.n as usize);
        format!("{{{}}}|{{{}}}", side(self.bits), side(full & !self.bits))
    }
}

impl fmt::Debug for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let idx: Vec<String> = (0..self.n as usize)
            .filter(|i| self.bits >> i & 1 == 1)
            .map(|i| (i + 1).to_string())
            .collect();
        write!(f, "{{{}}}", idx.join(","))
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(taxa: &TaxonSet, side: &[&str]) -> Split {
        Split::from_labels(taxa, side).unwrap()
    }

    #[test]
    fn compatibility_examples() {
        let t = TaxonSet::numbered(5).unwrap();
        let a = s(&t, &["1", "2"]);
        assert!(!a.is_compatible_with(&s(&t, &["1", "3"])));
        assert!(a.is_compatible_with(&a));
        assert!(a.is_compatible_with(&s(&t, &["4", "5"])));
    }

    #[test]
    fn canonical_form() {
        let t = TaxonSet::numbered(5).unwrap();
        assert_eq!(s(&t, &["1", "2"]), s(&t, &["3", "4", "5"]));
        assert_eq!(s(&t, &["1", "2"]).bits(), 0b11100);
        assert!(Split::from_labels(&t, &["1"]).is_err());
        assert!(Split::from_labels(&t, &["1", "2", "3", "4"]).is_err());
        assert!(Split::from_labels(&t, &["9", "2"]).is_err());
    }

    #[test]
    fn mismatched_taxa() {
        let a = Split::from_bits_n(5, 0b00110).unwrap();
        let b = Split::from_bits_n(6, 0b00110).unwrap();
        assert_eq!(a.compatible(&b), Err(TreeError::TaxaMismatch));
    }

    fn four_intersections(n: usize, a: u64, b: u64) -> bool {
        let full = full_mask(n);
        let (ac, bc) = (full & !a, full & !b);
        a & b == 0 || a & bc == 0 || ac & b == 0 || ac & bc == 0
    }

    proptest! {
        #[test]
        fn compatibility_matches_definition(n in 4usize..12, x in any::<u64>(), y in any::<u64>(), fx in any::<bool>(), fy in any::<bool>()) {
            let full = full_mask(n);
            let (Ok(a), Ok(b)) = (Split::from_bits_n(n, x), Split::from_bits_n(n, y)) else { return Ok(()); };
            // either side of the raw input must give the same answer
            let ra = if fx { full & !a.bits() } else { a.bits() };
            let rb = if fy { full & !b.bits() } else { b.bits() };
            prop_assert_eq!(a.is_compatible_with(&b), four_intersections(n, ra, rb));
            prop_assert_eq!(a.is_compatible_with(&b), b.is_compatible_with(&a));
        }
    }
}
