//! Geodesics in BHV tree space.
//!
//! Paths are computed with the geodesic tree path algorithm: splits compatible
//! with the whole other tree are common and move linearly; the remaining
//! splits start as a single support pair, refined by minimum-weight vertex
//! covers of the incompatibility graph until no refinement shortens the path.

mod classify;
mod flow;
mod frechet;

pub use classify::{Classification, Crossing, Leg};
pub use flow::min_weight_cover;
pub use frechet::{frechet_mean, frechet_variance, FrechetMean};

use thiserror::Error;

use crate::treespace::{Split, Tree};

/// Relative tolerance of the vertex-cover refinement test.
const COVER_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeodesicError {
    #[error("trees are over different taxon sets")]
    TaxaMismatch,
    #[error("geodesic parameter {0} outside [0, 1]")]
    ParameterOutOfRange(f64),
    #[error("no data")]
    EmptyData,
}

/// A split of one endpoint compatible with every split of the other.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CommonEdge {
    pub split: Split,
    /// Length in the first tree (0 if absent).
    pub from: f64,
    /// Length in the second tree (0 if absent).
    pub to: f64,
}

/// `(A_i, B_i)`: splits of the first tree dropped together, and splits of the
/// second tree gained together, at one transition time.
#[derive(Clone, Debug, PartialEq)]
pub struct SupportPair {
    pub a: Vec<(Split, f64)>,
    pub b: Vec<(Split, f64)>,
    pub norm_a: f64,
    pub norm_b: f64,
}

impl SupportPair {
    fn new(a: Vec<(Split, f64)>, b: Vec<(Split, f64)>) -> Self {
        let norm_a = a.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt();
        let norm_b = b.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt();
        SupportPair {
            a,
            b,
            norm_a,
            norm_b,
        }
    }

    pub fn ratio(&self) -> f64 {
        self.norm_a / self.norm_b
    }

    /// Parameter at which `A_i` shrinks to zero and `B_i` appears.
    pub fn transition(&self) -> f64 {
        self.norm_a / (self.norm_a + self.norm_b)
    }
}

#[derive(Clone, Debug)]
pub struct Geodesic {
    x1: Tree,
    x2: Tree,
    common: Vec<CommonEdge>,
    support: Vec<SupportPair>,
    length: f64,
}

/// The geodesic from `x1` to `x2`.
pub fn geodesic(x1: &Tree, x2: &Tree) -> Result<Geodesic, GeodesicError> {
    if !x1.taxa().same_as(x2.taxa()) {
        return Err(GeodesicError::TaxaMismatch);
    }
    let mut common = Vec::new();
    let mut a_set = Vec::new();
    let mut b_set = Vec::new();
    for &(s, len) in x1.edges() {
        if x2.splits().all(|t| s.is_compatible_with(&t)) {
            common.push(CommonEdge {
                split: s,
                from: len,
                to: x2.length(&s),
            });
        } else {
            a_set.push((s, len));
        }
    }
    for &(s, len) in x2.edges() {
        if x1.contains(&s) {
            continue;
        }
        if x1.splits().all(|t| s.is_compatible_with(&t)) {
            common.push(CommonEdge {
                split: s,
                from: 0.0,
                to: len,
            });
        } else {
            b_set.push((s, len));
        }
    }
    common.sort_by_key(|p| p.split);
    debug_assert_eq!(a_set.is_empty(), b_set.is_empty());

    let mut support = Vec::new();
    if !a_set.is_empty() {
        support.push(SupportPair::new(a_set, b_set));
        let mut i = 0;
        while i < support.len() {
            match refine(&support[i]) {
                Some((p, q)) => {
                    support.splice(i..=i, [p, q]);
                }
                None => i += 1,
            }
        }
    }
    debug_assert!(support
        .windows(2)
        .all(|w| w[0].ratio() <= w[1].ratio() * (1.0 + 1e-9)));

    let sq: f64 = support
        .iter()
        .map(|p| (p.norm_a + p.norm_b).powi(2))
        .sum::<f64>()
        + common.iter().map(|c| (c.from - c.to).powi(2)).sum::<f64>();
    Ok(Geodesic {
        x1: x1.clone(),
        x2: x2.clone(),
        common,
        support,
        length: sq.sqrt(),
    })
}

/// BHV distance.
pub fn distance(x1: &Tree, x2: &Tree) -> Result<f64, GeodesicError> {
    geodesic(x1, x2).map(|g| g.length)
}

/// Splits `p` by a vertex cover lighter than 1 in normalized weights, if one exists.
fn refine(p: &SupportPair) -> Option<(SupportPair, SupportPair)> {
    if p.a.len() < 2 && p.b.len() < 2 {
        return None;
    }
    let (na2, nb2) = (p.norm_a * p.norm_a, p.norm_b * p.norm_b);
    let wa: Vec<f64> = p.a.iter().map(|e| e.1 * e.1 / na2).collect();
    let wb: Vec<f64> = p.b.iter().map(|e| e.1 * e.1 / nb2).collect();
    let mut edges = Vec::new();
    for (i, a) in p.a.iter().enumerate() {
        for (j, b) in p.b.iter().enumerate() {
            if !a.0.is_compatible_with(&b.0) {
                edges.push((i, j));
            }
        }
    }
    let (ca, cb, w) = min_weight_cover(&wa, &wb, &edges);
    if w >= 1.0 - COVER_TOLERANCE {
        return None;
    }
    let pick = |v: &[(Split, f64)], m: &[bool], keep: bool| -> Vec<(Split, f64)> {
        v.iter()
            .zip(m)
            .filter(|(_, &c)| c == keep)
            .map(|(e, _)| *e)
            .collect()
    };
    let c1 = pick(&p.a, &ca, true);
    let c2 = pick(&p.a, &ca, false);
    let d1 = pick(&p.b, &cb, false);
    let d2 = pick(&p.b, &cb, true);
    if c1.is_empty() || c2.is_empty() || d1.is_empty() || d2.is_empty() {
        return None;
    }
    Some((SupportPair::new(c1, d1), SupportPair::new(c2, d2)))
}

impl Geodesic {
    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn x1(&self) -> &Tree {
        &self.x1
    }

    pub fn x2(&self) -> &Tree {
        &self.x2
    }

    pub fn common(&self) -> &[CommonEdge] {
        &self.common
    }

    pub fn support(&self) -> &[SupportPair] {
        &self.support
    }

    /// Transition parameters of the support pairs, nondecreasing.
    pub fn transitions(&self) -> Vec<f64> {
        self.support.iter().map(|p| p.transition()).collect()
    }

    /// `Γ(t)`, the point at arc-length fraction `t`.
    pub fn evaluate(&self, t: f64) -> Result<Tree, GeodesicError> {
        if !(0.0..=1.0).contains(&t) {
            return Err(GeodesicError::ParameterOutOfRange(t));
        }
        Ok(self.point(t))
    }

    /// `Γ(t)` for `t` already known to lie in `[0, 1]`.
    pub fn point(&self, t: f64) -> Tree {
        if t <= 0.0 {
            return self.x1.clone();
        }
        if t >= 1.0 {
            return self.x2.clone();
        }
        let mut edges: Vec<(Split, f64)> = self
            .common
            .iter()
            .map(|c| (c.split, (1.0 - t) * c.from + t * c.to))
            .collect();
        for p in &self.support {
            let ti = p.transition();
            let (na, nb) = (p.norm_a, p.norm_b);
            if t < ti {
                let f = ((1.0 - t) * na - t * nb) / na;
                edges.extend(p.a.iter().map(|&(s, l)| (s, f * l)));
            } else if t > ti {
                let f = (t * nb - (1.0 - t) * na) / nb;
                edges.extend(p.b.iter().map(|&(s, l)| (s, f * l)));
            }
        }
        Tree::from_trusted(self.x1.taxa(), edges)
    }

    /// The same path traversed from `x2` to `x1`.
    pub fn reversed(&self) -> Geodesic {
        Geodesic {
            x1: self.x2.clone(),
            x2: self.x1.clone(),
            common: self
                .common
                .iter()
                .map(|c| CommonEdge {
                    split: c.split,
                    from: c.to,
                    to: c.from,
                })
                .collect(),
            support: self
                .support
                .iter()
                .rev()
                .map(|p| SupportPair::new(p.b.clone(), p.a.clone()))
                .collect(),
            length: self.length,
        }
    }
}
