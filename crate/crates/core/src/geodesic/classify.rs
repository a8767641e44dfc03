use super::Geodesic;
use crate::treespace::Tree;

/// Transition parameters closer than this are one crossing point.
const TIE_TOLERANCE: f64 = 1e-12;

/// A point in `(0, 1)` where the path changes orthant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Crossing {
    pub t: f64,
    pub codim: usize,
}

/// An open parameter interval travelled inside one orthant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Leg {
    pub start: f64,
    pub end: f64,
    pub codim: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Classification {
    pub crossings: Vec<Crossing>,
    pub legs: Vec<Leg>,
    pub start_codim: usize,
    pub end_codim: usize,
    /// Both endpoints resolved and only codimension-1 points are met.
    pub is_simple: bool,
    /// The path with its starting point removed meets no codimension ≥ 2 point and
    /// ends at a resolved tree. Used for paths from unresolved centers.
    pub is_simple_after_start: bool,
    pub is_cone_path: bool,
    /// Number of codimension-1 crossings.
    pub nu: usize,
    /// Codimensions of the orthants of codimension > 1 traversed, in path order.
    pub high_codim: Vec<usize>,
}

impl Classification {
    /// Sum of the codimensions of the high-codimension orthants traversed.
    pub fn penalty(&self) -> usize {
        self.high_codim.iter().sum()
    }
}

impl Geodesic {
    pub fn classify(&self) -> Classification {
        let dim = self.x1.max_edges();
        let n_common = self.common.len();
        let support = &self.support;

        // group pairs whose transitions coincide
        let mut groups: Vec<(f64, usize, usize)> = Vec::new(); // (t, |A|, |B|)
        for p in support {
            let t = p.transition();
            match groups.last_mut() {
                Some(g) if t - g.0 <= TIE_TOLERANCE => {
                    g.1 += p.a.len();
                    g.2 += p.b.len();
                }
                _ => groups.push((t, p.a.len(), p.b.len())),
            }
        }

        let total_a: usize = groups.iter().map(|g| g.1).sum();
        let mut legs = Vec::with_capacity(groups.len() + 1);
        let mut crossings = Vec::with_capacity(groups.len());
        let mut count = n_common + total_a;
        let mut start = 0.0;
        for &(t, na, nb) in &groups {
            legs.push(Leg {
                start,
                end: t,
                codim: dim - count,
            });
            crossings.push(Crossing {
                t,
                codim: dim - (count - na),
            });
            count = count - na + nb;
            start = t;
        }
        legs.push(Leg {
            start,
            end: 1.0,
            codim: dim - count,
        });

        let start_codim = self.x1.codim();
        let end_codim = self.x2.codim();
        let points_ok = crossings.iter().all(|c| c.codim <= 1);
        let legs_ok = legs.iter().all(|l| l.codim == 0);
        let is_simple = start_codim == 0 && end_codim == 0 && points_ok && legs_ok;
        let is_simple_after_start = end_codim == 0 && points_ok && legs_ok;
        let nu = crossings.iter().filter(|c| c.codim == 1).count();

        let mut high_codim = Vec::new();
        for (i, leg) in legs.iter().enumerate() {
            if i > 0 && crossings[i - 1].codim > 1 {
                high_codim.push(crossings[i - 1].codim);
            }
            if leg.codim > 1 {
                high_codim.push(leg.codim);
            }
        }

        let is_cone_path =
            self.x1.is_star() || self.x2.is_star() || (n_common == 0 && support.len() == 1);

        Classification {
            crossings,
            legs,
            start_codim,
            end_codim,
            is_simple,
            is_simple_after_start,
            is_cone_path,
            nu,
            high_codim,
        }
    }

    /// The first point of codimension ≥ 2 in `(0, t_max]`, with the tree there.
    pub fn nearest_high_codim_point(&self, t_max: f64) -> Option<(f64, Tree)> {
        self.classify()
            .crossings
            .iter()
            .find(|c| c.codim >= 2 && c.t <= t_max)
            .map(|c| (c.t, self.point(c.t)))
    }
}
