//! Closed-form Brownian motion kernels used as ground truth: the spider on
//! `BHV_4` and the kernel started at the star tree.

use std::f64::consts::PI;

use statrs::function::erf::erfc;

use super::KernelError;
use crate::treespace::{double_factorial, Split, Tree};

fn gauss(x: f64, t: f64) -> f64 {
    (-x * x / (2.0 * t)).exp() / (2.0 * PI * t).sqrt()
}

fn phi(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Axis and position of a tree in `BHV_4` (the star is position 0 on no axis).
fn axis(x: &Tree) -> Result<(Option<Split>, f64), KernelError> {
    if x.n_taxa() != 4 {
        return Err(KernelError::NotFourTaxa(x.n_taxa()));
    }
    Ok(match x.edges().first() {
        Some(&(s, l)) => (Some(s), l),
        None => (None, 0.0),
    })
}

/// Heat kernel of Walsh Brownian motion on the three-legged spider with equal
/// weights: `g(b−a) − g(b+a)/3` on the source's axis and `2 g(b+a)/3` elsewhere.
pub fn spider4_density(y: &Tree, x0: &Tree, t0: f64) -> Result<f64, KernelError> {
    let (sa, a) = axis(x0)?;
    let (sb, b) = axis(y)?;
    Ok(match (sa, sb) {
        (Some(p), Some(q)) if p == q => gauss(b - a, t0) - gauss(b + a, t0) / 3.0,
        _ => 2.0 / 3.0 * gauss(b + a, t0),
    })
}

/// Mass the spider kernel puts on `(0, b]` of one axis, from a source at `a` on
/// the same axis or on another one.
pub fn spider4_axis_cdf(b: f64, a: f64, same_axis: bool, t0: f64) -> f64 {
    let s = t0.sqrt();
    let outer = phi((b + a) / s) - phi(a / s);
    if same_axis {
        phi((b - a) / s) - phi(-a / s) - outer / 3.0
    } else {
        2.0 / 3.0 * outer
    }
}

/// Brownian motion kernel from the star tree: a Gaussian in every maximal
/// orthant, each orthant receiving mass `1/(2N−5)!!`.
pub fn star_source_density(y: &Tree, t0: f64) -> f64 {
    if !y.is_resolved() {
        return 0.0;
    }
    star_source_log_density(y, t0).exp()
}

pub fn star_source_log_density(y: &Tree, t0: f64) -> f64 {
    if !y.is_resolved() {
        return f64::NEG_INFINITY;
    }
    let d = y.max_edges() as f64;
    let k = double_factorial(2 * y.n_taxa() as u64 - 5) as f64;
    d * std::f64::consts::LN_2 - k.ln() - 0.5 * d * (2.0 * PI * t0).ln() - y.norm_sq() / (2.0 * t0)
}
