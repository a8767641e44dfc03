use rand::seq::SliceRandom;
use rand::Rng;

use super::{distance, geodesic, GeodesicError};
use crate::treespace::Tree;

#[derive(Clone, Debug)]
pub struct FrechetMean {
    pub mean: Tree,
    /// `(1/n) Σ d(mean, x_i)²`.
    pub variance: f64,
}

/// Mean squared distance from `z` to the data.
pub fn frechet_variance(z: &Tree, data: &[Tree]) -> Result<f64, GeodesicError> {
    if data.is_empty() {
        return Err(GeodesicError::EmptyData);
    }
    let mut acc = 0.0;
    for x in data {
        acc += distance(z, x)?.powi(2);
    }
    Ok(acc / data.len() as f64)
}

/// Sturm's inductive mean: `z_{k+1} = Γ_{z_k, x}(1/(k+2))` for a random datum `x`.
///
/// Data are visited in a fresh random order on every pass, so each step's datum
/// is uniform but every datum is used equally often.
pub fn frechet_mean(
    data: &[Tree],
    iterations: usize,
    rng: &mut impl Rng,
) -> Result<FrechetMean, GeodesicError> {
    if data.is_empty() {
        return Err(GeodesicError::EmptyData);
    }
    let n = data.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut z = data[order[0]].clone();
    let mut pos = 1;
    for k in 0..iterations {
        if pos == n {
            order.shuffle(rng);
            pos = 0;
        }
        let x = &data[order[pos]];
        pos += 1;
        z = geodesic(&z, x)?.point(1.0 / (k as f64 + 2.0));
    }
    let variance = frechet_variance(&z, data)?;
    Ok(FrechetMean { mean: z, variance })
}
