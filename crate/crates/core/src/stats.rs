//! Summary statistics for traces and Monte Carlo output.

use rand::Rng;

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
}

pub fn median(x: &[f64]) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.5)
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = p.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quantile(x: &[f64], p: f64) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, p)
}

pub fn log_sum_exp(x: &[f64]) -> f64 {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    m + x.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

pub fn log_mean_exp(x: &[f64]) -> f64 {
    log_sum_exp(x) - (x.len() as f64).ln()
}

/// `ln(e^a + e^b)`.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Standard error of the mean by non-overlapping batch means.
pub fn batch_means_se(x: &[f64], batches: usize) -> f64 {
    let b = batches.max(2).min(x.len());
    let size = x.len() / b;
    let means: Vec<f64> = (0..b).map(|i| mean(&x[i * size..(i + 1) * size])).collect();
    (variance(&means) / b as f64).sqrt()
}

/// Effective sample size implied by batch means.
pub fn effective_sample_size(x: &[f64], batches: usize) -> f64 {
    let se = batch_means_se(x, batches);
    if se == 0.0 {
        return x.len() as f64;
    }
    variance(x) / (se * se)
}

/// Kolmogorov–Smirnov distance between the empirical CDF of `sample` and `cdf`.
pub fn ks_distance(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in v.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    d
}

/// KS distance for a defective distribution: `sample` holds the draws that fell
/// in one part of the space, out of `n_total`, and `cdf` is that part's mass
/// function (so `cdf(inf)` may be below 1).
pub fn ks_distance_partial(sample: &[f64], n_total: usize, cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    let n = n_total as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in v.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    d.max((cdf(f64::INFINITY) - v.len() as f64 / n).abs())
}

/// Bootstrap standard error of `stat` over resamples of `x`.
pub fn bootstrap_se(
    x: &[f64],
    resamples: usize,
    rng: &mut impl Rng,
    stat: impl Fn(&[f64]) -> f64,
) -> f64 {
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    let mut buf = vec![0.0; n];
    let vals: Vec<f64> = (0..resamples)
        .map(|_| {
            for b in buf.iter_mut() {
                *b = x[rng.random_range(0..n)];
            }
            stat(&buf)
        })
        .collect();
    let finite: Vec<f64> = vals.into_iter().filter(|v| v.is_finite()).collect();
    if finite.len() < 2 {
        return f64::INFINITY;
    }
    variance(&finite).sqrt()
}

/// Gaussian kernel density estimate with Silverman's bandwidth.
pub struct Kde {
    data: Vec<f64>,
    h: f64,
}

impl Kde {
    pub fn new(data: &[f64]) -> Self {
        let sd = variance(data).sqrt();
        let iqr = quantile(data, 0.75) - quantile(data, 0.25);
        let s = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
        let h = 0.9 * s * (data.len() as f64).powf(-0.2);
        Self::with_bandwidth(data, h)
    }

    pub fn with_bandwidth(data: &[f64], h: f64) -> Self {
        Kde {
            data: data.to_vec(),
            h,
        }
    }

    pub fn bandwidth(&self) -> f64 {
        self.h
    }

    pub fn density(&self, x: f64) -> f64 {
        let c = 1.0 / (self.h * (2.0 * std::f64::consts::PI).sqrt() * self.data.len() as f64);
        c * self
            .data
            .iter()
            .map(|d| (-0.5 * ((x - d) / self.h).powi(2)).exp())
            .sum::<f64>()
    }
}
