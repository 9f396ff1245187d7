//! Monte Carlo summaries and Kolmogorov–Smirnov distances.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub variance: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub wall_time_s: f64,
}

impl MCEstimate {
    pub fn from_samples(xs: &[f64], seed: u64, wall_time_s: f64) -> Result<Self> {
        if xs.len() < 2 {
            return Err(Error::InvalidInput(format!("need at least 2 samples, got {}", xs.len())));
        }
        let (mean, variance) = mean_var(xs);
        Ok(Self { mean, variance, stderr: (variance / xs.len() as f64).sqrt(), n_samples: xs.len(), seed, wall_time_s })
    }

    /// |mean - target| measured in standard errors.
    pub fn z_score(&self, target: f64) -> f64 {
        (self.mean - target).abs() / self.stderr
    }

    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.stderr
    }
}

/// Two-pass mean and unbiased variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    let corr: f64 = xs.iter().map(|x| x - mean).sum();
    (mean, (ss - corr * corr / n) / (n - 1.0))
}

/// Sample covariance and a standard error for it (from the spread of the
/// centered products).
pub fn covariance(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let (mx, _) = mean_var(xs);
    let (my, _) = mean_var(ys);
    let prods: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).collect();
    let n = prods.len() as f64;
    let (mp, vp) = mean_var(&prods);
    (mp * n / (n - 1.0), (vp / n).sqrt())
}

/// Two-sample KS statistic sup |F_a - F_b|.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// One-sample KS statistic against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in v.iter().enumerate() {
        let f = cdf(*x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    d
}

/// Median of a slice.
pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
