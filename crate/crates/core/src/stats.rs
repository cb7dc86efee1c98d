//! Small statistics toolbox: deterministic moments, percentiles, and
//! Kolmogorov–Smirnov distances for the empirical checks.

use crate::quadrature::pairwise_sum;

/// Mean via pairwise summation.
pub fn mean(values: &[f64]) -> f64 {
    assert!(!values.is_empty());
    pairwise_sum(values) / values.len() as f64
}

/// Unbiased sample variance (two-pass, pairwise sums).
pub fn sample_variance(values: &[f64]) -> f64 {
    assert!(values.len() >= 2);
    let m = mean(values);
    let sq: Vec<f64> = values.iter().map(|v| (v - m) * (v - m)).collect();
    pairwise_sum(&sq) / (values.len() - 1) as f64
}

/// Standard error of the sample mean.
pub fn mean_standard_error(values: &[f64]) -> f64 {
    (sample_variance(values) / values.len() as f64).sqrt()
}

/// Standard error of the sample variance, from the fourth central moment:
/// `Var(s^2) ~ (m4 - m2^2) / n`.
pub fn variance_standard_error(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let m = mean(values);
    let sq: Vec<f64> = values.iter().map(|v| (v - m) * (v - m)).collect();
    let m2 = pairwise_sum(&sq) / n;
    let q: Vec<f64> = sq.iter().map(|s| s * s).collect();
    let m4 = pairwise_sum(&q) / n;
    ((m4 - m2 * m2).max(0.0) / n).sqrt()
}

/// Percentile in [0, 1] by linear interpolation on the sorted copy.
pub fn percentile(values: &[f64], p: f64) -> f64 {
    assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("NaN in percentile input"));
    let idx = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = idx.floor() as usize;
    let hi = idx.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let w = idx - lo as f64;
        sorted[lo] * (1.0 - w) + sorted[hi] * w
    }
}

pub fn median(values: &[f64]) -> f64 {
    percentile(values, 0.5)
}

/// Kolmogorov–Smirnov distance between the empirical distribution of
/// `samples` and a reference CDF.
pub fn ks_distance_to_cdf(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("NaN in KS input"));
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - f).abs());
    }
    d
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(|u, v| u.partial_cmp(v).expect("NaN in KS input"));
    xb.sort_by(|u, v| u.partial_cmp(v).expect("NaN in KS input"));
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let mut i = 0;
    let mut j = 0;
    let mut d: f64 = 0.0;
    while i < xa.len() && j < xb.len() {
        if xa[i] <= xb[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic two-sample KS p-value via the Kolmogorov distribution
/// `Q(t) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 t^2)`.
pub fn ks_two_sample_p_value(d: f64, na: usize, nb: usize) -> f64 {
    let ne = (na as f64 * nb as f64) / (na as f64 + nb as f64);
    let t = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    let mut p = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64).powi(2) * t * t).exp();
        p += if k % 2 == 1 { 2.0 * term } else { -2.0 * term };
        if term < 1e-16 {
            break;
        }
    }
    p.clamp(0.0, 1.0)
}
