//! Descriptive statistics with explicit quantile conventions.

use std::cmp::Ordering;

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    s
}

/// Linear interpolation between order statistics at rank `h = (n - 1) p`
/// (Hyndman and Fan type 7). `sorted` must be ascending and non-empty.
pub fn quantile_linear(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Lower inverse of the empirical CDF: the smallest value `q` with
/// `F(q) >= tau`, i.e. `sorted[ceil(n tau) - 1]`.
pub fn quantile_lower(sorted: &[f64], tau: f64) -> f64 {
    let n = sorted.len();
    let k = ((n as f64 * tau).ceil() as usize).clamp(1, n);
    sorted[k - 1]
}
