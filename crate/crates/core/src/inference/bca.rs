//! Jackknife acceleration and bias-corrected accelerated percentiles.
//!
//! Percentiles use linear interpolation between order statistics at rank
//! `h = (B - 1) p` on the sorted replicates (Hyndman and Fan type 7).

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::stats::{quantile_linear, sorted};

fn std_normal() -> Normal {
    Normal::standard()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Acceleration {
    pub c: f64,
    /// Jackknife values had zero spread; `c` was set to 0.
    pub degenerate: bool,
}

/// `c = sum d^3 / (6 (sum d^2)^{3/2})` with `d = mean - Z_j`.
pub fn jackknife_acceleration(values: &[f64]) -> Acceleration {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.len() < 2 {
        return Acceleration {
            c: 0.0,
            degenerate: true,
        };
    }
    let m = finite.iter().sum::<f64>() / finite.len() as f64;
    let (mut s2, mut s3) = (0.0, 0.0);
    for v in &finite {
        let d = m - v;
        s2 += d * d;
        s3 += d * d * d;
    }
    if s2 <= f64::EPSILON * f64::EPSILON * m.abs().max(1.0).powi(2) * finite.len() as f64 {
        return Acceleration {
            c: 0.0,
            degenerate: true,
        };
    }
    Acceleration {
        c: s3 / (6.0 * s2.powf(1.5)),
        degenerate: false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BcaInterval {
    pub point: f64,
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
    pub q0: f64,
    pub c: f64,
    /// Adjusted percentile ranks.
    pub alpha1: f64,
    pub alpha2: f64,
    /// Every replicate fell on one side of the point; `q0` was clamped.
    pub clamped: bool,
}

impl BcaInterval {
    pub fn undefined(point: f64, level: f64) -> Self {
        Self {
            point,
            lo: f64::NAN,
            hi: f64::NAN,
            level,
            q0: f64::NAN,
            c: f64::NAN,
            alpha1: f64::NAN,
            alpha2: f64::NAN,
            clamped: false,
        }
    }

    pub fn excludes_zero(&self) -> bool {
        self.lo > 0.0 || self.hi < 0.0
    }
}

pub fn bca_interval(point: f64, replicates: &[f64], c: f64, level: f64) -> Result<BcaInterval> {
    let b = replicates.len();
    if b < 2 {
        return Err(Error::InvalidInput(format!(
            "BCa needs at least 2 replicates, got {b}"
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidInput(format!("level must lie in (0, 1), got {level}")));
    }
    let nd = std_normal();
    let below = replicates.iter().filter(|&&z| z < point).count();
    let clamped = below == 0 || below == b;
    let frac = match below {
        0 => 0.5 / b as f64,
        k if k == b => (b as f64 - 0.5) / b as f64,
        k => k as f64 / b as f64,
    };
    if clamped {
        log::warn!("all {b} replicates on one side of the point estimate {point}; q0 clamped");
    }
    let q0 = if frac == 0.5 { 0.0 } else { nd.inverse_cdf(frac) };
    let tail = 0.5 * (1.0 - level);
    // With q0 = c = 0 the ranks are the nominal ones; skip the Phi round trip
    // so the interval is exactly the percentile interval.
    let adjust = |p: f64, upper: bool| {
        if q0 == 0.0 && c == 0.0 {
            return p;
        }
        let s = q0 + nd.inverse_cdf(p);
        let denom = 1.0 - c * s;
        if denom > 0.0 {
            nd.cdf(q0 + s / denom)
        } else if upper {
            1.0
        } else {
            0.0
        }
    };
    let alpha1 = adjust(tail, false);
    let alpha2 = adjust(1.0 - tail, true);
    let s = sorted(replicates);
    Ok(BcaInterval {
        point,
        lo: quantile_linear(&s, alpha1),
        hi: quantile_linear(&s, alpha2),
        level,
        q0,
        c,
        alpha1,
        alpha2,
        clamped,
    })
}

/// Plain percentile interval at the same convention.
pub fn percentile_interval(replicates: &[f64], level: f64) -> (f64, f64) {
    let s = sorted(replicates);
    let tail = 0.5 * (1.0 - level);
    (quantile_linear(&s, tail), quantile_linear(&s, 1.0 - tail))
}
