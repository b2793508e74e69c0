//! Share-equation stage: the material elasticity and transitory shocks.
//!
//! Under the static first-order condition for materials the log expenditure
//! share equals `ln(alpha_M * theta) - eta`. Averaging the log shares
//! identifies the composite constant, the residuals are the shocks, and the
//! mean of `exp(eta)` separates `theta` from `alpha_M`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::EstimationSample;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage1Result {
    pub ln_alpha_m_theta: f64,
    pub theta: f64,
    pub alpha_m: f64,
    /// Shock estimate per panel row (`EstimationSample::obs` order).
    #[serde(skip)]
    pub eta: Vec<f64>,
    pub n_obs: usize,
}

pub fn estimate_stage1(sample: &EstimationSample) -> Result<Stage1Result> {
    let shares: Vec<f64> = sample.obs.iter().map(|o| o.ln_share).collect();
    estimate_from_log_shares(&shares)
}

/// Stage 1 on a raw vector of log material shares.
pub fn estimate_from_log_shares(ln_shares: &[f64]) -> Result<Stage1Result> {
    let n = ln_shares.len();
    if n < 2 {
        return Err(Error::Degenerate(format!(
            "stage 1 needs at least 2 observations, got {n}"
        )));
    }
    if let Some(bad) = ln_shares.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("log material share ({bad})")));
    }
    let ln_alpha_m_theta = ln_shares.iter().sum::<f64>() / n as f64;
    let eta: Vec<f64> = ln_shares.iter().map(|s| ln_alpha_m_theta - s).collect();
    let theta = eta.iter().map(|e| e.exp()).sum::<f64>() / n as f64;
    let alpha_m = ln_alpha_m_theta.exp() / theta;
    Ok(Stage1Result {
        ln_alpha_m_theta,
        theta,
        alpha_m,
        eta,
        n_obs: n,
    })
}

/// Per lag-aligned row: the stage-2 regressand and regressors.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedRow {
    /// Index into `EstimationSample::pairs`.
    pub pair: usize,
    pub firm: usize,
    /// `y - alpha_M m`.
    pub y_star: f64,
    pub k: f64,
    pub l: f64,
    pub k_lag: f64,
    pub l_lag: f64,
    /// `ln(rel_price_{t-1}) - ln(alpha_M theta) - (alpha_M - 1) m_{t-1}`.
    pub m_star_lag: f64,
    pub x_lag: f64,
    pub xbar_lag: f64,
    pub peers_lag: usize,
    pub isolated_lag: bool,
    pub region: usize,
    pub industry: usize,
    /// Current-period quantities used for productivity recovery.
    pub y: f64,
    pub m: f64,
    pub eta: f64,
}

#[derive(Debug, Clone)]
pub struct TransformedSample {
    pub rows: Vec<TransformedRow>,
    pub alpha_m: f64,
    pub n_regions: usize,
    pub n_industries: usize,
}

impl TransformedSample {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// The material proxy `m*` for a single observation.
pub fn material_proxy(ln_rel_price: f64, m: f64, ln_alpha_m_theta: f64, alpha_m: f64) -> f64 {
    ln_rel_price - ln_alpha_m_theta - (alpha_m - 1.0) * m
}

pub fn transform(sample: &EstimationSample, s1: &Stage1Result) -> TransformedSample {
    let rows = sample
        .pairs
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let cur = &sample.obs[p.current];
            let lag = &sample.obs[p.lagged];
            TransformedRow {
                pair: i,
                firm: cur.firm,
                y_star: cur.y - s1.alpha_m * cur.m,
                k: cur.k,
                l: cur.l,
                k_lag: lag.k,
                l_lag: lag.l,
                m_star_lag: material_proxy(lag.ln_rel_price, lag.m, s1.ln_alpha_m_theta, s1.alpha_m),
                x_lag: lag.x,
                xbar_lag: lag.xbar,
                peers_lag: lag.peer_count,
                isolated_lag: lag.isolated,
                region: cur.region,
                industry: cur.industry,
                y: cur.y,
                m: cur.m,
                eta: s1.eta[p.current],
            }
        })
        .collect();
    TransformedSample {
        rows,
        alpha_m: s1.alpha_m,
        n_regions: sample.regions.len(),
        n_industries: sample.industries.len(),
    }
}
