//! The vector of reported quantities, as a function of parameters.
//!
//! Every estimand is evaluated on the rows of a given sample, so jackknife
//! re-estimates (fitted on fewer firms) are still evaluated at the original
//! rows and line up index-for-index with the point estimate.

use serde::{Deserialize, Serialize};

use crate::baselines::TAUS;
use crate::effects::{coefficient_functions, LongRunReport, SieveCoefficients, Subgroup};
use crate::panel::EstimationSample;
use crate::pipeline::Estimates;
use crate::stage1::{material_proxy, Stage1Result};
use crate::stage2::{SieveSpec, Stage2Result};
use crate::stats::{mean, quantile_linear, quantile_lower, sorted};

/// Parameters of one fit, enough to evaluate every estimand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    pub ln_alpha_m_theta: f64,
    pub theta: f64,
    pub alpha_m: f64,
    pub alpha_k: f64,
    pub alpha_l: f64,
    pub gamma: Vec<f64>,
    pub sieve: SieveSpec,
}

impl ParamSet {
    pub fn new(s1: &Stage1Result, s2: &Stage2Result) -> Self {
        Self {
            ln_alpha_m_theta: s1.ln_alpha_m_theta,
            theta: s1.theta,
            alpha_m: s1.alpha_m,
            alpha_k: s2.alpha_k,
            alpha_l: s2.alpha_l,
            gamma: s2.gamma.clone(),
            sieve: s2.spec,
        }
    }

    pub fn of(est: &Estimates) -> Self {
        Self::new(&est.stage1, &est.stage2)
    }
}

/// Names of the estimand vector: scalars first, then `lbe[i]`, `lfe[i]`
/// for every lag-aligned row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimandLayout {
    pub names: Vec<String>,
    pub n_scalar: usize,
    pub n_rows: usize,
}

impl EstimandLayout {
    pub fn new(gamma_names: &[String], n_rows: usize) -> Self {
        let mut names: Vec<String> = [
            "alpha_m",
            "theta",
            "ln_alpha_m_theta",
            "alpha_k",
            "alpha_l",
            "scale_elasticity",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        names.extend(gamma_names.iter().map(|g| format!("gamma_{g}")));
        for g in Subgroup::ALL {
            for effect in ["lbe", "lfe"] {
                for stat in ["mean", "q1", "median", "q3"] {
                    names.push(format!("{effect}_{stat}_{}", group_key(g)));
                }
            }
        }
        names.extend(
            [
                "mean_persistence",
                "lbe_long_run",
                "lfe_long_run",
                "total_per_10pp",
                "lbe_slope_omega",
                "lbe_slope_x",
                "lbe_slope_xbar",
                "lfe_slope_omega",
                "lfe_slope_x",
                "lfe_slope_xbar",
                "premium_mean_diff",
            ]
            .iter()
            .map(|s| s.to_string()),
        );
        names.extend(TAUS.iter().map(|t| premium_tau_name(*t)));
        let n_scalar = names.len();
        names.extend((0..n_rows).map(|i| format!("lbe[{i}]")));
        names.extend((0..n_rows).map(|i| format!("lfe[{i}]")));
        Self {
            names,
            n_scalar,
            n_rows,
        }
    }

    pub fn of(est: &Estimates) -> Self {
        Self::new(&est.stage2.gamma_names, est.sample.n_pairs())
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn lbe_row(&self, i: usize) -> usize {
        self.n_scalar + i
    }

    pub fn lfe_row(&self, i: usize) -> usize {
        self.n_scalar + self.n_rows + i
    }
}

pub fn group_key(g: Subgroup) -> &'static str {
    match g {
        Subgroup::All => "all",
        Subgroup::Exporters => "exporters",
        Subgroup::NonExporters => "non_exporters",
    }
}

pub fn premium_tau_name(tau: f64) -> String {
    format!("premium_beta1_{tau:.2}")
}

/// Evaluates every estimand at `params` on the rows and outcomes of
/// `sample`. Empty subgroups and non-stationary long-run values give NaN.
pub fn evaluate(params: &ParamSet, sample: &EstimationSample) -> Vec<f64> {
    let coef = SieveCoefficients::from_gamma(&params.gamma, params.sieve.kind);
    let n = sample.n_pairs();
    let mut lbe = Vec::with_capacity(n);
    let mut lfe = Vec::with_capacity(n);
    let mut persistence = Vec::with_capacity(n);
    let mut exporter_lag = Vec::with_capacity(n);
    let mut omega = Vec::with_capacity(n);
    let mut exporter_now = Vec::with_capacity(n);
    for p in &sample.pairs {
        let lag = &sample.obs[p.lagged];
        let cur = &sample.obs[p.current];
        let w = material_proxy(lag.ln_rel_price, lag.m, params.ln_alpha_m_theta, params.alpha_m)
            - params.alpha_k * lag.k
            - params.alpha_l * lag.l;
        let g = coef.gradient(w, lag.x, lag.xbar);
        lbe.push(g.lbe);
        lfe.push(g.lfe);
        persistence.push(g.persistence);
        exporter_lag.push(lag.x > 0.0);
        let eta = params.ln_alpha_m_theta - cur.ln_share;
        omega.push(
            cur.y - params.alpha_k * cur.k - params.alpha_l * cur.l - params.alpha_m * cur.m - eta,
        );
        exporter_now.push(cur.x > 0.0);
    }

    let mut out = vec![
        params.alpha_m,
        params.theta,
        params.ln_alpha_m_theta,
        params.alpha_k,
        params.alpha_l,
        params.alpha_k + params.alpha_l + params.alpha_m,
    ];
    out.extend_from_slice(&params.gamma);
    for g in Subgroup::ALL {
        for values in [&lbe, &lfe] {
            let v: Vec<f64> = values
                .iter()
                .zip(&exporter_lag)
                .filter(|(_, &e)| g.contains(e))
                .map(|(v, _)| *v)
                .collect();
            if v.is_empty() {
                out.extend([f64::NAN; 4]);
            } else {
                let s = sorted(&v);
                out.extend([
                    mean(&v),
                    quantile_linear(&s, 0.25),
                    quantile_linear(&s, 0.5),
                    quantile_linear(&s, 0.75),
                ]);
            }
        }
    }
    let lr = LongRunReport::new(mean(&lbe), mean(&lfe), mean(&persistence));
    out.extend([
        lr.mean_persistence,
        lr.lbe_long_run.unwrap_or(f64::NAN),
        lr.lfe_long_run.unwrap_or(f64::NAN),
        lr.total_per_10pp.unwrap_or(f64::NAN),
    ]);
    let f = coefficient_functions(&coef);
    out.extend([f.lbe.omega, f.lbe.x, f.lbe.xbar, f.lfe.omega, f.lfe.x, f.lfe.xbar]);

    let exp: Vec<f64> = select(&omega, &exporter_now, true);
    let non: Vec<f64> = select(&omega, &exporter_now, false);
    if exp.is_empty() || non.is_empty() {
        out.extend(std::iter::repeat_n(f64::NAN, 1 + TAUS.len()));
    } else {
        out.push(mean(&exp) - mean(&non));
        let (se, sn) = (sorted(&exp), sorted(&non));
        out.extend(
            TAUS.iter()
                .map(|&t| quantile_lower(&se, t) - quantile_lower(&sn, t)),
        );
    }
    out.extend(lbe);
    out.extend(lfe);
    out
}

fn select(values: &[f64], flags: &[bool], want: bool) -> Vec<f64> {
    values
        .iter()
        .zip(flags)
        .filter(|(_, &f)| f == want)
        .map(|(v, _)| *v)
        .collect()
}
