//! Descriptive and comparator procedures around the structural estimates:
//! exporter productivity premia, a one-sided dominance test, the
//! exogenous-Markov two-step regression, and the grand-average algebra.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample as sample_indices;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{premium_tau_name, IntervalSet};
use crate::linalg::{least_squares, Design};
use crate::panel::{compute_exposure, EstimationSample, ExposureMode, ExposureSpec, Panel};
use crate::pipeline::{estimate_sample, Estimates, PipelineSpec};
use crate::stage2::{FitOptions, SieveKind, SieveSpec, PIVOT_TOL};
use crate::stats::{mean, quantile_lower, sorted};

/// Quantile grid 0.20, 0.25, ..., 0.80.
pub const TAUS: [f64; 13] = [
    0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantilePremium {
    pub tau: f64,
    /// `Q_tau` of non-exporters.
    pub beta0: f64,
    /// `Q_tau(exporters) - Q_tau(non-exporters)`.
    pub beta1: f64,
    pub ci: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PremiumReport {
    pub n_exporters: usize,
    pub n_non_exporters: usize,
    pub mean_diff: f64,
    pub ci: Option<(f64, f64)>,
    pub quantiles: Vec<QuantilePremium>,
}

/// Mean and quantile premia. Quantiles are lower inverse-ECDF values,
/// which minimize the check-function loss of an intercept-plus-dummy
/// quantile regression.
pub fn premium(omega: &[f64], exporter: &[bool]) -> Result<PremiumReport> {
    if omega.len() != exporter.len() {
        return Err(Error::InvalidInput("omega and exporter flags differ in length".into()));
    }
    let exp: Vec<f64> = omega.iter().zip(exporter).filter(|(_, &e)| e).map(|(v, _)| *v).collect();
    let non: Vec<f64> = omega.iter().zip(exporter).filter(|(_, &e)| !e).map(|(v, _)| *v).collect();
    if exp.is_empty() {
        return Err(Error::EmptySubgroup("exporters".into()));
    }
    if non.is_empty() {
        return Err(Error::EmptySubgroup("non-exporters".into()));
    }
    let (se, sn) = (sorted(&exp), sorted(&non));
    Ok(PremiumReport {
        n_exporters: exp.len(),
        n_non_exporters: non.len(),
        mean_diff: mean(&exp) - mean(&non),
        ci: None,
        quantiles: TAUS
            .iter()
            .map(|&tau| {
                let q0 = quantile_lower(&sn, tau);
                QuantilePremium {
                    tau,
                    beta0: q0,
                    beta1: quantile_lower(&se, tau) - q0,
                    ci: None,
                }
            })
            .collect(),
    })
}

impl PremiumReport {
    /// Attaches bootstrap intervals computed for the premium estimands.
    pub fn with_intervals(mut self, set: &IntervalSet) -> Self {
        let ci = |name: &str| set.get(name).map(|iv| (iv.lo, iv.hi));
        self.ci = ci("premium_mean_diff");
        for q in &mut self.quantiles {
            q.ci = ci(&premium_tau_name(q.tau));
        }
        self
    }
}

/// Check-function loss of predicting `values` by `q`.
pub fn check_loss(values: &[f64], q: f64, tau: f64) -> f64 {
    values
        .iter()
        .map(|&v| {
            let u = v - q;
            u * (tau - if u < 0.0 { 1.0 } else { 0.0 })
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominanceConfig {
    /// Firms per subsample; `None` means `floor(n_firms^0.7)`.
    pub subsample_firms: Option<usize>,
    pub replications: usize,
    pub seed: u64,
}

impl Default for DominanceConfig {
    fn default() -> Self {
        Self {
            subsample_firms: None,
            replications: 500,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n_exporters: usize,
    pub n_non_exporters: usize,
    pub subsample_firms: usize,
    /// Subsamples containing both groups (the p-value denominator).
    pub replications_used: usize,
}

/// `sqrt(nm / (n + m)) * max(0, sup_x (F_exp(x) - F_non(x)))`.
pub fn dominance_statistic(exp: &[f64], non: &[f64]) -> f64 {
    let (n, m) = (exp.len(), non.len());
    let a = sorted(exp);
    let b = sorted(non);
    let (mut i, mut j) = (0usize, 0usize);
    let mut sup = 0.0f64;
    // sweep the pooled support, evaluating both ECDFs after each tie block
    while i < n || j < m {
        let x = match (a.get(i), b.get(j)) {
            (Some(&u), Some(&v)) => u.min(v),
            (Some(&u), None) => u,
            (None, Some(&v)) => v,
            (None, None) => break,
        };
        while i < n && a[i].partial_cmp(&x) != Some(Ordering::Greater) {
            i += 1;
        }
        while j < m && b[j].partial_cmp(&x) != Some(Ordering::Greater) {
            j += 1;
        }
        sup = sup.max(i as f64 / n as f64 - j as f64 / m as f64);
    }
    ((n * m) as f64 / (n + m) as f64).sqrt() * sup
}

/// One-sided Kolmogorov-Smirnov test of the null that exporters'
/// distribution first-order dominates non-exporters', with a firm-level
/// subsampling p-value.
pub fn dominance_test(
    omega: &[f64],
    exporter: &[bool],
    firm: &[usize],
    config: &DominanceConfig,
) -> Result<DominanceResult> {
    let n_firms = firm.iter().max().map_or(0, |f| f + 1);
    let split = |rows: &mut dyn Iterator<Item = usize>| {
        let (mut e, mut n) = (Vec::new(), Vec::new());
        for i in rows {
            if exporter[i] {
                e.push(omega[i]);
            } else {
                n.push(omega[i]);
            }
        }
        (e, n)
    };
    let (exp, non) = split(&mut (0..omega.len()));
    if exp.is_empty() || non.is_empty() {
        return Err(Error::EmptySubgroup(
            if exp.is_empty() { "exporters" } else { "non-exporters" }.into(),
        ));
    }
    let b = config
        .subsample_firms
        .unwrap_or_else(|| (n_firms as f64).powf(0.7).floor() as usize);
    if b < 2 || b > n_firms {
        return Err(Error::InvalidInput(format!(
            "subsample size {b} is not between 2 and the number of firms {n_firms}"
        )));
    }
    let statistic = dominance_statistic(&exp, &non);
    let mut by_firm: Vec<Vec<usize>> = vec![Vec::new(); n_firms];
    for (i, &f) in firm.iter().enumerate() {
        by_firm[f].push(i);
    }
    let stats: Vec<Option<f64>> = (0..config.replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(r as u64);
            let mut chosen = sample_indices(&mut rng, n_firms, b).into_vec();
            chosen.sort_unstable();
            let (e, n) = split(&mut chosen.iter().flat_map(|&f| by_firm[f].iter().copied()));
            (!e.is_empty() && !n.is_empty()).then(|| dominance_statistic(&e, &n))
        })
        .collect();
    let used: Vec<f64> = stats.into_iter().flatten().collect();
    if used.is_empty() {
        return Err(Error::Degenerate(
            "no subsample contained both exporters and non-exporters".into(),
        ));
    }
    let exceed = used.iter().filter(|&&s| s >= statistic).count();
    Ok(DominanceResult {
        statistic,
        p_value: exceed as f64 / used.len() as f64,
        n_exporters: exp.len(),
        n_non_exporters: non.len(),
        subsample_firms: b,
        replications_used: used.len(),
    })
}

/// OLS with a firm-clustered sandwich covariance scaled by `G / (G - 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteredOls {
    pub names: Vec<String>,
    pub coef: Vec<f64>,
    /// Cluster-robust standard errors; NaN for dropped columns.
    pub se: Vec<f64>,
    pub dropped: Vec<String>,
    pub clusters: usize,
    pub n: usize,
    #[serde(skip)]
    pub fitted: Vec<f64>,
}

impl ClusteredOls {
    pub fn coef_of(&self, name: &str) -> Option<(f64, f64)> {
        let i = self.names.iter().position(|n| n == name)?;
        Some((self.coef[i], self.se[i]))
    }
}

pub fn clustered_ols(
    design: &Design,
    names: Vec<String>,
    y: &[f64],
    cluster: &[usize],
) -> Result<ClusteredOls> {
    let fit = least_squares(design, y, PIVOT_TOL);
    if fit.rank() == 0 {
        return Err(Error::RankCollapse {
            rank: 0,
            required: 1,
        });
    }
    let fitted = design.mul_vec(&fit.coef);
    let resid: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let kept = &fit.kept;
    let k = kept.len();
    let n_clusters = cluster.iter().max().map_or(0, |c| c + 1);
    let mut scores = vec![DVector::<f64>::zeros(k); n_clusters];
    for (i, &c) in cluster.iter().enumerate() {
        for (a, &col) in kept.iter().enumerate() {
            scores[c][a] += design.get(i, col) * resid[i];
        }
    }
    let mut meat = DMatrix::<f64>::zeros(k, k);
    for s in &scores {
        meat += s * s.transpose();
    }
    let mut seen = vec![false; n_clusters];
    for &c in cluster {
        seen[c] = true;
    }
    let present = seen.iter().filter(|s| **s).count();
    let bread = fit.xtx_inverse();
    let scale = if present > 1 {
        present as f64 / (present as f64 - 1.0)
    } else {
        f64::NAN
    };
    let cov = &bread * meat * &bread * scale;
    let mut se = vec![f64::NAN; design.cols()];
    for (a, &col) in kept.iter().enumerate() {
        se[col] = cov[(a, a)].max(0.0).sqrt();
    }
    if !fit.dropped.is_empty() {
        log::warn!(
            "second-step design is collinear; dropped {:?}",
            fit.dropped.iter().map(|&i| &names[i]).collect::<Vec<_>>()
        );
    }
    Ok(ClusteredOls {
        dropped: fit.dropped.iter().map(|&i| names[i].clone()).collect(),
        names,
        coef: fit.coef,
        se,
        clusters: present,
        n: y.len(),
        fitted,
    })
}

/// Regression of `omega_tilde` on `(1, X_{t-1}, Xbar_{t-1})` plus optional
/// region and industry dummies (first level omitted), clustered by firm.
pub fn second_step(
    sample: &EstimationSample,
    omega_tilde: &[f64],
    fe_region: bool,
    fe_industry: bool,
) -> Result<ClusteredOls> {
    let n = sample.n_pairs();
    if omega_tilde.len() != n {
        return Err(Error::InvalidInput("omega_tilde is not aligned with the sample".into()));
    }
    let lag = |f: fn(&crate::panel::Observation) -> f64| -> Vec<f64> {
        sample.pairs.iter().map(|p| f(&sample.obs[p.lagged])).collect()
    };
    let mut d = Design::with_capacity(n, 3);
    let mut names = vec!["const".to_string(), "x".to_string(), "xbar".to_string()];
    d.push_column(std::iter::repeat_n(1.0, n));
    d.push_column(lag(|o| o.x));
    d.push_column(lag(|o| o.xbar));
    let cur = |p: &crate::panel::LaggedPair| &sample.obs[p.current];
    if fe_region {
        for level in 1..sample.regions.len() {
            names.push(format!("region_{level}"));
            d.push_column(sample.pairs.iter().map(|p| f64::from(u8::from(cur(p).region == level))));
        }
    }
    if fe_industry {
        for level in 1..sample.industries.len() {
            names.push(format!("industry_{level}"));
            d.push_column(
                sample
                    .pairs
                    .iter()
                    .map(|p| f64::from(u8::from(cur(p).industry == level))),
            );
        }
    }
    clustered_ols(&d, names, omega_tilde, &sample.pair_firms())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct TwoStepSpec {
    pub fe_region: bool,
    pub fe_industry: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwoStepResult {
    pub spec: TwoStepSpec,
    pub exposure: ExposureSpec,
    pub first_step_alpha: (f64, f64, f64),
    pub first_step_terms: Vec<String>,
    pub beta: ClusteredOls,
    #[serde(skip)]
    pub omega_tilde: Vec<f64>,
}

impl TwoStepResult {
    pub fn beta_x(&self) -> (f64, f64) {
        self.beta.coef_of("x").expect("x column present")
    }

    pub fn beta_xbar(&self) -> (f64, f64) {
        self.beta.coef_of("xbar").expect("xbar column present")
    }
}

/// Exogenous-Markov first step (sieve in `W` only) on grand-average
/// exposure, then the linear second step.
pub fn two_step(panel: &Panel, spec: TwoStepSpec, fit: &FitOptions) -> Result<TwoStepResult> {
    let exposure = ExposureSpec {
        mode: ExposureMode::Grand,
        ..ExposureSpec::default()
    };
    let series = compute_exposure(panel, exposure);
    let sample = EstimationSample::build(panel, &series)?;
    let first = estimate_sample(
        sample,
        &PipelineSpec {
            exposure,
            sieve: SieveSpec {
                kind: SieveKind::ExogenousMarkov,
                fe_region: false,
                fe_industry: false,
            },
            fit: fit.clone(),
        },
    )?;
    two_step_from(&first, spec)
}

/// Second step on an already fitted exogenous-Markov first step.
pub fn two_step_from(first: &Estimates, spec: TwoStepSpec) -> Result<TwoStepResult> {
    assert_eq!(
        first.stage2.spec.kind,
        SieveKind::ExogenousMarkov,
        "two-step first stage must not use export terms"
    );
    let beta = second_step(&first.sample, first.omega(), spec.fe_region, spec.fe_industry)?;
    Ok(TwoStepResult {
        spec,
        exposure: first.sample.exposure,
        first_step_alpha: (first.stage2.alpha_k, first.stage2.alpha_l, first.stage2.alpha_m),
        first_step_terms: first.stage2.gamma_names.clone(),
        beta,
        omega_tilde: first.omega().to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrandAverageAlgebra {
    pub lbe_implied: f64,
    pub spill_implied: f64,
    /// `p_ii` below 0.05: the spillover mapping is numerically explosive.
    pub spill_divergent: bool,
}

/// With grand averages `Xbar = p_ii X + ...`, the `X` coefficient mixes
/// own and peer effects: `LBE = beta_x + beta_xbar p_ii` and
/// `SPILL = beta_x / p_ii + beta_xbar`.
pub fn grand_average_algebra(beta_x: f64, beta_xbar: f64, p_ii: f64) -> Result<GrandAverageAlgebra> {
    if !(p_ii > 0.0 && p_ii <= 1.0) {
        return Err(Error::InvalidInput(format!("p_ii must lie in (0, 1], got {p_ii}")));
    }
    Ok(GrandAverageAlgebra {
        lbe_implied: beta_x + beta_xbar * p_ii,
        spill_implied: beta_x / p_ii + beta_xbar,
        spill_divergent: p_ii < 0.05,
    })
}
