//! Sieve nonlinear least squares for the capital and labor elasticities.
//!
//! For fixed `alpha = (alpha_K, alpha_L)` the model
//! `y* = alpha_K k + alpha_L l + lambda(alpha)' gamma + error` is linear in
//! `gamma`, so `gamma` is concentrated out with a pivoted QR solve and the
//! remaining two-dimensional objective is searched with a multistart simplex.

mod nelder_mead;
mod sieve;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::least_squares;
use crate::stage1::TransformedSample;

pub use nelder_mead::{minimize, SimplexOptions, SimplexOutcome};
pub use sieve::{full_terms, SieveBasis, SieveKind, SieveSpec, FULL_TERMS};

/// Smallest retained pivot relative to the leading pivot.
pub const PIVOT_TOL: f64 = 1e-10;
const MIN_RANK: usize = 3;

#[derive(Debug, Clone)]
pub struct ConcentratedFit {
    pub gamma: Vec<f64>,
    pub sse: f64,
    pub rank: usize,
    pub dropped: Vec<usize>,
}

/// Inner linear solve for fixed `alpha`.
pub fn concentrated_sse(
    data: &TransformedSample,
    basis: &SieveBasis,
    alpha: [f64; 2],
) -> Result<ConcentratedFit> {
    let design = basis.design(data, alpha);
    let target = response(data, alpha);
    let fit = least_squares(&design, &target, PIVOT_TOL);
    if fit.rank() < MIN_RANK {
        return Err(Error::RankCollapse {
            rank: fit.rank(),
            required: MIN_RANK,
        });
    }
    Ok(ConcentratedFit {
        rank: fit.rank(),
        sse: fit.sse,
        dropped: fit.dropped,
        gamma: fit.coef,
    })
}

fn response(data: &TransformedSample, alpha: [f64; 2]) -> Vec<f64> {
    data.rows
        .iter()
        .map(|r| r.y_star - alpha[0] * r.k - alpha[1] * r.l)
        .collect()
}

/// How the outer search is seeded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartPlan {
    /// First `n` points of the (2, 3) Halton sequence in the unit square.
    Grid(usize),
    /// Explicit starting points.
    At(Vec<[f64; 2]>),
}

impl StartPlan {
    pub fn points(&self) -> Vec<[f64; 2]> {
        match self {
            StartPlan::Grid(n) => (1..=*n).map(|i| [halton(i, 2), halton(i, 3)]).collect(),
            StartPlan::At(v) => v.clone(),
        }
    }
}

fn halton(mut i: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitOptions {
    pub starts: StartPlan,
    pub f_rel_tol: f64,
    pub diameter_tol: f64,
    pub max_iter: usize,
    pub max_restarts: usize,
    /// Distance from zero below which an elasticity is flagged.
    pub boundary_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            starts: StartPlan::Grid(8),
            f_rel_tol: 1e-10,
            diameter_tol: 1e-8,
            max_iter: 4000,
            max_restarts: 1,
            boundary_tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StartOutcome {
    pub start: [f64; 2],
    pub alpha: [f64; 2],
    pub sse: f64,
    pub iterations: usize,
    pub restarts: usize,
    pub converged: bool,
    pub boundary: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub best_start: usize,
    pub starts: Vec<StartOutcome>,
    /// `[alpha_K, alpha_L]` within `boundary_tol` of zero.
    pub boundary: [bool; 2],
    /// Solution left the unit square.
    pub outside_unit_box: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Stage2Result {
    pub spec: SieveSpec,
    pub alpha_k: f64,
    pub alpha_l: f64,
    pub alpha_m: f64,
    pub gamma: Vec<f64>,
    pub gamma_names: Vec<String>,
    pub dropped_columns: Vec<String>,
    pub sse: f64,
    pub convergence: ConvergenceReport,
    /// Recovered `omega + alpha_0` per transformed row.
    #[serde(skip)]
    pub omega_plus_const: Vec<f64>,
    /// `W(alpha_hat)` per row: lagged `omega + alpha_0`.
    #[serde(skip)]
    pub w_hat: Vec<f64>,
    /// Fitted sieve (including dummies) per row.
    #[serde(skip)]
    pub g_hat: Vec<f64>,
    /// Composite residual `zeta + eta`.
    #[serde(skip)]
    pub resid: Vec<f64>,
    #[serde(skip)]
    pub zeta: Vec<f64>,
}

impl Stage2Result {
    pub fn scale_elasticity(&self) -> f64 {
        self.alpha_k + self.alpha_l + self.alpha_m
    }
}

pub fn fit_stage2(
    data: &TransformedSample,
    spec: SieveSpec,
    options: &FitOptions,
) -> Result<Stage2Result> {
    let basis = SieveBasis::new(spec, data);
    let simplex = SimplexOptions {
        initial_step: 0.1,
        f_rel_tol: options.f_rel_tol,
        diameter_tol: options.diameter_tol,
        // rounding level of a sum of squares on this data
        f_abs_tol: f64::EPSILON * data.rows.iter().map(|r| r.y_star * r.y_star).sum::<f64>(),
        max_iter: options.max_iter,
        max_restarts: options.max_restarts,
    };
    let objective = |a: &[f64]| -> f64 {
        match concentrated_sse(data, &basis, [a[0], a[1]]) {
            Ok(fit) if fit.sse.is_finite() => fit.sse,
            _ => f64::INFINITY,
        }
    };

    let starts = options.starts.points();
    if starts.is_empty() {
        return Err(Error::Config("no optimizer starts".into()));
    }
    let outcomes: Vec<StartOutcome> = starts
        .par_iter()
        .map(|s| {
            let out = minimize(objective, s, &simplex);
            let alpha = [out.x[0], out.x[1]];
            StartOutcome {
                start: *s,
                alpha,
                sse: out.f,
                iterations: out.iterations,
                restarts: out.restarts,
                converged: out.converged && out.f.is_finite(),
                boundary: alpha.iter().any(|a| a.abs() < options.boundary_tol),
            }
        })
        .collect();

    let mut best: Option<usize> = None;
    for (i, o) in outcomes.iter().enumerate() {
        if !o.converged {
            continue;
        }
        // strict comparison keeps the lowest index on ties
        if best.is_none_or(|b| o.sse < outcomes[b].sse) {
            best = Some(i);
        }
    }
    let best = best.ok_or(Error::NoConvergence)?;
    if outcomes.iter().filter(|o| o.converged).all(|o| o.boundary) {
        return Err(Error::AllBoundary);
    }
    let alpha = outcomes[best].alpha;
    let report = ConvergenceReport {
        best_start: best,
        boundary: [
            alpha[0].abs() < options.boundary_tol,
            alpha[1].abs() < options.boundary_tol,
        ],
        outside_unit_box: alpha.iter().any(|a| !(0.0..=1.0).contains(a)),
        starts: outcomes,
    };
    finish(data, &basis, alpha, report)
}

/// Evaluates the concentrated problem at `alpha` and assembles the result.
fn finish(
    data: &TransformedSample,
    basis: &SieveBasis,
    alpha: [f64; 2],
    convergence: ConvergenceReport,
) -> Result<Stage2Result> {
    let inner = concentrated_sse(data, basis, alpha)?;
    let design = basis.design(data, alpha);
    let g_hat = design.mul_vec(&inner.gamma);
    let target = response(data, alpha);
    let resid: Vec<f64> = target.iter().zip(&g_hat).map(|(t, g)| t - g).collect();
    let sse = resid.iter().map(|r| r * r).sum();
    let zeta = resid
        .iter()
        .zip(&data.rows)
        .map(|(r, row)| r - row.eta)
        .collect();
    let omega_plus_const = data
        .rows
        .iter()
        .map(|r| r.y - alpha[0] * r.k - alpha[1] * r.l - data.alpha_m * r.m - r.eta)
        .collect();
    Ok(Stage2Result {
        spec: basis.spec,
        alpha_k: alpha[0],
        alpha_l: alpha[1],
        alpha_m: data.alpha_m,
        gamma: inner.gamma,
        gamma_names: basis.names.clone(),
        dropped_columns: inner.dropped.iter().map(|&i| basis.names[i].clone()).collect(),
        sse,
        convergence,
        omega_plus_const,
        w_hat: basis.proxy(data, alpha),
        g_hat,
        resid,
        zeta,
    })
}
