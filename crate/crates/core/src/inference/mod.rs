//! Joint two-stage wild bootstrap, jackknife acceleration and BCa intervals.
//!
//! Replicate `b` multiplies every residual of firm `i` by one Rademacher
//! weight `w_i` drawn from a ChaCha stream keyed by `(seed, b)`, rebuilds
//! both outcome equations around the point-estimate fit, and reruns both
//! stages. Regressors and exposures are never resampled.

mod bca;
mod estimands;

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::effects::{excludes_zero, EffectsTable, RowIntervals, Subgroup};
use crate::error::{Error, Result};
use crate::panel::EstimationSample;
use crate::pipeline::Estimates;
use crate::stage1::{estimate_stage1, transform};
use crate::stage2::{fit_stage2, FitOptions, StartPlan};

pub use bca::{
    bca_interval, jackknife_acceleration, percentile_interval, Acceleration, BcaInterval,
};
pub use estimands::{evaluate, group_key, premium_tau_name, EstimandLayout, ParamSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapOptions {
    pub replicates: usize,
    pub seed: u64,
    /// Start each replicate's stage-2 search at the point estimate only.
    pub warm_start: bool,
    /// Largest tolerated share of failed replicates.
    pub failure_cap: f64,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        Self {
            replicates: 500,
            seed: 20240101,
            warm_start: true,
            failure_cap: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSet {
    pub layout: EstimandLayout,
    pub seed: u64,
    pub requested: usize,
    /// Replicate index of each stored row.
    pub ids: Vec<usize>,
    pub params: Vec<ParamSet>,
    pub values: Vec<Vec<f64>>,
    pub failed: Vec<usize>,
}

impl BootstrapSet {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Finite replicate values of estimand `j`.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values
            .iter()
            .map(|v| v[j])
            .filter(|v| v.is_finite())
            .collect()
    }

    /// Replicate-by-estimand CSV; row-level effects only when `rows` is set.
    pub fn write_csv(&self, path: &Path, rows: bool) -> Result<()> {
        let width = if rows {
            self.layout.len()
        } else {
            self.layout.n_scalar
        };
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["replicate".to_string()];
        header.extend(self.layout.names[..width].iter().cloned());
        w.write_record(&header)?;
        for (id, v) in self.ids.iter().zip(&self.values) {
            let mut rec = vec![id.to_string()];
            rec.extend(v[..width].iter().map(|x| x.to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

/// One Rademacher weight per firm for replicate `b`.
pub fn rademacher_weights(seed: u64, b: usize, n_firms: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(b as u64);
    (0..n_firms)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect()
}

/// Sample with both outcomes regenerated under firm weights `w`:
/// `ln S = ln(alpha_M theta) - w eta` on every row and
/// `y = fitted + w (zeta + eta)` on every lag-aligned row.
pub fn regenerate(est: &Estimates, w: &[f64]) -> EstimationSample {
    let s = &est.sample;
    let s1 = &est.stage1;
    let s2 = &est.stage2;
    let ln_share: Vec<f64> = s
        .obs
        .iter()
        .zip(&s1.eta)
        .map(|(o, e)| s1.ln_alpha_m_theta - w[o.firm] * e)
        .collect();
    let mut y: Vec<f64> = s.obs.iter().map(|o| o.y).collect();
    for (j, p) in s.pairs.iter().enumerate() {
        let o = &s.obs[p.current];
        let fitted = s2.alpha_k * o.k + s2.alpha_l * o.l + s2.alpha_m * o.m + s2.g_hat[j];
        y[p.current] = fitted + w[o.firm] * s2.resid[j];
    }
    s.with_outcomes(&ln_share, &y)
}

fn refit_options(est: &Estimates, warm: bool) -> FitOptions {
    let mut fit = est.spec.fit.clone();
    if warm {
        fit.starts = StartPlan::At(vec![[est.stage2.alpha_k, est.stage2.alpha_l]]);
    }
    fit
}

/// Parameters re-estimated on `sample` with the point-estimate specification.
pub fn refit(est: &Estimates, sample: &EstimationSample, fit: &FitOptions) -> Result<ParamSet> {
    let s1 = estimate_stage1(sample)?;
    let data = transform(sample, &s1);
    let s2 = fit_stage2(&data, est.spec.sieve, fit)?;
    Ok(ParamSet::new(&s1, &s2))
}

pub fn wild_bootstrap(est: &Estimates, opts: &BootstrapOptions) -> Result<BootstrapSet> {
    let layout = EstimandLayout::of(est);
    let fit = refit_options(est, opts.warm_start);
    let n_firms = est.sample.n_firms();
    let outcomes: Vec<Result<(ParamSet, Vec<f64>)>> = (0..opts.replicates)
        .into_par_iter()
        .map(|b| {
            let w = rademacher_weights(opts.seed, b, n_firms);
            let sample = regenerate(est, &w);
            let params = refit(est, &sample, &fit)?;
            let values = evaluate(&params, &sample);
            Ok((params, values))
        })
        .collect();

    let cap = (opts.failure_cap * opts.replicates as f64).floor() as usize;
    let mut set = BootstrapSet {
        layout,
        seed: opts.seed,
        requested: opts.replicates,
        ids: Vec::new(),
        params: Vec::new(),
        values: Vec::new(),
        failed: Vec::new(),
    };
    for (b, r) in outcomes.into_iter().enumerate() {
        match r {
            Ok((p, v)) => {
                set.ids.push(b);
                set.params.push(p);
                set.values.push(v);
            }
            Err(e) => {
                log::warn!("bootstrap replicate {b} failed: {e}");
                set.failed.push(b);
            }
        }
    }
    if set.failed.len() > cap {
        return Err(Error::TooManyFailures {
            failed: set.failed.len(),
            total: opts.replicates,
            cap,
        });
    }
    Ok(set)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JackknifeOptions {
    /// Firms deleted per jackknife sample.
    pub delete_size: usize,
    pub warm_start: bool,
}

impl Default for JackknifeOptions {
    fn default() -> Self {
        Self {
            delete_size: 20,
            warm_start: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JackknifeSet {
    pub groups: usize,
    pub delete_size: usize,
    pub values: Vec<Vec<f64>>,
    pub failed: Vec<usize>,
    pub acceleration: Vec<Acceleration>,
}

/// Consecutive firm blocks: `groups` blocks covering all firms.
pub fn jackknife_groups(n_firms: usize, delete_size: usize) -> Result<Vec<std::ops::Range<usize>>> {
    let j = n_firms.checked_div(delete_size).unwrap_or(0);
    if j < 3 {
        return Err(Error::Degenerate(format!(
            "jackknife needs at least 3 groups; {n_firms} firms with delete size {delete_size} give {j}"
        )));
    }
    Ok((0..j).map(|g| g * n_firms / j..(g + 1) * n_firms / j).collect())
}

pub fn jackknife(est: &Estimates, opts: &JackknifeOptions) -> Result<JackknifeSet> {
    let groups = jackknife_groups(est.sample.n_firms(), opts.delete_size)?;
    let fit = refit_options(est, opts.warm_start);
    let n_est = EstimandLayout::of(est).len();
    let outcomes: Vec<Result<Vec<f64>>> = groups
        .par_iter()
        .map(|range| {
            let mut remove = vec![false; est.sample.n_firms()];
            for f in range.clone() {
                remove[f] = true;
            }
            let sub = est.sample.without_firms(&remove)?;
            let params = refit(est, &sub, &fit)?;
            Ok(evaluate(&params, &est.sample))
        })
        .collect();
    let mut values = Vec::new();
    let mut failed = Vec::new();
    for (g, r) in outcomes.into_iter().enumerate() {
        match r {
            Ok(v) => values.push(v),
            Err(e) => {
                log::warn!("jackknife group {g} failed: {e}");
                failed.push(g);
            }
        }
    }
    if values.len() < 3 {
        return Err(Error::Degenerate(format!(
            "only {} jackknife re-estimates succeeded",
            values.len()
        )));
    }
    let acceleration = (0..n_est)
        .map(|j| {
            let col: Vec<f64> = values.iter().map(|v| v[j]).collect();
            jackknife_acceleration(&col)
        })
        .collect();
    Ok(JackknifeSet {
        groups: groups.len(),
        delete_size: opts.delete_size,
        values,
        failed,
        acceleration,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalSet {
    pub level: f64,
    pub names: Vec<String>,
    pub intervals: Vec<BcaInterval>,
}

impl IntervalSet {
    pub fn get(&self, name: &str) -> Option<&BcaInterval> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| &self.intervals[i])
    }
}

/// BCa interval for every estimand; entries with a non-finite point or
/// fewer than two finite replicates are left undefined (NaN bounds).
pub fn intervals(
    point: &[f64],
    boot: &BootstrapSet,
    accel: &[Acceleration],
    level: f64,
) -> Result<IntervalSet> {
    let intervals = (0..point.len())
        .map(|j| {
            let reps = boot.column(j);
            if !point[j].is_finite() || reps.len() < 2 {
                return Ok(BcaInterval::undefined(point[j], level));
            }
            bca_interval(point[j], &reps, accel[j].c, level)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IntervalSet {
        level,
        names: boot.layout.names.clone(),
        intervals,
    })
}

type Bounds = Vec<(f64, f64)>;

/// Row-level `(lo, hi)` pairs for LBE and LFE in table order.
pub fn row_intervals(set: &IntervalSet, layout: &EstimandLayout) -> (Bounds, Bounds) {
    let pick = |j: usize| (set.intervals[j].lo, set.intervals[j].hi);
    (
        (0..layout.n_rows).map(|i| pick(layout.lbe_row(i))).collect(),
        (0..layout.n_rows).map(|i| pick(layout.lfe_row(i))).collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceShare {
    pub group: Subgroup,
    pub lbe: f64,
    pub lfe: f64,
}

/// Share of rows per subgroup whose interval excludes zero; subgroups
/// without rows are skipped.
pub fn significance_share(table: &EffectsTable, rows: RowIntervals<'_>) -> Vec<SignificanceShare> {
    Subgroup::ALL
        .iter()
        .filter_map(|&g| {
            let idx: Vec<usize> = (0..table.len())
                .filter(|&i| g.contains(table.rows[i].exporter))
                .collect();
            if idx.is_empty() {
                return None;
            }
            let share = |v: &[(f64, f64)]| {
                idx.iter().filter(|&&i| excludes_zero(v[i])).count() as f64 / idx.len() as f64
            };
            Some(SignificanceShare {
                group: g,
                lbe: share(rows.lbe),
                lfe: share(rows.lfe),
            })
        })
        .collect()
}

/// Bootstrap, jackknife and intervals for one set of point estimates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Inference {
    pub point: Vec<f64>,
    pub bootstrap: BootstrapSet,
    pub jackknife: JackknifeSet,
    pub intervals: IntervalSet,
}

pub fn run_inference(
    est: &Estimates,
    boot: &BootstrapOptions,
    jack: &JackknifeOptions,
    level: f64,
) -> Result<Inference> {
    let point = evaluate(&ParamSet::of(est), &est.sample);
    let bootstrap = wild_bootstrap(est, boot)?;
    let jackknife = jackknife(est, jack)?;
    let intervals = intervals(&point, &bootstrap, &jackknife.acceleration, level)?;
    Ok(Inference {
        point,
        bootstrap,
        jackknife,
        intervals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_are_signs_and_reproducible() {
        let a = rademacher_weights(7, 3, 50);
        assert_eq!(a, rademacher_weights(7, 3, 50));
        assert_ne!(a, rademacher_weights(7, 4, 50));
        assert!(a.iter().all(|w| *w == 1.0 || *w == -1.0));
        assert!(a.contains(&1.0) && a.contains(&-1.0));
    }

    #[test]
    fn jackknife_blocks_cover_all_firms() {
        let g = jackknife_groups(105, 20).unwrap();
        assert_eq!(g.len(), 5);
        assert_eq!(g[0].start, 0);
        assert_eq!(g[4].end, 105);
        assert!(g.windows(2).all(|w| w[0].end == w[1].start));
        assert!(jackknife_groups(59, 20).is_err());
    }

    #[test]
    fn significance_shares() {
        let table = EffectsTable {
            rows: (0..4)
                .map(|i| crate::effects::EffectRow {
                    pair: i,
                    firm: i,
                    w_hat: 0.0,
                    x_lag: 0.0,
                    xbar_lag: 0.0,
                    peers_lag: 1,
                    exporter: i < 2,
                    lbe: 0.1,
                    lfe: 0.1,
                    lfe_per_peer: 0.1,
                    isolated: false,
                    persistence: 0.0,
                })
                .collect(),
        };
        let pos = vec![(0.1, 0.2); 4];
        let straddle = vec![(-0.1, 0.2); 4];
        let s = significance_share(
            &table,
            RowIntervals {
                lbe: &pos,
                lfe: &straddle,
            },
        );
        assert_eq!(s.len(), 3);
        assert!(s.iter().all(|g| g.lbe == 1.0 && g.lfe == 0.0));
    }
}
