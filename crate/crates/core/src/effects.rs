//! LBE, LFE and persistence gradients of the fitted productivity law.
//!
//! All three are exact derivatives of the degree-two basis, so squared
//! terms carry a factor of two. Fixed-effect dummies shift the level of the
//! law and never enter a gradient.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::EstimationSample;
use crate::stage1::TransformedSample;
use crate::stage2::{SieveKind, Stage2Result};
use crate::stats::{mean, quantile_linear, sorted};

/// Polynomial block of the fitted sieve, named by basis column.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SieveCoefficients {
    pub c: f64,
    pub w: f64,
    pub w2: f64,
    pub x: f64,
    pub x2: f64,
    pub xbar: f64,
    pub xbar2: f64,
    pub w_x: f64,
    pub w_xbar: f64,
    pub x_xbar: f64,
}

impl SieveCoefficients {
    pub fn from_gamma(gamma: &[f64], kind: SieveKind) -> Self {
        let g = |i: usize| gamma.get(i).copied().unwrap_or(0.0);
        match kind {
            SieveKind::Full => Self {
                c: g(0),
                w: g(1),
                w2: g(2),
                x: g(3),
                x2: g(4),
                xbar: g(5),
                xbar2: g(6),
                w_x: g(7),
                w_xbar: g(8),
                x_xbar: g(9),
            },
            SieveKind::ExogenousMarkov => Self {
                c: g(0),
                w: g(1),
                w2: g(2),
                ..Self::default()
            },
        }
    }

    pub fn of(s2: &Stage2Result) -> Self {
        Self::from_gamma(&s2.gamma, s2.spec.kind)
    }

    /// Polynomial part of the fitted law.
    pub fn g(&self, w: f64, x: f64, xbar: f64) -> f64 {
        self.c
            + self.w * w
            + self.w2 * w * w
            + self.x * x
            + self.x2 * x * x
            + self.xbar * xbar
            + self.xbar2 * xbar * xbar
            + self.w_x * w * x
            + self.w_xbar * w * xbar
            + self.x_xbar * x * xbar
    }

    pub fn gradient(&self, w: f64, x: f64, xbar: f64) -> Gradient {
        Gradient {
            lbe: self.x + 2.0 * self.x2 * x + self.w_x * w + self.x_xbar * xbar,
            lfe: self.xbar + 2.0 * self.xbar2 * xbar + self.w_xbar * w + self.x_xbar * x,
            persistence: self.w + 2.0 * self.w2 * w + self.w_x * x + self.w_xbar * xbar,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gradient {
    pub lbe: f64,
    pub lfe: f64,
    pub persistence: f64,
}

/// Gradients at transformed row `row`.
pub fn effects_at(s2: &Stage2Result, data: &TransformedSample, row: usize) -> Gradient {
    let r = &data.rows[row];
    SieveCoefficients::of(s2).gradient(s2.w_hat[row], r.x_lag, r.xbar_lag)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectRow {
    pub pair: usize,
    pub firm: usize,
    pub w_hat: f64,
    pub x_lag: f64,
    pub xbar_lag: f64,
    pub peers_lag: usize,
    pub exporter: bool,
    pub lbe: f64,
    pub lfe: f64,
    /// `lfe / n`; zero and flagged through `isolated` when there are no peers.
    pub lfe_per_peer: f64,
    pub isolated: bool,
    pub persistence: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EffectsTable {
    pub rows: Vec<EffectRow>,
}

pub fn effects_table(s2: &Stage2Result, data: &TransformedSample) -> EffectsTable {
    let coef = SieveCoefficients::of(s2);
    let rows = data
        .rows
        .iter()
        .zip(&s2.w_hat)
        .map(|(r, &w)| {
            let g = coef.gradient(w, r.x_lag, r.xbar_lag);
            let isolated = r.peers_lag == 0;
            EffectRow {
                pair: r.pair,
                firm: r.firm,
                w_hat: w,
                x_lag: r.x_lag,
                xbar_lag: r.xbar_lag,
                peers_lag: r.peers_lag,
                exporter: r.x_lag > 0.0,
                lbe: g.lbe,
                lfe: g.lfe,
                lfe_per_peer: if isolated { 0.0 } else { g.lfe / r.peers_lag as f64 },
                isolated,
                persistence: g.persistence,
            }
        })
        .collect();
    EffectsTable { rows }
}

impl EffectsTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn mean_lbe(&self) -> f64 {
        mean(&self.rows.iter().map(|r| r.lbe).collect::<Vec<_>>())
    }

    pub fn mean_lfe(&self) -> f64 {
        mean(&self.rows.iter().map(|r| r.lfe).collect::<Vec<_>>())
    }

    pub fn mean_persistence(&self) -> f64 {
        mean(&self.rows.iter().map(|r| r.persistence).collect::<Vec<_>>())
    }

    pub fn write_csv(&self, path: &Path, sample: &EstimationSample) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "firm_id",
            "year",
            "w_hat",
            "x_lag",
            "xbar_lag",
            "peers_lag",
            "exporter",
            "lbe",
            "lfe",
            "lfe_per_peer",
            "isolated",
            "persistence",
        ])?;
        for r in &self.rows {
            let obs = &sample.obs[sample.pairs[r.pair].current];
            w.write_record([
                sample.firm_ids[obs.firm].clone(),
                obs.year.to_string(),
                r.w_hat.to_string(),
                r.x_lag.to_string(),
                r.xbar_lag.to_string(),
                r.peers_lag.to_string(),
                u8::from(r.exporter).to_string(),
                r.lbe.to_string(),
                r.lfe.to_string(),
                r.lfe_per_peer.to_string(),
                u8::from(r.isolated).to_string(),
                r.persistence.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

/// Exporter subgroups reported in summaries, keyed on lagged status.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subgroup {
    All,
    Exporters,
    NonExporters,
}

impl Subgroup {
    pub const ALL: [Subgroup; 3] = [Subgroup::All, Subgroup::Exporters, Subgroup::NonExporters];

    pub fn contains(self, exporter: bool) -> bool {
        match self {
            Subgroup::All => true,
            Subgroup::Exporters => exporter,
            Subgroup::NonExporters => !exporter,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Subgroup::All => "All Firms",
            Subgroup::Exporters => "Exporters",
            Subgroup::NonExporters => "Non-Exporters",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub mean: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    /// Share of rows whose interval excludes zero.
    pub significant_share: Option<f64>,
}

impl Distribution {
    /// Mean and linear-interpolation quartiles of a non-empty slice.
    pub fn of(values: &[f64]) -> Self {
        let s = sorted(values);
        Self {
            mean: mean(values),
            q1: quantile_linear(&s, 0.25),
            median: quantile_linear(&s, 0.5),
            q3: quantile_linear(&s, 0.75),
            significant_share: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group: Subgroup,
    pub n: usize,
    pub lbe: Distribution,
    pub lfe: Distribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectsSummary {
    pub groups: Vec<GroupSummary>,
}

impl EffectsSummary {
    pub fn group(&self, g: Subgroup) -> &GroupSummary {
        self.groups
            .iter()
            .find(|s| s.group == g)
            .expect("every subgroup is summarized")
    }
}

/// Row-level `(lo, hi)` intervals for LBE and LFE, aligned with the table.
#[derive(Debug, Clone, Copy)]
pub struct RowIntervals<'a> {
    pub lbe: &'a [(f64, f64)],
    pub lfe: &'a [(f64, f64)],
}

pub fn excludes_zero(iv: (f64, f64)) -> bool {
    iv.0 > 0.0 || iv.1 < 0.0
}

pub fn summarize_effects(
    table: &EffectsTable,
    intervals: Option<RowIntervals<'_>>,
) -> Result<EffectsSummary> {
    if let Some(iv) = intervals {
        if iv.lbe.len() != table.len() || iv.lfe.len() != table.len() {
            return Err(Error::InvalidInput(
                "row intervals are not aligned with the effects table".into(),
            ));
        }
    }
    let mut groups = Vec::new();
    for g in Subgroup::ALL {
        let idx: Vec<usize> = (0..table.len())
            .filter(|&i| g.contains(table.rows[i].exporter))
            .collect();
        if idx.is_empty() {
            return Err(Error::EmptySubgroup(g.label().into()));
        }
        let pick = |f: fn(&EffectRow) -> f64| -> Vec<f64> {
            idx.iter().map(|&i| f(&table.rows[i])).collect()
        };
        let mut lbe = Distribution::of(&pick(|r| r.lbe));
        let mut lfe = Distribution::of(&pick(|r| r.lfe));
        if let Some(iv) = intervals {
            let share = |v: &[(f64, f64)]| {
                idx.iter().filter(|&&i| excludes_zero(v[i])).count() as f64 / idx.len() as f64
            };
            lbe.significant_share = Some(share(iv.lbe));
            lfe.significant_share = Some(share(iv.lfe));
        }
        groups.push(GroupSummary {
            group: g,
            n: idx.len(),
            lbe,
            lfe,
        });
    }
    Ok(EffectsSummary { groups })
}

/// An effect written as a linear function of lagged state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearEffect {
    pub intercept: f64,
    /// Slope on lagged `omega + alpha_0`.
    pub omega: f64,
    pub x: f64,
    pub xbar: f64,
}

impl LinearEffect {
    pub fn at(&self, w: f64, x: f64, xbar: f64) -> f64 {
        self.intercept + self.omega * w + self.x * x + self.xbar * xbar
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectFunctions {
    pub lbe: LinearEffect,
    pub lfe: LinearEffect,
}

pub fn effect_functions(s2: &Stage2Result) -> EffectFunctions {
    coefficient_functions(&SieveCoefficients::of(s2))
}

pub fn coefficient_functions(c: &SieveCoefficients) -> EffectFunctions {
    EffectFunctions {
        lbe: LinearEffect {
            intercept: c.x,
            omega: c.w_x,
            x: 2.0 * c.x2,
            xbar: c.x_xbar,
        },
        lfe: LinearEffect {
            intercept: c.xbar,
            omega: c.w_xbar,
            x: c.x_xbar,
            xbar: 2.0 * c.xbar2,
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LongRunReport {
    pub mean_lbe: f64,
    pub mean_lfe: f64,
    pub mean_persistence: f64,
    pub stationary: bool,
    pub lbe_long_run: Option<f64>,
    pub lfe_long_run: Option<f64>,
    /// Long-run productivity gain (percent) from ten more points of own
    /// and peer export intensity.
    pub total_per_10pp: Option<f64>,
}

impl LongRunReport {
    /// Report that omits the multipliers when persistence is not in (-1, 1).
    pub fn new(mean_lbe: f64, mean_lfe: f64, mean_persistence: f64) -> Self {
        let stationary = mean_persistence.abs() < 1.0;
        let scale = 1.0 / (1.0 - mean_persistence);
        let lbe_long_run = stationary.then_some(mean_lbe * scale);
        let lfe_long_run = stationary.then_some(mean_lfe * scale);
        Self {
            mean_lbe,
            mean_lfe,
            mean_persistence,
            stationary,
            lbe_long_run,
            lfe_long_run,
            total_per_10pp: lbe_long_run.zip(lfe_long_run).map(|(a, b)| 10.0 * (a + b)),
        }
    }

    pub fn from_table(table: &EffectsTable) -> Self {
        Self::new(table.mean_lbe(), table.mean_lfe(), table.mean_persistence())
    }
}

pub fn long_run(mean_lbe: f64, mean_lfe: f64, mean_persistence: f64) -> Result<LongRunReport> {
    let r = LongRunReport::new(mean_lbe, mean_lfe, mean_persistence);
    if r.stationary {
        Ok(r)
    } else {
        Err(Error::NonStationary(mean_persistence))
    }
}
