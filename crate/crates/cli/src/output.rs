//! On-disk layout of a run directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use exportlearn_core::baselines::{
    DominanceResult, GrandAverageAlgebra, PremiumReport, TwoStepResult,
};
use exportlearn_core::effects::{
    effect_functions, summarize_effects, EffectFunctions, EffectsSummary, LongRunReport,
    RowIntervals,
};
use exportlearn_core::panel::ExposureSpec;
use exportlearn_core::stage2::Stage2Result;
use exportlearn_core::Estimates;
use serde::{Deserialize, Serialize};

pub const ESTIMATES: &str = "estimates.json";
pub const INFERENCE: &str = "inference.json";
pub const BASELINE: &str = "baseline.json";

/// `--out`, or `runs/<unix seconds>` when absent.
pub fn run_dir(out: Option<&Path>) -> Result<PathBuf> {
    let dir = match out {
        Some(p) => p.to_path_buf(),
        None => {
            let secs = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            PathBuf::from("runs").join(format!("run-{secs}"))
        }
    };
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Everything needed to repeat the run; deliberately free of timestamps
/// and output paths so that identical runs produce identical manifests.
#[derive(Debug, Serialize)]
pub struct Manifest<S: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub settings: S,
    pub outputs: Vec<&'static str>,
}

impl<S: Serialize> Manifest<S> {
    pub fn new(command: &'static str, settings: S, outputs: Vec<&'static str>) -> Self {
        Self {
            tool: "exportlearn",
            version: env!("CARGO_PKG_VERSION"),
            command,
            settings,
            outputs,
        }
    }

    /// Writes `<command>.manifest.json`, so several commands can share a
    /// run directory.
    pub fn write(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join(format!("{}.manifest.json", self.command)), self)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleInfo {
    pub exposure: ExposureSpec,
    pub n_firms: usize,
    pub n_rows: usize,
    pub n_pairs: usize,
    pub rows_without_lag: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Stage1Info {
    pub alpha_m: f64,
    pub theta: f64,
    pub ln_alpha_m_theta: f64,
    pub n_obs: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EffectsInfo {
    pub summary: EffectsSummary,
    pub functions: EffectFunctions,
    pub long_run: LongRunReport,
}

/// Contents of `estimates.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateOutput {
    pub sample: SampleInfo,
    pub stage1: Stage1Info,
    pub stage2: Stage2Result,
    pub scale_elasticity: f64,
    pub effects: EffectsInfo,
}

impl EstimateOutput {
    pub fn new(est: &Estimates, rows: Option<RowIntervals<'_>>) -> Result<Self> {
        Ok(Self {
            sample: SampleInfo {
                exposure: est.sample.exposure,
                n_firms: est.sample.n_firms(),
                n_rows: est.sample.obs.len(),
                n_pairs: est.sample.n_pairs(),
                rows_without_lag: est.sample.dropped,
            },
            stage1: Stage1Info {
                alpha_m: est.stage1.alpha_m,
                theta: est.stage1.theta,
                ln_alpha_m_theta: est.stage1.ln_alpha_m_theta,
                n_obs: est.stage1.n_obs,
            },
            stage2: est.stage2.clone(),
            scale_elasticity: est.stage2.scale_elasticity(),
            effects: EffectsInfo {
                summary: summarize_effects(&est.effects, rows)?,
                functions: effect_functions(&est.stage2),
                long_run: LongRunReport::from_table(&est.effects),
            },
        })
    }
}

/// One BCa interval in `inference.json`; undefined bounds are `null`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NamedInterval {
    pub name: String,
    pub point: Option<f64>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub q0: Option<f64>,
    pub c: Option<f64>,
    pub clamped: bool,
}

/// Contents of `inference.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InferenceOutput {
    pub replicates: usize,
    pub seed: u64,
    pub failed: Vec<usize>,
    pub jackknife_blocks: usize,
    pub jackknife_delete: usize,
    pub level: f64,
    pub significance: Vec<exportlearn_core::inference::SignificanceShare>,
    pub intervals: Vec<NamedInterval>,
}

impl InferenceOutput {
    pub fn interval(&self, name: &str) -> Option<&NamedInterval> {
        self.intervals.iter().find(|i| i.name == name)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwoStepRow {
    pub fe_region: bool,
    pub fe_industry: bool,
    pub beta_x: f64,
    pub se_x: f64,
    pub beta_xbar: f64,
    pub se_xbar: f64,
}

/// Contents of `baseline.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaselineOutput {
    pub premium: PremiumReport,
    pub dominance: DominanceResult,
    pub structural_mean_lbe: f64,
    pub structural_mean_lfe: f64,
    #[serde(default, skip_deserializing)]
    pub two_step: Vec<TwoStepResult>,
    pub two_step_summary: Vec<TwoStepRow>,
    /// Mean of `1 / cell size` over the grand-average sample.
    pub mean_p_ii: f64,
    pub algebra: Option<GrandAverageAlgebra>,
}

pub fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}
