//! Subcommand bodies.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use exportlearn_core::baselines::{
    dominance_test, grand_average_algebra, premium, two_step_from, DominanceConfig, TwoStepSpec,
};
use exportlearn_core::effects::RowIntervals;
use exportlearn_core::inference::{
    row_intervals, run_inference, significance_share, BootstrapOptions, EstimandLayout,
    JackknifeOptions,
};
use exportlearn_core::panel::{
    load_panel, write_panel_csv, ExposureMeasure, ExposureMode, ExposureSpec, Panel, PeerPool,
    SchemaOptions, ValidationReport,
};
use exportlearn_core::simulate::{simulate_panel, write_truth_csv, DgpConfig};
use exportlearn_core::stage2::{FitOptions, SieveKind, SieveSpec};
use exportlearn_core::{run_pipeline, Error, Estimates, PipelineSpec};
use serde::{Deserialize, Serialize};

use crate::output::{
    finite, run_dir, write_json, BaselineOutput, EstimateOutput, InferenceOutput, Manifest,
    NamedInterval, TwoStepRow, BASELINE, ESTIMATES, INFERENCE,
};
use crate::{BaselineArgs, BootstrapArgs, EstimateArgs, InputArgs, SimulateArgs};

/// Flag values that parse but cannot be honored.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (see --help)", self.0)
    }
}

impl std::error::Error for UsageError {}

/// Keys accepted in a run config file. Command-line flags win.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RunFile {
    mode: Option<ExposureMode>,
    measure: Option<ExposureMeasure>,
    pool: Option<PeerPool>,
    fe_region: Option<bool>,
    fe_industry: Option<bool>,
    drop_invalid_rows: Option<bool>,
    bootstrap: Option<usize>,
    seed: Option<u64>,
    jackknife_delete: Option<usize>,
    level: Option<f64>,
    subsamples: Option<usize>,
    subsample_firms: Option<usize>,
}

impl RunFile {
    fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())).into())
    }
}

#[derive(Debug, Clone, Serialize)]
struct InputSettings {
    input: String,
    exposure: ExposureSpec,
    sieve: SieveSpec,
    fit: FitOptions,
    drop_invalid_rows: bool,
}

impl InputSettings {
    fn resolve(a: &InputArgs, file: &RunFile) -> Self {
        Self {
            input: a.input.display().to_string(),
            exposure: ExposureSpec {
                mode: a.mode.or(file.mode).unwrap_or_default(),
                measure: a.measure.or(file.measure).unwrap_or_default(),
                pool: a.pool.or(file.pool).unwrap_or_default(),
            },
            sieve: SieveSpec {
                kind: SieveKind::Full,
                fe_region: a.fe_region || file.fe_region.unwrap_or(false),
                fe_industry: a.fe_industry || file.fe_industry.unwrap_or(false),
            },
            fit: FitOptions::default(),
            drop_invalid_rows: a.drop_invalid_rows || file.drop_invalid_rows.unwrap_or(false),
        }
    }

    fn pipeline(&self) -> PipelineSpec {
        PipelineSpec {
            exposure: self.exposure,
            sieve: self.sieve,
            fit: self.fit.clone(),
        }
    }
}

fn load(a: &InputArgs, s: &InputSettings) -> Result<Panel> {
    let options = SchemaOptions {
        drop_invalid_rows: s.drop_invalid_rows,
        ..SchemaOptions::default()
    };
    let write_report = |report: &ValidationReport| -> Result<()> {
        if let Some(path) = &a.validation_report {
            write_json(path, report)?;
        }
        Ok(())
    };
    match load_panel(&a.input, &options) {
        Ok(loaded) => {
            for w in &loaded.report.warnings {
                log::warn!("{w}");
            }
            write_report(&loaded.report)?;
            Ok(loaded.panel)
        }
        Err(Error::Validation(report)) => {
            eprint!("{report}");
            write_report(&report)?;
            Err(Error::Validation(report)).with_context(|| format!("loading {}", a.input.display()))
        }
        Err(e) => Err(e).with_context(|| format!("loading {}", a.input.display())),
    }
}

fn estimate_with(a: &InputArgs, s: &InputSettings) -> Result<Estimates> {
    let panel = load(a, s)?;
    let est = run_pipeline(&panel, &s.pipeline()).context("estimating")?;
    let c = &est.stage2.convergence;
    if c.outside_unit_box {
        log::warn!("elasticity estimates left the unit square");
    }
    if c.boundary.iter().any(|b| *b) {
        log::warn!("an elasticity estimate sits at the zero boundary");
    }
    Ok(est)
}

fn write_rows(dir: &Path, est: &Estimates) -> Result<()> {
    est.effects.write_csv(&dir.join("effects.csv"), &est.sample)?;
    let path = dir.join("omega.csv");
    let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(["firm_id", "year", "omega_hat", "w_hat", "g_hat", "resid"])?;
    for (j, p) in est.sample.pairs.iter().enumerate() {
        let obs = &est.sample.obs[p.current];
        let s2 = &est.stage2;
        w.write_record([
            est.sample.firm_ids[obs.firm].clone(),
            obs.year.to_string(),
            s2.omega_plus_const[j].to_string(),
            s2.w_hat[j].to_string(),
            s2.g_hat[j].to_string(),
            s2.resid[j].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn simulate(a: SimulateArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => DgpConfig::from_path(p)?,
        None => DgpConfig::default(),
    };
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if let Some(n) = a.n_firms {
        cfg.n_firms = n;
    }
    if let Some(t) = a.periods {
        cfg.n_periods = t;
    }
    cfg.validate()?;
    let dir = run_dir(a.out.as_deref())?;
    let sim = simulate_panel(&cfg)?;
    write_panel_csv(&sim.panel, dir.join("panel.csv"))?;
    write_truth_csv(&dir.join("truth.csv"), &sim.truth)?;
    let toml_path = dir.join("dgp.toml");
    fs::write(&toml_path, cfg.to_toml_string())
        .with_context(|| format!("writing {}", toml_path.display()))?;
    Manifest::new("simulate", &cfg, vec!["panel.csv", "truth.csv", "dgp.toml"]).write(&dir)?;
    println!(
        "simulated {} firm-years for {} firms into {}",
        sim.panel.len(),
        sim.panel.n_firms(),
        dir.display()
    );
    Ok(())
}

pub fn estimate(a: EstimateArgs) -> Result<()> {
    let file = RunFile::load(a.input.config.as_deref())?;
    let s = InputSettings::resolve(&a.input, &file);
    let dir = run_dir(a.input.out.as_deref())?;
    let est = estimate_with(&a.input, &s)?;
    let out = EstimateOutput::new(&est, None)?;
    write_json(&dir.join(ESTIMATES), &out)?;
    write_rows(&dir, &est)?;
    Manifest::new("estimate", &s, vec![ESTIMATES, "effects.csv", "omega.csv"]).write(&dir)?;
    println!(
        "alpha_K {:.4}  alpha_L {:.4}  alpha_M {:.4}  mean LBE {:.4}  mean LFE {:.4}  -> {}",
        est.stage2.alpha_k,
        est.stage2.alpha_l,
        est.stage1.alpha_m,
        est.effects.mean_lbe(),
        est.effects.mean_lfe(),
        dir.display()
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct BootstrapSettings {
    #[serde(flatten)]
    input: InputSettings,
    bootstrap: BootstrapOptions,
    jackknife: JackknifeOptions,
    level: f64,
    audit_rows: bool,
}

pub fn bootstrap(a: BootstrapArgs) -> Result<()> {
    let file = RunFile::load(a.input.config.as_deref())?;
    let defaults = BootstrapOptions::default();
    let boot = BootstrapOptions {
        replicates: a
            .bootstrap
            .map(|b| b as usize)
            .or(file.bootstrap)
            .unwrap_or(defaults.replicates),
        seed: a.seed.or(file.seed).unwrap_or(defaults.seed),
        ..defaults
    };
    let jack = JackknifeOptions {
        delete_size: a
            .jackknife_delete
            .map(|d| d as usize)
            .or(file.jackknife_delete)
            .unwrap_or(JackknifeOptions::default().delete_size),
        ..JackknifeOptions::default()
    };
    let level = a.level.or(file.level).unwrap_or(0.95);
    if !(level > 0.0 && level < 1.0) {
        return Err(UsageError(format!("--level must lie in (0, 1), got {level}")).into());
    }
    if boot.replicates < 2 || jack.delete_size == 0 {
        return Err(UsageError("need at least 2 replicates and a positive jackknife delete size".into()).into());
    }
    let settings = BootstrapSettings {
        input: InputSettings::resolve(&a.input, &file),
        bootstrap: boot,
        jackknife: jack,
        level,
        audit_rows: a.audit_rows,
    };
    let dir = run_dir(a.input.out.as_deref())?;
    let est = estimate_with(&a.input, &settings.input)?;
    let inf = run_inference(&est, &boot, &jack, level).context("bootstrap inference")?;
    let layout = EstimandLayout::of(&est);
    let (lbe_iv, lfe_iv) = row_intervals(&inf.intervals, &layout);
    let rows = RowIntervals {
        lbe: &lbe_iv,
        lfe: &lfe_iv,
    };

    write_json(&dir.join(ESTIMATES), &EstimateOutput::new(&est, Some(rows))?)?;
    write_rows(&dir, &est)?;
    let intervals = (0..layout.n_scalar)
        .map(|j| {
            let iv = &inf.intervals.intervals[j];
            NamedInterval {
                name: layout.names[j].clone(),
                point: finite(iv.point),
                lo: finite(iv.lo),
                hi: finite(iv.hi),
                q0: finite(iv.q0),
                c: finite(iv.c),
                clamped: iv.clamped,
            }
        })
        .collect();
    let out = InferenceOutput {
        replicates: inf.bootstrap.requested,
        seed: boot.seed,
        failed: inf.bootstrap.failed.clone(),
        jackknife_blocks: inf.jackknife.groups,
        jackknife_delete: jack.delete_size,
        level,
        significance: significance_share(&est.effects, rows),
        intervals,
    };
    write_json(&dir.join(INFERENCE), &out)?;
    inf.bootstrap.write_csv(&dir.join("bootstrap.csv"), a.audit_rows)?;

    let path = dir.join("effects_intervals.csv");
    let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(["firm_id", "year", "lbe", "lbe_lo", "lbe_hi", "lfe", "lfe_lo", "lfe_hi"])?;
    for (i, r) in est.effects.rows.iter().enumerate() {
        let obs = &est.sample.obs[est.sample.pairs[r.pair].current];
        w.write_record([
            est.sample.firm_ids[obs.firm].clone(),
            obs.year.to_string(),
            r.lbe.to_string(),
            lbe_iv[i].0.to_string(),
            lbe_iv[i].1.to_string(),
            r.lfe.to_string(),
            lfe_iv[i].0.to_string(),
            lfe_iv[i].1.to_string(),
        ])?;
    }
    w.flush()?;

    Manifest::new(
            "bootstrap",
            &settings,
            vec![
                ESTIMATES,
                INFERENCE,
                "effects.csv",
                "omega.csv",
                "bootstrap.csv",
                "effects_intervals.csv",
            ],
        ).write(&dir)?;
    for s in &out.significance {
        println!(
            "{:<14} significant LBE {:>5.1}%  LFE {:>5.1}%",
            s.group.label(),
            100.0 * s.lbe,
            100.0 * s.lfe
        );
    }
    println!(
        "{} of {} replicates failed; results in {}",
        out.failed.len(),
        out.replicates,
        dir.display()
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct BaselineSettings {
    #[serde(flatten)]
    input: InputSettings,
    dominance: DominanceConfig,
}

pub fn baseline(a: BaselineArgs) -> Result<()> {
    let file = RunFile::load(a.input.config.as_deref())?;
    let defaults = DominanceConfig::default();
    let dominance = DominanceConfig {
        subsample_firms: a.subsample_firms.or(file.subsample_firms),
        replications: a
            .subsamples
            .map(|r| r as usize)
            .or(file.subsamples)
            .unwrap_or(defaults.replications),
        seed: a.seed.or(file.seed).unwrap_or(defaults.seed),
    };
    if matches!(dominance.subsample_firms, Some(b) if b < 2) {
        return Err(UsageError("--subsample-firms must be at least 2".into()).into());
    }
    let settings = BaselineSettings {
        input: InputSettings::resolve(&a.input, &file),
        dominance,
    };
    let dir = run_dir(a.input.out.as_deref())?;
    let panel = load(&a.input, &settings.input)?;
    let est = run_pipeline(&panel, &settings.input.pipeline()).context("structural estimate")?;

    let omega = est.omega();
    let exporter = est.exporter_now();
    let premium = premium(omega, &exporter)?;
    let dominance = dominance_test(omega, &exporter, &est.sample.pair_firms(), &dominance)?;

    // grand-average exposure, productivity law without export terms
    let first = run_pipeline(
        &panel,
        &PipelineSpec {
            exposure: ExposureSpec {
                mode: ExposureMode::Grand,
                ..settings.input.exposure
            },
            sieve: SieveSpec {
                kind: SieveKind::ExogenousMarkov,
                fe_region: false,
                fe_industry: false,
            },
            fit: settings.input.fit.clone(),
        },
    )
    .context("two-step first stage")?;
    let mut two_step = Vec::new();
    for (fe_region, fe_industry) in [(false, false), (true, false), (false, true), (true, true)] {
        two_step.push(two_step_from(
            &first,
            TwoStepSpec {
                fe_region,
                fe_industry,
            },
        )?);
    }
    let two_step_summary: Vec<TwoStepRow> = two_step
        .iter()
        .map(|r| {
            let (beta_x, se_x) = r.beta_x();
            let (beta_xbar, se_xbar) = r.beta_xbar();
            TwoStepRow {
                fe_region: r.spec.fe_region,
                fe_industry: r.spec.fe_industry,
                beta_x,
                se_x,
                beta_xbar,
                se_xbar,
            }
        })
        .collect();
    let s = &first.sample;
    let mean_p_ii = s
        .pairs
        .iter()
        .map(|p| 1.0 / (s.obs[p.lagged].peer_count + 1) as f64)
        .sum::<f64>()
        / s.n_pairs() as f64;
    let plain = two_step_summary[0].clone();
    let algebra = grand_average_algebra(plain.beta_x, plain.beta_xbar, mean_p_ii).ok();

    let out = BaselineOutput {
        premium,
        dominance,
        structural_mean_lbe: est.effects.mean_lbe(),
        structural_mean_lfe: est.effects.mean_lfe(),
        two_step,
        two_step_summary,
        mean_p_ii,
        algebra,
    };
    write_json(&dir.join(BASELINE), &out)?;
    Manifest::new("baseline", &settings, vec![BASELINE]).write(&dir)?;
    println!(
        "mean premium {:.4}; dominance statistic {:.4}, p = {:.4}; two-step beta_x {:.4} vs structural mean LBE {:.4} -> {}",
        out.premium.mean_diff,
        out.dominance.statistic,
        out.dominance.p_value,
        plain.beta_x,
        out.structural_mean_lbe,
        dir.display()
    );
    Ok(())
}
