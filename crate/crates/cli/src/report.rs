//! Plain-text tables from finished run directories, plus the two-step
//! comparison as plot-ready CSV.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use exportlearn_core::effects::{Distribution, Subgroup};
use exportlearn_core::inference::{group_key, premium_tau_name};

use crate::output::{
    read_json, BaselineOutput, EstimateOutput, InferenceOutput, BASELINE, ESTIMATES, INFERENCE,
};
use crate::ReportArgs;

struct Run {
    dir: PathBuf,
    est: EstimateOutput,
    inf: Option<InferenceOutput>,
    base: Option<BaselineOutput>,
}

impl Run {
    fn load(dir: &Path) -> Result<Self> {
        let optional = |name: &str| dir.join(name).exists().then(|| dir.join(name));
        Ok(Self {
            dir: dir.to_path_buf(),
            est: read_json(&dir.join(ESTIMATES))
                .with_context(|| format!("{} has no usable {ESTIMATES}", dir.display()))?,
            inf: optional(INFERENCE).map(|p| read_json(&p)).transpose()?,
            base: optional(BASELINE).map(|p| read_json(&p)).transpose()?,
        })
    }

    fn label(&self) -> String {
        self.dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| self.dir.display().to_string())
    }

    /// `[lo, hi]` for a named estimand, or blanks without inference.
    fn ci(&self, name: &str) -> String {
        self.inf
            .as_ref()
            .and_then(|i| i.interval(name))
            .and_then(|iv| iv.lo.zip(iv.hi))
            .map(|(lo, hi)| format!("[{lo:>7.3}, {hi:>7.3}]"))
            .unwrap_or_default()
    }
}

pub fn run(a: ReportArgs) -> Result<()> {
    let runs = a
        .runs
        .iter()
        .map(|d| Run::load(d))
        .collect::<Result<Vec<_>>>()?;
    let out = a.out.clone().unwrap_or_else(|| a.runs[0].clone());
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let text = render(&runs);
    let path = out.join("report.txt");
    fs::write(&path, &text).with_context(|| format!("writing {}", path.display()))?;
    print!("{text}");
    if let Some(base) = &runs[0].base {
        write_two_step_csv(&out.join("two_step.csv"), base)?;
    }
    Ok(())
}

fn pct(v: Option<f64>) -> String {
    v.map(|s| format!("{:.1}%", 100.0 * s)).unwrap_or_else(|| "-".into())
}

fn fe_label(region: bool, industry: bool) -> &'static str {
    match (region, industry) {
        (false, false) => "none",
        (true, false) => "region",
        (false, true) => "industry",
        (true, true) => "region+industry",
    }
}

fn render(runs: &[Run]) -> String {
    let mut s = String::new();
    let r = &runs[0];
    let e = &r.est;
    let x = e.sample.exposure;
    let _ = writeln!(s, "Run: {}", r.dir.display());
    let _ = writeln!(
        s,
        "{} lag-aligned observations, {} firms; exposure {} / {} / {}; fixed effects: {}",
        e.sample.n_pairs,
        e.sample.n_firms,
        x.mode,
        x.measure,
        x.pool,
        fe_label(e.stage2.spec.fe_region, e.stage2.spec.fe_industry)
    );
    s.push('\n');

    // effects by exporter status
    let _ = writeln!(s, "LBE and LFE productivity effects");
    let _ = writeln!(
        s,
        "{:<15}{:<6}{:>9}{:>9}{:>9}{:>9}{:>10}",
        "", "", "Mean", "Q1", "Median", "Q3", "Signif."
    );
    for g in Subgroup::ALL {
        let summary = e.effects.summary.group(g);
        let row = |s: &mut String, first: &str, name: &str, d: &Distribution| {
            let _ = writeln!(
                s,
                "{:<15}{:<6}{:>9.3}{:>9.3}{:>9.3}{:>9.3}{:>10}",
                first,
                name,
                d.mean,
                d.q1,
                d.median,
                d.q3,
                pct(d.significant_share)
            );
        };
        row(&mut s, g.label(), "LBE", &summary.lbe);
        row(&mut s, "", "LFE", &summary.lfe);
        let ci_lbe = r.ci(&format!("lbe_mean_{}", group_key(g)));
        if !ci_lbe.is_empty() {
            let ci_lfe = r.ci(&format!("lfe_mean_{}", group_key(g)));
            let _ = writeln!(s, "{:<15}mean CI  LBE {ci_lbe}  LFE {ci_lfe}", "");
        }
        let _ = writeln!(s, "{:<15}n = {}", "", summary.n);
    }
    s.push('\n');

    // effect functions
    let f = &e.effects.functions;
    let _ = writeln!(s, "LBE and LFE as functions of lagged state");
    let _ = writeln!(s, "{:<12}{:>10} {:<20}{:>10} {:<20}", "", "LBE", "", "LFE", "");
    for (label, lbe, lfe, lbe_name, lfe_name) in [
        ("Intercept", f.lbe.intercept, f.lfe.intercept, "gamma_x", "gamma_xbar"),
        ("omega(t-1)", f.lbe.omega, f.lfe.omega, "lbe_slope_omega", "lfe_slope_omega"),
        ("X(t-1)", f.lbe.x, f.lfe.x, "lbe_slope_x", "lfe_slope_x"),
        ("Xbar(t-1)", f.lbe.xbar, f.lfe.xbar, "lbe_slope_xbar", "lfe_slope_xbar"),
    ] {
        let _ = writeln!(
            s,
            "{:<12}{:>10.3} {:<20}{:>10.3} {:<20}",
            label,
            lbe,
            r.ci(lbe_name),
            lfe,
            r.ci(lfe_name)
        );
    }
    s.push('\n');

    // production function and long run
    let _ = writeln!(s, "Production function and long-run effects");
    let lr = &e.effects.long_run;
    let opt = |v: Option<f64>, p: usize| v.map(|v| format!("{v:.p$}")).unwrap_or_else(|| "undefined".into());
    for (label, value, name) in [
        ("alpha_K", format!("{:.4}", e.stage2.alpha_k), "alpha_k"),
        ("alpha_L", format!("{:.4}", e.stage2.alpha_l), "alpha_l"),
        ("alpha_M", format!("{:.4}", e.stage1.alpha_m), "alpha_m"),
        ("theta", format!("{:.4}", e.stage1.theta), "theta"),
        ("returns to scale", format!("{:.4}", e.scale_elasticity), "scale_elasticity"),
        ("mean persistence", format!("{:.4}", lr.mean_persistence), "mean_persistence"),
        ("long-run LBE", opt(lr.lbe_long_run, 3), "lbe_long_run"),
        ("long-run LFE", opt(lr.lfe_long_run, 3), "lfe_long_run"),
        ("total per 10pp (%)", opt(lr.total_per_10pp, 1), "total_per_10pp"),
    ] {
        let _ = writeln!(s, "{label:<20}{value:>10} {}", r.ci(name));
    }
    s.push('\n');

    // specification comparison
    let _ = writeln!(s, "Specification comparison");
    let _ = writeln!(
        s,
        "{:<20}{:<7}{:<10}{:<16}{:<16}{:>9}{:>9}{:>9}{:>9}{:>9}{:>8}",
        "run", "mode", "measure", "pool", "fixed effects", "LBE", "LFE", "rho", "a_K", "a_L", "N"
    );
    for run in runs {
        let e = &run.est;
        let x = e.sample.exposure;
        let _ = writeln!(
            s,
            "{:<20}{:<7}{:<10}{:<16}{:<16}{:>9.3}{:>9.3}{:>9.3}{:>9.3}{:>9.3}{:>8}",
            run.label(),
            x.mode.to_string(),
            x.measure.to_string(),
            x.pool.to_string(),
            fe_label(e.stage2.spec.fe_region, e.stage2.spec.fe_industry),
            e.effects.summary.group(Subgroup::All).lbe.mean,
            e.effects.summary.group(Subgroup::All).lfe.mean,
            e.effects.long_run.mean_persistence,
            e.stage2.alpha_k,
            e.stage2.alpha_l,
            e.sample.n_pairs
        );
    }

    if let Some(b) = &r.base {
        s.push('\n');
        let p = &b.premium;
        let _ = writeln!(
            s,
            "Exporter productivity premium ({} exporter and {} non-exporter observations)",
            p.n_exporters, p.n_non_exporters
        );
        let _ = writeln!(s, "mean difference {:>8.3} {}", p.mean_diff, r.ci("premium_mean_diff"));
        let _ = writeln!(s, "{:<8}{:>10}", "tau", "beta1");
        for q in &p.quantiles {
            let _ = writeln!(s, "{:<8.2}{:>10.3} {}", q.tau, q.beta1, r.ci(&premium_tau_name(q.tau)));
        }
        let d = &b.dominance;
        let _ = writeln!(
            s,
            "dominance of exporters: statistic {:.4}, subsampling p-value {:.4} ({} firms per subsample, {} subsamples)",
            d.statistic, d.p_value, d.subsample_firms, d.replications_used
        );
        s.push('\n');
        let _ = writeln!(s, "Two-step comparator (grand-average exposure, firm-clustered SE)");
        let _ = writeln!(
            s,
            "{:<18}{:>10}{:>9}{:>10}{:>9}",
            "fixed effects", "beta_x", "se", "beta_xbar", "se"
        );
        for t in &b.two_step_summary {
            let _ = writeln!(
                s,
                "{:<18}{:>10.3}{:>9.3}{:>10.3}{:>9.3}",
                fe_label(t.fe_region, t.fe_industry),
                t.beta_x,
                t.se_x,
                t.beta_xbar,
                t.se_xbar
            );
        }
        let _ = writeln!(
            s,
            "structural mean LBE {:.3}, mean LFE {:.3}",
            b.structural_mean_lbe, b.structural_mean_lfe
        );
        match &b.algebra {
            Some(a) => {
                let _ = writeln!(
                    s,
                    "grand-average algebra at mean p_ii = {:.4}: implied LBE {:.3}, implied spillover {:.3}{}",
                    b.mean_p_ii,
                    a.lbe_implied,
                    a.spill_implied,
                    if a.spill_divergent { " (p_ii < 0.05: spillover mapping explosive)" } else { "" }
                );
            }
            None => {
                let _ = writeln!(s, "grand-average algebra undefined at mean p_ii = {:.4}", b.mean_p_ii);
            }
        }
    }
    s.lines().map(|l| l.trim_end().to_string() + "\n").collect()
}

fn write_two_step_csv(path: &Path, b: &BaselineOutput) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record([
        "fixed_effects",
        "beta_xbar",
        "se_xbar",
        "lo",
        "hi",
        "beta_x",
        "se_x",
        "structural_mean_lfe",
    ])?;
    for t in &b.two_step_summary {
        w.write_record([
            fe_label(t.fe_region, t.fe_industry).to_string(),
            t.beta_xbar.to_string(),
            t.se_xbar.to_string(),
            (t.beta_xbar - 1.96 * t.se_xbar).to_string(),
            (t.beta_xbar + 1.96 * t.se_xbar).to_string(),
            t.beta_x.to_string(),
            t.se_x.to_string(),
            b.structural_mean_lfe.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
