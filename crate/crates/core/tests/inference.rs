use exportlearn_core::inference::{
    evaluate, intervals, jackknife, rademacher_weights, regenerate, wild_bootstrap,
    BootstrapOptions, EstimandLayout, JackknifeOptions, ParamSet,
};
use exportlearn_core::simulate::{simulate_panel, DgpConfig};
use exportlearn_core::{run_pipeline, Estimates, PipelineSpec};

fn fit(cfg: DgpConfig) -> Estimates {
    run_pipeline(&simulate_panel(&cfg).unwrap().panel, &PipelineSpec::default()).unwrap()
}

fn small(seed: u64) -> DgpConfig {
    DgpConfig {
        seed,
        n_firms: 120,
        n_periods: 5,
        ..DgpConfig::default()
    }
}

#[test]
fn regenerated_errors_flip_sign_by_firm() {
    let est = fit(small(1));
    let w = rademacher_weights(5, 0, est.sample.n_firms());
    let boot = regenerate(&est, &w);
    let s1 = &est.stage1;
    for (i, o) in boot.obs.iter().enumerate() {
        let eta_b = s1.ln_alpha_m_theta - o.ln_share;
        assert!((eta_b - w[o.firm] * s1.eta[i]).abs() < 1e-12);
    }
    let s2 = &est.stage2;
    for (j, p) in boot.pairs.iter().enumerate() {
        let o = &boot.obs[p.current];
        let fitted = s2.alpha_k * o.k + s2.alpha_l * o.l + s2.alpha_m * o.m + s2.g_hat[j];
        let resid_b = o.y - fitted;
        assert!((resid_b - w[o.firm] * s2.resid[j]).abs() < 1e-10);
    }
    // with every weight +1 the original sample comes back
    let same = regenerate(&est, &vec![1.0; est.sample.n_firms()]);
    for (a, b) in same.obs.iter().zip(&est.sample.obs) {
        assert!((a.y - b.y).abs() < 1e-10 && (a.ln_share - b.ln_share).abs() < 1e-12);
    }
}

#[test]
fn noiseless_data_reproduces_the_point_estimate_in_every_replicate() {
    let est = fit(DgpConfig {
        sigma_eta: 0.0,
        sigma_zeta: 0.0,
        ..small(2)
    });
    let opts = BootstrapOptions {
        replicates: 8,
        ..BootstrapOptions::default()
    };
    let boot = wild_bootstrap(&est, &opts).unwrap();
    assert!(boot.failed.is_empty());
    let point = evaluate(&ParamSet::of(&est), &est.sample);
    for name in ["alpha_m", "alpha_k", "alpha_l", "lbe_mean_all", "lfe_mean_all"] {
        let j = boot.layout.index(name).unwrap();
        for v in boot.column(j) {
            assert!((v - point[j]).abs() < 1e-6, "{name}: {v} vs {}", point[j]);
        }
    }
}

#[test]
fn point_estimands_match_the_fit() {
    let est = fit(small(3));
    let layout = EstimandLayout::of(&est);
    let point = evaluate(&ParamSet::of(&est), &est.sample);
    let at = |n: &str| point[layout.index(n).unwrap()];
    assert_eq!(at("alpha_k"), est.stage2.alpha_k);
    assert!((at("lbe_mean_all") - est.effects.mean_lbe()).abs() < 1e-12);
    assert!((at("lfe_mean_all") - est.effects.mean_lfe()).abs() < 1e-12);
    for (i, r) in est.effects.rows.iter().enumerate() {
        assert!((point[layout.lbe_row(i)] - r.lbe).abs() < 1e-12);
        assert!((point[layout.lfe_row(i)] - r.lfe).abs() < 1e-12);
    }
    // omega recovered inside the estimands agrees with the fit
    let omega = est.omega();
    let premium = at("premium_mean_diff");
    let flags = est.exporter_now();
    let mean = |want: bool| {
        let v: Vec<f64> = omega.iter().zip(&flags).filter(|(_, f)| **f == want).map(|(o, _)| *o).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    assert!((premium - (mean(true) - mean(false))).abs() < 1e-9);
}

#[test]
fn wider_level_never_gives_a_narrower_interval() {
    let est = fit(small(4));
    let boot = wild_bootstrap(
        &est,
        &BootstrapOptions {
            replicates: 40,
            ..BootstrapOptions::default()
        },
    )
    .unwrap();
    let jack = jackknife(&est, &JackknifeOptions::default()).unwrap();
    let point = evaluate(&ParamSet::of(&est), &est.sample);
    let narrow = intervals(&point, &boot, &jack.acceleration, 0.90).unwrap();
    let wide = intervals(&point, &boot, &jack.acceleration, 0.95).unwrap();
    let mut compared = 0;
    for (a, b) in narrow.intervals.iter().zip(&wide.intervals) {
        if a.lo.is_nan() {
            continue;
        }
        assert!(b.lo <= a.lo && b.hi >= a.hi, "{a:?} vs {b:?}");
        compared += 1;
    }
    assert!(compared > 0);
    // reproducible from the same inputs
    let again = wild_bootstrap(
        &est,
        &BootstrapOptions {
            replicates: 40,
            ..BootstrapOptions::default()
        },
    )
    .unwrap();
    assert_eq!(again, boot);
}
