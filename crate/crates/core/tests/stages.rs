use exportlearn_core::effects::{effects_table, SieveCoefficients};
use exportlearn_core::linalg::least_squares;
use exportlearn_core::panel::{compute_exposure, EstimationSample, ExposureSpec, Panel};
use exportlearn_core::simulate::{simulate_panel, DgpConfig};
use exportlearn_core::stage1::{estimate_stage1, material_proxy, transform};
use exportlearn_core::stage2::{fit_stage2, SieveBasis, SieveSpec, FULL_TERMS, PIVOT_TOL};
use exportlearn_core::{run_pipeline, PipelineSpec};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small(seed: u64) -> DgpConfig {
    DgpConfig {
        seed,
        n_firms: 150,
        n_periods: 5,
        ..DgpConfig::default()
    }
}

fn sample_of(panel: &Panel) -> EstimationSample {
    EstimationSample::build(panel, &compute_exposure(panel, ExposureSpec::default())).unwrap()
}

#[test]
fn simulator_exposure_matches_exposure_module_bit_for_bit() {
    let sim = simulate_panel(&small(1)).unwrap();
    let e = compute_exposure(&sim.panel, ExposureSpec::default());
    assert_eq!(e.peer_count, sim.truth.peer_count);
    for (a, b) in e.xbar.iter().zip(&sim.truth.xbar) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn proxy_identity_holds_at_true_parameters() {
    let cfg = small(2);
    let sim = simulate_panel(&cfg).unwrap();
    let ln_amt = (cfg.alpha_m * cfg.theta()).ln();
    for (r, t) in sim.panel.rows().iter().zip(&sim.truth.rows) {
        let w = material_proxy(r.rel_price.ln(), r.materials.ln(), ln_amt, cfg.alpha_m)
            - cfg.alpha_k * r.capital.ln()
            - cfg.alpha_l * r.labor.ln();
        assert!((w - (t.omega + cfg.alpha_0)).abs() < 1e-10, "{w} vs {}", t.omega);
    }
}

#[test]
fn simulated_productivity_settles_at_its_fixed_point() {
    let cfg = DgpConfig {
        seed: 3,
        n_firms: 1000,
        n_periods: 40,
        omega_const: 0.2,
        b_x: 0.0,
        b_xbar: 0.0,
        ..DgpConfig::default()
    };
    let sim = simulate_panel(&cfg).unwrap();
    let half = cfg.start_year + (cfg.n_periods / 2) as i64;
    let mut firm_means = Vec::new();
    for f in 0..sim.panel.n_firms() {
        let v: Vec<f64> = sim.panel.firm_rows(f)
            .filter(|&i| sim.truth.rows[i].year >= half)
            .map(|i| sim.truth.rows[i].omega)
            .collect();
        firm_means.push(v.iter().sum::<f64>() / v.len() as f64);
    }
    let n = firm_means.len() as f64;
    let mean = firm_means.iter().sum::<f64>() / n;
    let sd = (firm_means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let target = cfg.omega_const / (1.0 - cfg.rho);
    assert!((mean - target).abs() < 3.0 * sd / n.sqrt(), "{mean} vs {target}");
}

#[test]
fn sample_does_not_depend_on_input_row_order() {
    let panel = simulate_panel(&small(4)).unwrap().panel;
    let mut rows = panel.rows().to_vec();
    rows.shuffle(&mut ChaCha8Rng::seed_from_u64(9));
    let shuffled = Panel::new(rows).unwrap();
    let a = sample_of(&panel);
    let b = sample_of(&shuffled);
    assert_eq!(a.obs, b.obs);
    assert_eq!(a.pairs, b.pairs);
    assert_eq!(a.firm_ids, b.firm_ids);
    // building twice is idempotent
    assert_eq!(sample_of(&panel).obs, a.obs);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn exposure_stays_in_unit_interval(seed in 0u64..1000) {
        let panel = simulate_panel(&DgpConfig { n_firms: 60, n_periods: 3, ..small(seed) }).unwrap().panel;
        for spec in [ExposureSpec::default(), ExposureSpec { mode: exportlearn_core::panel::ExposureMode::Grand, ..ExposureSpec::default() }] {
            let e = compute_exposure(&panel, spec);
            prop_assert!(e.xbar.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn stage1_is_invariant_to_scaling_output_and_materials(scale in 0.01f64..100.0) {
        let panel = simulate_panel(&DgpConfig { n_firms: 50, n_periods: 3, ..small(5) }).unwrap().panel;
        let scaled = Panel::new(
            panel
                .rows()
                .iter()
                .cloned()
                .map(|mut r| {
                    r.output *= scale;
                    r.materials *= scale;
                    r
                })
                .collect(),
        )
        .unwrap();
        let a = estimate_stage1(&sample_of(&panel)).unwrap();
        let b = estimate_stage1(&sample_of(&scaled)).unwrap();
        prop_assert!((a.alpha_m - b.alpha_m).abs() <= 1e-12 * a.alpha_m);
        for (x, y) in a.eta.iter().zip(&b.eta) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }
}

#[test]
fn concentrated_solution_satisfies_normal_equations() {
    let est = run_pipeline(&simulate_panel(&small(6)).unwrap().panel, &PipelineSpec::default()).unwrap();
    let s2 = &est.stage2;
    let basis = SieveBasis::new(s2.spec, &est.data);
    let design = basis.design(&est.data, [s2.alpha_k, s2.alpha_l]);
    let target: Vec<f64> = est
        .data
        .rows
        .iter()
        .map(|r| r.y_star - s2.alpha_k * r.k - s2.alpha_l * r.l)
        .collect();
    let fit = least_squares(&design, &target, PIVOT_TOL);
    let fitted = design.mul_vec(&fit.coef);
    let resid: Vec<f64> = target.iter().zip(&fitted).map(|(t, f)| t - f).collect();
    let r_norm = resid.iter().map(|r| r * r).sum::<f64>().sqrt();
    for j in 0..design.cols() {
        let col = design.column(j);
        let c_norm = col.iter().map(|c| c * c).sum::<f64>().sqrt();
        let dot: f64 = col.iter().zip(&resid).map(|(c, r)| c * r).sum();
        assert!(dot.abs() <= 1e-8 * c_norm * r_norm, "column {j}: {dot}");
    }
    // the reported gamma is that inner solution
    for (a, b) in fit.coef.iter().zip(&s2.gamma) {
        assert!((a - b).abs() < 1e-9);
    }
    // and the fitted sieve plus residual reproduces the target
    for ((t, g), r) in target.iter().zip(&s2.g_hat).zip(&s2.resid) {
        assert!((t - g - r).abs() < 1e-12);
    }
}

#[test]
fn shifting_the_outcome_moves_only_the_constant() {
    let est = run_pipeline(&simulate_panel(&small(7)).unwrap().panel, &PipelineSpec::default()).unwrap();
    let shift = 0.75;
    let mut data = est.data.clone();
    for r in &mut data.rows {
        r.y_star += shift;
    }
    let moved = fit_stage2(&data, est.stage2.spec, &est.spec.fit).unwrap();
    assert!((moved.alpha_k - est.stage2.alpha_k).abs() < 1e-6);
    assert!((moved.alpha_l - est.stage2.alpha_l).abs() < 1e-6);
    let c = moved.gamma_names.iter().position(|n| n == FULL_TERMS[0]).unwrap();
    for (j, (a, b)) in moved.gamma.iter().zip(&est.stage2.gamma).enumerate() {
        let expected = if j == c { b + shift } else { *b };
        assert!((a - expected).abs() < 1e-5, "gamma[{j}]: {a} vs {expected}");
    }
}

#[test]
fn relabeling_groups_changes_nothing_without_fixed_effects() {
    let panel = simulate_panel(&small(8)).unwrap().panel;
    let relabeled = Panel::new(
        panel
            .rows()
            .iter()
            .cloned()
            .map(|mut r| {
                r.region = format!("zz-{}", r.region);
                r.industry = format!("{}-renamed", r.industry.chars().rev().collect::<String>());
                r
            })
            .collect(),
    )
    .unwrap();
    let a = run_pipeline(&panel, &PipelineSpec::default()).unwrap();
    let b = run_pipeline(&relabeled, &PipelineSpec::default()).unwrap();
    assert_eq!(a.stage2.alpha_k, b.stage2.alpha_k);
    assert_eq!(a.stage2.alpha_l, b.stage2.alpha_l);
    assert_eq!(a.stage2.gamma, b.stage2.gamma);
    assert_eq!(a.effects, b.effects);
}

#[test]
fn dummies_shift_the_sieve_but_not_its_gradients() {
    let panel = simulate_panel(&small(9)).unwrap().panel;
    let spec = PipelineSpec {
        sieve: SieveSpec {
            fe_region: true,
            fe_industry: true,
            ..SieveSpec::default()
        },
        ..PipelineSpec::default()
    };
    let est = run_pipeline(&panel, &spec).unwrap();
    assert!(est.stage2.gamma_names.iter().any(|n| n.starts_with("region_")));
    let c = SieveCoefficients::of(&est.stage2);
    let table = effects_table(&est.stage2, &est.data);
    for (row, w) in table.rows.iter().zip(&est.stage2.w_hat) {
        let g = c.gradient(*w, row.x_lag, row.xbar_lag);
        assert_eq!((g.lbe, g.lfe, g.persistence), (row.lbe, row.lfe, row.persistence));
    }
}

#[test]
fn per_peer_effect_scales_back_to_the_total() {
    let est = run_pipeline(&simulate_panel(&small(10)).unwrap().panel, &PipelineSpec::default()).unwrap();
    let mut with_peers = 0;
    for r in &est.effects.rows {
        if r.peers_lag >= 1 {
            with_peers += 1;
            assert!((r.lfe_per_peer * r.peers_lag as f64 - r.lfe).abs() <= 1e-12 * r.lfe.abs().max(1.0));
        } else {
            assert!(r.isolated);
        }
    }
    assert!(with_peers > 0);
}

#[test]
fn stage1_transform_uses_the_proxy_of_the_lagged_row() {
    let sample = sample_of(&simulate_panel(&small(11)).unwrap().panel);
    let s1 = estimate_stage1(&sample).unwrap();
    let data = transform(&sample, &s1);
    for (row, p) in data.rows.iter().zip(&sample.pairs) {
        let lag = &sample.obs[p.lagged];
        assert_eq!(
            row.m_star_lag,
            material_proxy(lag.ln_rel_price, lag.m, s1.ln_alpha_m_theta, s1.alpha_m)
        );
        assert_eq!(row.y_star, sample.obs[p.current].y - s1.alpha_m * sample.obs[p.current].m);
    }
}
