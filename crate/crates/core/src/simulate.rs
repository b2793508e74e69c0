//! Synthetic firm panels with known technology and productivity law.
//!
//! Timing per period `t` (after the first):
//!
//! 1. `K_t, L_t` follow from investment and hiring chosen at `t-1`.
//! 2. `omega_t = h(omega_{t-1}, X_{t-1}, Xbar_{t-1}) + zeta_t`.
//! 3. `X_t` is drawn from a censored policy increasing in `omega_t`.
//! 4. `Xbar_t` is formed once every firm's `X_t` is known.
//! 5. `M_t` solves the static first-order condition; `Y_t` adds `eta_t`.
//!
//! Policies are reduced-form. Firm `i` draws from its own ChaCha stream, and
//! group-level draws and prices use a separate stream, so a seed fixes the
//! whole panel.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::{group_averages, ExposureMode, FirmYear, Panel};

const COMMON_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DgpConfig {
    pub seed: u64,
    pub n_firms: usize,
    /// Periods kept after burn-in.
    pub n_periods: usize,
    pub burn_in: usize,
    pub start_year: i64,

    pub alpha_0: f64,
    pub alpha_k: f64,
    pub alpha_l: f64,
    pub alpha_m: f64,
    pub delta: f64,

    /// `h = omega_const + rho w + b_x X + b_xbar Xbar + quadratic terms`.
    pub omega_const: f64,
    pub rho: f64,
    pub b_x: f64,
    pub b_xbar: f64,
    pub c_ww: f64,
    pub c_xx: f64,
    pub c_xbarxbar: f64,
    pub c_wx: f64,
    pub c_wxbar: f64,
    pub c_xxbar: f64,
    pub sigma_zeta: f64,
    pub sigma_eta: f64,

    /// Latent export propensity:
    /// `const + persistence X_{t-1} + loading (omega_t - mean_t omega) + group + group-year + noise`,
    /// censored to zero below zero and capped at one.
    pub export_const: f64,
    pub export_persistence: f64,
    pub export_loading: f64,
    pub export_noise_sd: f64,
    pub export_group_sd: f64,
    pub export_group_year_sd: f64,

    /// `I = delta K exp(loading omega - reversion (k - kbar_i) + noise)`.
    pub inv_loading: f64,
    pub inv_reversion: f64,
    pub inv_noise_sd: f64,
    /// `l_t = l_{t-1} + loading omega - reversion (l - lbar_i) + noise`.
    pub labor_loading: f64,
    pub labor_reversion: f64,
    pub labor_noise_sd: f64,
    /// Firm-level targets `kbar_i, lbar_i` ~ Normal(mean, sd) in logs.
    pub capital_mean: f64,
    pub capital_sd: f64,
    pub labor_mean: f64,
    pub labor_sd: f64,

    pub n_regions: usize,
    pub n_industries: usize,
    /// Assignment probabilities; empty means uniform.
    pub region_weights: Vec<f64>,
    pub industry_weights: Vec<f64>,

    /// Relative material price per kept year; empty means lognormal draws
    /// with `price_sd`.
    pub rel_prices: Vec<f64>,
    pub price_sd: f64,
}

impl Default for DgpConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            n_firms: 1000,
            n_periods: 10,
            burn_in: 20,
            start_year: 1995,
            alpha_0: 0.0,
            alpha_k: 0.25,
            alpha_l: 0.45,
            alpha_m: 0.30,
            delta: 0.1,
            omega_const: 0.0,
            rho: 0.5,
            b_x: 0.3,
            b_xbar: 0.2,
            c_ww: 0.0,
            c_xx: 0.0,
            c_xbarxbar: 0.0,
            c_wx: 0.0,
            c_wxbar: 0.0,
            c_xxbar: 0.0,
            sigma_zeta: 0.05,
            sigma_eta: 0.1,
            export_const: -0.5,
            export_persistence: 0.6,
            export_loading: 1.0,
            export_noise_sd: 0.4,
            export_group_sd: 0.3,
            export_group_year_sd: 0.2,
            inv_loading: 0.5,
            inv_reversion: 0.3,
            inv_noise_sd: 0.3,
            labor_loading: 0.3,
            labor_reversion: 0.3,
            labor_noise_sd: 0.1,
            capital_mean: 4.0,
            capital_sd: 1.0,
            labor_mean: 3.0,
            labor_sd: 0.8,
            n_regions: 10,
            n_industries: 10,
            region_weights: Vec::new(),
            industry_weights: Vec::new(),
            rel_prices: Vec::new(),
            price_sd: 0.05,
        }
    }
}

impl DgpConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: DgpConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&s)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.alpha_m > 0.0 && self.alpha_m < 1.0) {
            return bad(format!("alpha_m must lie in (0, 1), got {}", self.alpha_m));
        }
        if self.rho.abs().partial_cmp(&1.0) != Some(std::cmp::Ordering::Less) {
            return bad(format!("|rho| must be below 1, got {}", self.rho));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        for (name, v) in [
            ("sigma_zeta", self.sigma_zeta),
            ("sigma_eta", self.sigma_eta),
            ("export_noise_sd", self.export_noise_sd),
            ("export_group_sd", self.export_group_sd),
            ("export_group_year_sd", self.export_group_year_sd),
            ("inv_noise_sd", self.inv_noise_sd),
            ("labor_noise_sd", self.labor_noise_sd),
            ("capital_sd", self.capital_sd),
            ("labor_sd", self.labor_sd),
            ("price_sd", self.price_sd),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be a non-negative number, got {v}"));
            }
        }
        if self.n_firms == 0 || self.n_periods < 2 {
            return bad("need at least one firm and two periods".into());
        }
        if self.n_regions == 0 || self.n_industries == 0 {
            return bad("need at least one region and one industry".into());
        }
        for (name, w, n) in [
            ("region_weights", &self.region_weights, self.n_regions),
            ("industry_weights", &self.industry_weights, self.n_industries),
        ] {
            if !w.is_empty()
                && (w.len() != n || w.iter().any(|v| v.is_nan() || *v < 0.0) || w.iter().sum::<f64>() <= 0.0)
            {
                return bad(format!("{name} must hold {n} non-negative weights"));
            }
        }
        if !self.rel_prices.is_empty() {
            if self.rel_prices.len() != self.n_periods {
                return bad(format!(
                    "rel_prices must hold n_periods = {} values",
                    self.n_periods
                ));
            }
            if self.rel_prices.iter().any(|p| !(*p > 0.0 && p.is_finite())) {
                return bad("rel_prices must be positive".into());
            }
        }
        Ok(())
    }

    /// `theta = E[exp(eta)]` for normal shocks.
    pub fn theta(&self) -> f64 {
        (0.5 * self.sigma_eta * self.sigma_eta).exp()
    }

    /// Conditional mean of productivity.
    pub fn h(&self, w: f64, x: f64, xbar: f64) -> f64 {
        self.omega_const
            + self.rho * w
            + self.b_x * x
            + self.b_xbar * xbar
            + self.c_ww * w * w
            + self.c_xx * x * x
            + self.c_xbarxbar * xbar * xbar
            + self.c_wx * w * x
            + self.c_wxbar * w * xbar
            + self.c_xxbar * x * xbar
    }

    pub fn is_linear(&self) -> bool {
        [
            self.c_ww,
            self.c_xx,
            self.c_xbarxbar,
            self.c_wx,
            self.c_wxbar,
            self.c_xxbar,
        ]
        .iter()
        .all(|c| *c == 0.0)
    }

    pub fn firm_id(&self, i: usize) -> String {
        let width = self.n_firms.to_string().len().max(4);
        format!("F{:0width$}", i + 1)
    }
}

/// True `(LBE, LFE)` of the configured law at `(omega, X, Xbar)`.
pub fn oracle_effects(config: &DgpConfig, at: (f64, f64, f64)) -> (f64, f64) {
    let (w, x, xbar) = at;
    let lbe = config.b_x + 2.0 * config.c_xx * x + config.c_wx * w + config.c_xxbar * xbar;
    let lfe =
        config.b_xbar + 2.0 * config.c_xbarxbar * xbar + config.c_wxbar * w + config.c_xxbar * x;
    (lbe, lfe)
}

/// Hidden state of one simulated firm-year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRow {
    pub firm_id: String,
    pub year: i64,
    pub omega: f64,
    pub eta: f64,
    pub zeta: f64,
}

/// Truth aligned row-for-row with the simulated panel.
#[derive(Debug, Clone)]
pub struct Truth {
    pub rows: Vec<TruthRow>,
    /// Peer average export intensity used inside the law of motion.
    pub xbar: Vec<f64>,
    pub peer_count: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Simulated {
    pub panel: Panel,
    pub truth: Truth,
}

#[derive(Clone)]
struct FirmState {
    rng: ChaCha8Rng,
    group: usize,
    kbar: f64,
    lbar: f64,
    k: f64,
    l: f64,
    omega: f64,
    x: f64,
    xbar: f64,
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn pick(rng: &mut ChaCha8Rng, weights: &[f64], n: usize) -> usize {
    if weights.is_empty() {
        return rng.random_range(0..n);
    }
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    n - 1
}

pub fn simulate_panel(config: &DgpConfig) -> Result<Simulated> {
    config.validate()?;
    let c = config;
    let n_groups = c.n_regions * c.n_industries;
    let total = c.burn_in + c.n_periods;

    let mut common = ChaCha8Rng::seed_from_u64(c.seed);
    common.set_stream(COMMON_STREAM);
    let group_effect: Vec<f64> = (0..n_groups)
        .map(|_| c.export_group_sd * normal(&mut common))
        .collect();
    let rel_prices: Vec<f64> = if c.rel_prices.is_empty() {
        (0..c.n_periods)
            .map(|_| (c.price_sd * normal(&mut common)).exp())
            .collect()
    } else {
        c.rel_prices.clone()
    };

    let mut firms: Vec<FirmState> = (0..c.n_firms)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
            rng.set_stream(i as u64);
            let region = pick(&mut rng, &c.region_weights, c.n_regions);
            let industry = pick(&mut rng, &c.industry_weights, c.n_industries);
            let kbar = c.capital_mean + c.capital_sd * normal(&mut rng);
            let lbar = c.labor_mean + c.labor_sd * normal(&mut rng);
            let omega_sd = c.sigma_zeta / (1.0 - c.rho * c.rho).sqrt();
            let omega = c.omega_const / (1.0 - c.rho) + omega_sd * normal(&mut rng);
            FirmState {
                rng,
                group: region * c.n_industries + industry,
                kbar,
                lbar,
                k: kbar,
                l: lbar,
                omega,
                x: 0.0,
                xbar: 0.0,
            }
        })
        .collect();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_groups];
    for (i, f) in firms.iter().enumerate() {
        members[f.group].push(i);
    }

    // kept[t][i] = (k, l, omega, x, xbar, peers, eta, zeta)
    let mut kept: Vec<Vec<[f64; 8]>> = Vec::with_capacity(c.n_periods);
    for t in 0..total {
        let mut zetas = vec![0.0; c.n_firms];
        if t > 0 {
            for (i, f) in firms.iter_mut().enumerate() {
                // inputs chosen at t-1 from last period's state
                let inv = c.delta
                    * f.k.exp()
                    * (c.inv_loading * f.omega - c.inv_reversion * (f.k - f.kbar)
                        + c.inv_noise_sd * normal(&mut f.rng))
                    .exp();
                let k_next = ((1.0 - c.delta) * f.k.exp() + inv).ln();
                let l_next = f.l + c.labor_loading * f.omega - c.labor_reversion * (f.l - f.lbar)
                    + c.labor_noise_sd * normal(&mut f.rng);
                let zeta = c.sigma_zeta * normal(&mut f.rng);
                f.omega = c.h(f.omega, f.x, f.xbar) + zeta;
                f.k = k_next;
                f.l = l_next;
                zetas[i] = zeta;
            }
        }
        let mean_omega = firms.iter().map(|f| f.omega).sum::<f64>() / c.n_firms as f64;
        let group_year: Vec<f64> = (0..n_groups)
            .map(|_| c.export_group_year_sd * normal(&mut common))
            .collect();
        for f in firms.iter_mut() {
            let latent = c.export_const
                + c.export_persistence * f.x
                + c.export_loading * (f.omega - mean_omega)
                + group_effect[f.group]
                + group_year[f.group]
                + c.export_noise_sd * normal(&mut f.rng);
            f.x = if latent <= 0.0 { 0.0 } else { latent.min(1.0) };
        }
        let mut peers = vec![0usize; c.n_firms];
        for m in &members {
            let values: Vec<f64> = m.iter().map(|&i| firms[i].x).collect();
            for (&i, (avg, n)) in m.iter().zip(group_averages(&values, ExposureMode::Peer)) {
                firms[i].xbar = avg;
                peers[i] = n;
            }
        }
        let etas: Vec<f64> = firms
            .iter_mut()
            .map(|f| c.sigma_eta * normal(&mut f.rng))
            .collect();
        if t >= c.burn_in {
            kept.push(
                firms
                    .iter()
                    .enumerate()
                    .map(|(i, f)| {
                        [f.k, f.l, f.omega, f.x, f.xbar, peers[i] as f64, etas[i], zetas[i]]
                    })
                    .collect(),
            );
        }
    }

    let ln_am_theta = (c.alpha_m * c.theta()).ln();
    let mut rows = Vec::with_capacity(c.n_firms * c.n_periods);
    let mut truth = Vec::with_capacity(rows.capacity());
    let mut xbar = Vec::with_capacity(rows.capacity());
    let mut peer_count = Vec::with_capacity(rows.capacity());
    for (i, f) in firms.iter().enumerate() {
        let region = f.group / c.n_industries;
        let industry = f.group % c.n_industries;
        for (t, period) in kept.iter().enumerate() {
            let [k, l, omega, x, xb, peers, eta, zeta] = period[i];
            let rp = rel_prices[t];
            let m = (ln_am_theta + c.alpha_0 + c.alpha_k * k + c.alpha_l * l + omega - rp.ln())
                / (1.0 - c.alpha_m);
            let y = c.alpha_0 + c.alpha_k * k + c.alpha_l * l + c.alpha_m * m + omega + eta;
            let year = c.start_year + t as i64;
            let row = FirmYear {
                firm_id: c.firm_id(i),
                year,
                output: y.exp(),
                capital: k.exp(),
                labor: l.exp(),
                materials: m.exp(),
                export_intensity: x,
                region: format!("R{:02}", region + 1),
                industry: format!("I{:02}", industry + 1),
                rel_price: rp,
            };
            let levels_ok = [row.output, row.capital, row.labor, row.materials]
                .iter()
                .all(|v| v.is_finite() && *v > 0.0);
            if !levels_ok || !omega.is_finite() {
                return Err(Error::NonFinite(format!(
                    "simulated firm {} year {year}: Y={}, K={}, L={}, M={}, omega={omega}; \
                     the configured policies are explosive",
                    row.firm_id, row.output, row.capital, row.labor, row.materials
                )));
            }
            rows.push(row);
            truth.push(TruthRow {
                firm_id: c.firm_id(i),
                year,
                omega,
                eta,
                zeta,
            });
            xbar.push(xb);
            peer_count.push(peers as usize);
        }
    }
    let panel = Panel::new(rows)?;
    Ok(Simulated {
        panel,
        truth: Truth {
            rows: truth,
            xbar,
            peer_count,
        },
    })
}

pub fn write_truth_csv(path: &Path, truth: &Truth) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in &truth.rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
