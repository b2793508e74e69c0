//! Lag-aligned estimation sample.

use std::collections::BTreeMap;

use super::{ExposureSeries, ExposureSpec, Panel};
use crate::error::{Error, Result};

/// One panel row in logs, with its exposure attached.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub firm: usize,
    pub year: i64,
    pub y: f64,
    pub k: f64,
    pub l: f64,
    pub m: f64,
    /// `ln(rel_price * M / Y)`.
    pub ln_share: f64,
    pub ln_rel_price: f64,
    /// Own export measure (intensity or status, following the exposure spec).
    pub x: f64,
    pub xbar: f64,
    pub peer_count: usize,
    pub isolated: bool,
    pub region: usize,
    pub industry: usize,
}

/// A usable firm-year: `current` has a predecessor `lagged` one year earlier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LaggedPair {
    pub current: usize,
    pub lagged: usize,
}

#[derive(Debug, Clone)]
pub struct EstimationSample {
    /// Every panel row, same order as the panel.
    pub obs: Vec<Observation>,
    /// Lag-aligned rows, ordered by (firm, year).
    pub pairs: Vec<LaggedPair>,
    pub firm_ids: Vec<String>,
    pub regions: Vec<String>,
    pub industries: Vec<String>,
    pub exposure: ExposureSpec,
    /// Rows without a consecutive predecessor.
    pub dropped: usize,
}

impl EstimationSample {
    pub fn build(panel: &Panel, exposure: &ExposureSeries) -> Result<Self> {
        if exposure.len() != panel.len() {
            return Err(Error::InvalidInput(format!(
                "exposure has {} rows but panel has {}",
                exposure.len(),
                panel.len()
            )));
        }
        let regions = labels(panel.rows().iter().map(|r| r.region.as_str()));
        let industries = labels(panel.rows().iter().map(|r| r.industry.as_str()));
        let region_code: BTreeMap<&str, usize> = regions
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        let industry_code: BTreeMap<&str, usize> = industries
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();

        let measure = exposure.spec.measure;
        let firms = panel.row_firms();
        let obs: Vec<Observation> = panel
            .rows()
            .iter()
            .enumerate()
            .map(|(i, r)| Observation {
                firm: firms[i],
                year: r.year,
                y: r.output.ln(),
                k: r.capital.ln(),
                l: r.labor.ln(),
                m: r.materials.ln(),
                ln_share: (r.rel_price * r.materials / r.output).ln(),
                ln_rel_price: r.rel_price.ln(),
                x: measure.apply(r.export_intensity),
                xbar: exposure.xbar[i],
                peer_count: exposure.peer_count[i],
                isolated: exposure.isolated[i],
                region: region_code[r.region.as_str()],
                industry: industry_code[r.industry.as_str()],
            })
            .collect();

        let mut pairs = Vec::new();
        for f in 0..panel.n_firms() {
            let range = panel.firm_rows(f);
            for i in range.start + 1..range.end {
                if obs[i].year == obs[i - 1].year + 1 {
                    pairs.push(LaggedPair {
                        current: i,
                        lagged: i - 1,
                    });
                }
            }
        }
        if pairs.is_empty() {
            return Err(Error::EmptySample);
        }
        let dropped = obs.len() - pairs.len();
        if dropped > 0 {
            log::info!("{dropped} row(s) lack a consecutive predecessor and serve only as lags or shares");
        }
        Ok(Self {
            obs,
            pairs,
            firm_ids: panel.firm_ids().to_vec(),
            regions,
            industries,
            exposure: exposure.spec,
            dropped,
        })
    }

    pub fn n_firms(&self) -> usize {
        self.firm_ids.len()
    }

    pub fn n_pairs(&self) -> usize {
        self.pairs.len()
    }

    /// Firm number of each lag-aligned row.
    pub fn pair_firms(&self) -> Vec<usize> {
        self.pairs.iter().map(|p| self.obs[p.current].firm).collect()
    }

    /// Copy with replaced outcome variables (shares for every row, log
    /// output for every row); regressors untouched.
    pub fn with_outcomes(&self, ln_share: &[f64], y: &[f64]) -> Self {
        let mut out = self.clone();
        for ((o, &s), &yy) in out.obs.iter_mut().zip(ln_share).zip(y) {
            o.ln_share = s;
            o.y = yy;
        }
        out
    }

    /// Sub-sample with the flagged firms removed; firm numbers are
    /// re-indexed, labels kept.
    pub fn without_firms(&self, remove: &[bool]) -> Result<Self> {
        let mut new_firm = vec![usize::MAX; self.n_firms()];
        let mut firm_ids = Vec::new();
        for (f, id) in self.firm_ids.iter().enumerate() {
            if !remove[f] {
                new_firm[f] = firm_ids.len();
                firm_ids.push(id.clone());
            }
        }
        let mut new_row = vec![usize::MAX; self.obs.len()];
        let mut obs = Vec::new();
        for (i, o) in self.obs.iter().enumerate() {
            if !remove[o.firm] {
                new_row[i] = obs.len();
                let mut o = o.clone();
                o.firm = new_firm[o.firm];
                obs.push(o);
            }
        }
        let pairs: Vec<LaggedPair> = self
            .pairs
            .iter()
            .filter(|p| !remove[self.obs[p.current].firm])
            .map(|p| LaggedPair {
                current: new_row[p.current],
                lagged: new_row[p.lagged],
            })
            .collect();
        if pairs.is_empty() {
            return Err(Error::EmptySample);
        }
        Ok(Self {
            dropped: obs.len() - pairs.len(),
            obs,
            pairs,
            firm_ids,
            regions: self.regions.clone(),
            industries: self.industries.clone(),
            exposure: self.exposure,
        })
    }
}

/// Convenience wrapper matching the panel-level operation name.
pub fn build_sample(panel: &Panel, exposure: &ExposureSeries) -> Result<EstimationSample> {
    EstimationSample::build(panel, exposure)
}

fn labels<'a>(values: impl Iterator<Item = &'a str>) -> Vec<String> {
    let set: std::collections::BTreeSet<&str> = values.collect();
    set.into_iter().map(str::to_string).collect()
}
