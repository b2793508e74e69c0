//! Firm-year panel data model.
//!
//! A [`Panel`] owns its rows sorted by `(firm_id, year)` and keeps two
//! indexes: contiguous row ranges per firm and member rows per
//! `(region, industry, year)` cell. Everything downstream (exposures,
//! estimation samples) refers to rows by their position in `rows`.

mod exposure;
mod io;
mod sample;

use std::collections::{BTreeMap, HashMap};
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use exposure::{
    compute_exposure, group_averages, ExposureMeasure, ExposureMode, ExposureSeries,
    ExposureSpec, PeerPool,
};
pub use io::{load_panel, write_panel_csv, Loaded, RowDiagnostic, SchemaOptions, ValidationReport};
pub use sample::{build_sample, EstimationSample, LaggedPair, Observation};

/// One firm-year observation in levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirmYear {
    pub firm_id: String,
    pub year: i64,
    /// Deflated output `Y`.
    pub output: f64,
    /// Capital stock `K`.
    pub capital: f64,
    /// Labor headcount `L`.
    pub labor: f64,
    /// Deflated materials `M`.
    pub materials: f64,
    /// Export intensity `X` in `[0, 1]`.
    pub export_intensity: f64,
    pub region: String,
    pub industry: String,
    /// Year-level relative price `P^M / P^Y`.
    pub rel_price: f64,
}

impl FirmYear {
    /// Field-level invariant checks; returns `(field, message)` pairs.
    pub fn check(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        for (name, v) in [
            ("Y", self.output),
            ("K", self.capital),
            ("L", self.labor),
            ("M", self.materials),
            ("rel_price", self.rel_price),
        ] {
            if !(v.is_finite() && v > 0.0) {
                out.push((name, format!("{name} must be strictly positive, got {v}")));
            }
        }
        let x = self.export_intensity;
        if !(x.is_finite() && (0.0..=1.0).contains(&x)) {
            out.push(("X", format!("X must lie in [0, 1], got {x}")));
        }
        out
    }
}

/// Key of a peer cell in the baseline grouping.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupKey {
    pub region: String,
    pub industry: String,
    pub year: i64,
}

/// Validated, sorted firm-year panel.
#[derive(Debug, Clone)]
pub struct Panel {
    rows: Vec<FirmYear>,
    firm_ids: Vec<String>,
    firm_ranges: Vec<Range<usize>>,
    firm_lookup: HashMap<String, usize>,
    groups: BTreeMap<GroupKey, Vec<usize>>,
}

impl Panel {
    /// Sorts, validates and indexes `rows`.
    pub fn new(mut rows: Vec<FirmYear>) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            if let Some((field, msg)) = row.check().into_iter().next() {
                return Err(Error::InvalidInput(format!(
                    "row {i} (firm {}, year {}): {field}: {msg}",
                    row.firm_id, row.year
                )));
            }
        }
        rows.sort_by(|a, b| a.firm_id.cmp(&b.firm_id).then(a.year.cmp(&b.year)));
        for w in rows.windows(2) {
            if w[0].firm_id == w[1].firm_id && w[0].year == w[1].year {
                return Err(Error::InvalidInput(format!(
                    "duplicate (firm, year) = ({}, {})",
                    w[0].firm_id, w[0].year
                )));
            }
        }
        check_year_prices(&rows)?;

        let mut firm_ids = Vec::new();
        let mut firm_ranges = Vec::new();
        let mut start = 0;
        for i in 1..=rows.len() {
            if i == rows.len() || rows[i].firm_id != rows[start].firm_id {
                firm_ids.push(rows[start].firm_id.clone());
                firm_ranges.push(start..i);
                start = i;
            }
        }
        let firm_lookup = firm_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect();
        let mut groups: BTreeMap<GroupKey, Vec<usize>> = BTreeMap::new();
        for (i, row) in rows.iter().enumerate() {
            groups
                .entry(GroupKey {
                    region: row.region.clone(),
                    industry: row.industry.clone(),
                    year: row.year,
                })
                .or_default()
                .push(i);
        }

        Ok(Self {
            rows,
            firm_ids,
            firm_ranges,
            firm_lookup,
            groups,
        })
    }

    pub fn rows(&self) -> &[FirmYear] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_firms(&self) -> usize {
        self.firm_ids.len()
    }

    pub fn firm_ids(&self) -> &[String] {
        &self.firm_ids
    }

    /// Row range of firm number `firm` (in sorted firm order).
    pub fn firm_rows(&self, firm: usize) -> Range<usize> {
        self.firm_ranges[firm].clone()
    }

    pub fn firm_index(&self, firm_id: &str) -> Option<usize> {
        self.firm_lookup.get(firm_id).copied()
    }

    /// Firm number of every row.
    pub fn row_firms(&self) -> Vec<usize> {
        let mut out = vec![0; self.rows.len()];
        for (f, r) in self.firm_ranges.iter().enumerate() {
            for o in &mut out[r.clone()] {
                *o = f;
            }
        }
        out
    }

    pub fn groups(&self) -> &BTreeMap<GroupKey, Vec<usize>> {
        &self.groups
    }

    /// Copy of the panel with `X` of one row replaced.
    pub fn with_export_intensity(&self, row: usize, value: f64) -> Result<Self> {
        let mut rows = self.rows.clone();
        rows[row].export_intensity = value;
        Panel::new(rows)
    }
}

fn check_year_prices(rows: &[FirmYear]) -> Result<()> {
    let mut by_year: BTreeMap<i64, f64> = BTreeMap::new();
    for row in rows {
        match by_year.get(&row.year) {
            Some(&p) if p != row.rel_price => {
                return Err(Error::InvalidInput(format!(
                    "rel_price must be constant within year {}: saw {} and {}",
                    row.year, p, row.rel_price
                )));
            }
            Some(_) => {}
            None => {
                by_year.insert(row.year, row.rel_price);
            }
        }
    }
    Ok(())
}
