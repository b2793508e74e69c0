//! Second-order polynomial sieve for the productivity conditional mean.
//!
//! Column order of the full basis (fixed):
//!
//! | index | term      |
//! |-------|-----------|
//! | 0     | 1         |
//! | 1     | W         |
//! | 2     | W^2       |
//! | 3     | X         |
//! | 4     | X^2       |
//! | 5     | Xbar      |
//! | 6     | Xbar^2    |
//! | 7     | W * X     |
//! | 8     | W * Xbar  |
//! | 9     | X * Xbar  |
//!
//! The exogenous-Markov basis keeps only columns 0-2. Region and industry
//! dummies (first level omitted) are appended after the polynomial block.

use serde::{Deserialize, Serialize};

use crate::linalg::Design;
use crate::stage1::TransformedSample;

pub const FULL_TERMS: [&str; 10] = [
    "1", "w", "w2", "x", "x2", "xbar", "xbar2", "w_x", "w_xbar", "x_xbar",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SieveKind {
    /// `g(W, X, Xbar)`, degree two.
    #[default]
    Full,
    /// `g(W)` only: the exogenous Markov comparator.
    ExogenousMarkov,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct SieveSpec {
    pub kind: SieveKind,
    pub fe_region: bool,
    pub fe_industry: bool,
}

impl SieveSpec {
    pub fn n_poly(&self) -> usize {
        match self.kind {
            SieveKind::Full => 10,
            SieveKind::ExogenousMarkov => 3,
        }
    }

    /// Polynomial terms of one row, in basis order.
    pub fn poly_terms(&self, w: f64, x: f64, xbar: f64) -> Vec<f64> {
        match self.kind {
            SieveKind::Full => full_terms(w, x, xbar).to_vec(),
            SieveKind::ExogenousMarkov => vec![1.0, w, w * w],
        }
    }
}

pub fn full_terms(w: f64, x: f64, xbar: f64) -> [f64; 10] {
    [1.0, w, w * w, x, x * x, xbar, xbar * xbar, w * x, w * xbar, x * xbar]
}

/// Sieve layout for one transformed sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SieveBasis {
    pub spec: SieveSpec,
    pub names: Vec<String>,
    n_regions: usize,
    n_industries: usize,
}

impl SieveBasis {
    pub fn new(spec: SieveSpec, data: &TransformedSample) -> Self {
        let mut names: Vec<String> = FULL_TERMS[..spec.n_poly()]
            .iter()
            .map(|s| s.to_string())
            .collect();
        if spec.fe_region {
            names.extend((1..data.n_regions).map(|r| format!("region_{r}")));
        }
        if spec.fe_industry {
            names.extend((1..data.n_industries).map(|i| format!("industry_{i}")));
        }
        Self {
            spec,
            names,
            n_regions: data.n_regions,
            n_industries: data.n_industries,
        }
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    /// `W(alpha)` for every row.
    pub fn proxy(&self, data: &TransformedSample, alpha: [f64; 2]) -> Vec<f64> {
        data.rows
            .iter()
            .map(|r| r.m_star_lag - alpha[0] * r.k_lag - alpha[1] * r.l_lag)
            .collect()
    }

    pub fn design(&self, data: &TransformedSample, alpha: [f64; 2]) -> Design {
        let w = self.proxy(data, alpha);
        let rows = &data.rows;
        let mut d = Design::with_capacity(rows.len(), self.dim());
        d.push_column(std::iter::repeat_n(1.0, rows.len()));
        d.push_column(w.iter().copied());
        d.push_column(w.iter().map(|v| v * v));
        if self.spec.kind == SieveKind::Full {
            d.push_column(rows.iter().map(|r| r.x_lag));
            d.push_column(rows.iter().map(|r| r.x_lag * r.x_lag));
            d.push_column(rows.iter().map(|r| r.xbar_lag));
            d.push_column(rows.iter().map(|r| r.xbar_lag * r.xbar_lag));
            d.push_column(w.iter().zip(rows).map(|(w, r)| w * r.x_lag));
            d.push_column(w.iter().zip(rows).map(|(w, r)| w * r.xbar_lag));
            d.push_column(rows.iter().map(|r| r.x_lag * r.xbar_lag));
        }
        if self.spec.fe_region {
            for level in 1..self.n_regions {
                d.push_column(rows.iter().map(|r| if r.region == level { 1.0 } else { 0.0 }));
            }
        }
        if self.spec.fe_industry {
            for level in 1..self.n_industries {
                d.push_column(rows.iter().map(|r| if r.industry == level { 1.0 } else { 0.0 }));
            }
        }
        d
    }
}
