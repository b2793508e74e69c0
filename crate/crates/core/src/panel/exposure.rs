//! Peer-exposure construction.
//!
//! Peer mode averages the export measure of the *other* members of a
//! firm's cell with uniform weights `1/n`; grand mode averages over all
//! `n + 1` members including the firm itself. Peer sums are accumulated
//! over `j != i` directly (never as `total - own`), so a firm's own value
//! cannot leak into its exposure even through rounding.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Panel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ExposureMode {
    #[default]
    Peer,
    Grand,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ExposureMeasure {
    /// Export intensity `X` itself.
    #[default]
    Intensity,
    /// Export status `1(X > 0)`.
    Status,
}

impl ExposureMeasure {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            ExposureMeasure::Intensity => x,
            ExposureMeasure::Status => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PeerPool {
    #[default]
    RegionIndustry,
    IndustryOnly,
}

macro_rules! kebab_enum {
    ($ty:ty, $($variant:path => $name:literal),+) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let s = match self { $($variant => $name),+ };
                f.write_str(s)
            }
        }
        impl FromStr for $ty {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($name => Ok($variant),)+
                    other => Err(format!("unknown value '{other}'")),
                }
            }
        }
    };
}

kebab_enum!(ExposureMode, ExposureMode::Peer => "peer", ExposureMode::Grand => "grand");
kebab_enum!(ExposureMeasure, ExposureMeasure::Intensity => "intensity", ExposureMeasure::Status => "status");
kebab_enum!(PeerPool, PeerPool::RegionIndustry => "region-industry", PeerPool::IndustryOnly => "industry-only");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub struct ExposureSpec {
    pub mode: ExposureMode,
    pub measure: ExposureMeasure,
    pub pool: PeerPool,
}

/// Per-row exposure aligned with `Panel::rows`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExposureSeries {
    pub spec: ExposureSpec,
    pub xbar: Vec<f64>,
    /// Number of peers `n_it` (other members of the cell).
    pub peer_count: Vec<usize>,
    /// Set when the cell has no peers.
    pub isolated: Vec<bool>,
}

impl ExposureSeries {
    pub fn len(&self) -> usize {
        self.xbar.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xbar.is_empty()
    }
}

/// Exposure of every member of one cell, given the members' measures in
/// order. Returns `(xbar, peer_count)` per member.
///
/// A member without peers gets `xbar = 0` in peer mode and its own value in
/// grand mode.
pub fn group_averages(values: &[f64], mode: ExposureMode) -> Vec<(f64, usize)> {
    let size = values.len();
    let peers = size.saturating_sub(1);
    match mode {
        ExposureMode::Peer => (0..size)
            .map(|i| {
                if peers == 0 {
                    return (0.0, 0);
                }
                let mut s = 0.0;
                for (j, v) in values.iter().enumerate() {
                    if j != i {
                        s += v;
                    }
                }
                (s / peers as f64, peers)
            })
            .collect(),
        ExposureMode::Grand => {
            let s: f64 = values.iter().sum();
            let avg = s / size as f64;
            vec![(avg, peers); size]
        }
    }
}

pub fn compute_exposure(panel: &Panel, spec: ExposureSpec) -> ExposureSeries {
    let rows = panel.rows();
    let mut cells: BTreeMap<(&str, &str, i64), Vec<usize>> = BTreeMap::new();
    for (i, r) in rows.iter().enumerate() {
        let region = match spec.pool {
            PeerPool::RegionIndustry => r.region.as_str(),
            PeerPool::IndustryOnly => "",
        };
        cells
            .entry((region, r.industry.as_str(), r.year))
            .or_default()
            .push(i);
    }

    let mut xbar = vec![0.0; rows.len()];
    let mut peer_count = vec![0; rows.len()];
    let mut isolated = vec![false; rows.len()];
    for members in cells.values() {
        let values: Vec<f64> = members
            .iter()
            .map(|&i| spec.measure.apply(rows[i].export_intensity))
            .collect();
        for (&i, (avg, n)) in members.iter().zip(group_averages(&values, spec.mode)) {
            xbar[i] = avg;
            peer_count[i] = n;
            isolated[i] = n == 0;
        }
    }
    ExposureSeries {
        spec,
        xbar,
        peer_count,
        isolated,
    }
}
