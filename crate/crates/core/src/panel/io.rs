//! CSV ingestion and emission for panels.
//!
//! Expected header: `firm_id, year, Y, K, L, M, X, region, industry[, rel_price]`.
//! Column order is free; extra columns are ignored.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::path::Path;

use serde::Serialize;

use super::{FirmYear, Panel};
use crate::error::{Error, Result};

const REQUIRED: [&str; 9] = [
    "firm_id", "year", "Y", "K", "L", "M", "X", "region", "industry",
];

#[derive(Debug, Clone)]
pub struct SchemaOptions {
    /// Drop offending rows (reported as warnings) instead of failing.
    pub drop_invalid_rows: bool,
    /// Value used when the `rel_price` column is absent.
    pub default_rel_price: f64,
}

impl Default for SchemaOptions {
    fn default() -> Self {
        Self {
            drop_invalid_rows: false,
            default_rel_price: 1.0,
        }
    }
}

/// One row-level problem. `line` is the 1-based line in the file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowDiagnostic {
    pub line: u64,
    pub field: String,
    pub message: String,
}

/// Machine-readable outcome of a load.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub rows_read: usize,
    pub rows_accepted: usize,
    pub errors: Vec<RowDiagnostic>,
    pub warnings: Vec<String>,
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "{} rows read, {} accepted",
            self.rows_read, self.rows_accepted
        )?;
        for e in &self.errors {
            writeln!(f, "  line {}: {}: {}", e.line, e.field, e.message)?;
        }
        for w in &self.warnings {
            writeln!(f, "  warning: {w}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Loaded {
    pub panel: Panel,
    pub report: ValidationReport,
}

pub fn load_panel(path: impl AsRef<Path>, options: &SchemaOptions) -> Result<Loaded> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_panel(file, options)
}

pub(crate) fn read_panel<R: std::io::Read>(reader: R, options: &SchemaOptions) -> Result<Loaded> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let index: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h, i)).collect();
    let missing: Vec<&str> = REQUIRED
        .iter()
        .copied()
        .filter(|c| !index.contains_key(c))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Schema(format!(
            "missing required column(s): {}",
            missing.join(", ")
        )));
    }
    let price_col = index.get("rel_price").copied();

    let mut report = ValidationReport::default();
    if price_col.is_none() {
        let msg = format!(
            "no rel_price column; using {} for every year (shifts the material proxy by a year constant)",
            options.default_rel_price
        );
        log::warn!("{msg}");
        report.warnings.push(msg);
    }

    let mut rows: Vec<(u64, FirmYear)> = Vec::new();
    let mut bad_lines = 0usize;
    for record in rdr.records() {
        let record = record?;
        report.rows_read += 1;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let mut diags = Vec::new();
        let text = |name: &str| record.get(index[name]).unwrap_or("").to_string();
        let num = |name: &str, diags: &mut Vec<RowDiagnostic>| -> f64 {
            let raw = record.get(index[name]).unwrap_or("");
            match raw.parse::<f64>() {
                Ok(v) => v,
                Err(_) => {
                    diags.push(RowDiagnostic {
                        line,
                        field: name.to_string(),
                        message: format!("cannot parse '{raw}' as a number"),
                    });
                    f64::NAN
                }
            }
        };
        let year_raw = text("year");
        let year = match year_raw.parse::<i64>() {
            Ok(y) => y,
            Err(_) => {
                diags.push(RowDiagnostic {
                    line,
                    field: "year".into(),
                    message: format!("cannot parse '{year_raw}' as an integer year"),
                });
                0
            }
        };
        let output = num("Y", &mut diags);
        let capital = num("K", &mut diags);
        let labor = num("L", &mut diags);
        let materials = num("M", &mut diags);
        let export_intensity = num("X", &mut diags);
        let rel_price = match price_col {
            Some(c) => {
                let raw = record.get(c).unwrap_or("");
                match raw.parse::<f64>() {
                    Ok(v) => v,
                    Err(_) => {
                        diags.push(RowDiagnostic {
                            line,
                            field: "rel_price".into(),
                            message: format!("cannot parse '{raw}' as a number"),
                        });
                        f64::NAN
                    }
                }
            }
            None => options.default_rel_price,
        };
        let row = FirmYear {
            firm_id: text("firm_id"),
            year,
            output,
            capital,
            labor,
            materials,
            export_intensity,
            region: text("region"),
            industry: text("industry"),
            rel_price,
        };
        if row.firm_id.is_empty() {
            diags.push(RowDiagnostic {
                line,
                field: "firm_id".into(),
                message: "empty firm identifier".into(),
            });
        }
        if diags.is_empty() {
            for (field, message) in row.check() {
                // parse failures already reported
                diags.push(RowDiagnostic {
                    line,
                    field: field.to_string(),
                    message,
                });
            }
        }
        if diags.is_empty() {
            rows.push((line, row));
        } else {
            bad_lines += 1;
            report.errors.extend(diags);
        }
    }

    // duplicate keys, keeping the first occurrence
    let mut seen: HashMap<(String, i64), u64> = HashMap::new();
    let mut unique = Vec::with_capacity(rows.len());
    for (line, row) in rows {
        let key = (row.firm_id.clone(), row.year);
        if let Some(first) = seen.get(&key) {
            bad_lines += 1;
            report.errors.push(RowDiagnostic {
                line,
                field: "firm_id/year".into(),
                message: format!(
                    "duplicate (firm, year) = ({}, {}); first seen on line {first}",
                    row.firm_id, row.year
                ),
            });
        } else {
            seen.insert(key, line);
            unique.push((line, row));
        }
    }

    let mut year_price: BTreeMap<i64, (f64, u64)> = BTreeMap::new();
    for (line, row) in &unique {
        match year_price.get(&row.year) {
            Some(&(p, first)) if p != row.rel_price => {
                return Err(Error::Schema(format!(
                    "rel_price must be constant within a year: year {} has {p} (line {first}) and {} (line {line})",
                    row.year, row.rel_price
                )));
            }
            Some(_) => {}
            None => {
                year_price.insert(row.year, (row.rel_price, *line));
            }
        }
    }

    if !report.errors.is_empty() {
        if options.drop_invalid_rows {
            let msg = format!("dropped {bad_lines} invalid row(s)");
            log::warn!("{msg}");
            for e in &report.errors {
                log::warn!("line {}: {}: {}", e.line, e.field, e.message);
            }
            report.warnings.push(msg);
        } else {
            report.rows_accepted = 0;
            return Err(Error::Validation(Box::new(report)));
        }
    }

    let rows: Vec<FirmYear> = unique.into_iter().map(|(_, r)| r).collect();
    report.rows_accepted = rows.len();
    let panel = Panel::new(rows)?;
    Ok(Loaded { panel, report })
}

pub fn write_panel_csv(panel: &Panel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record([
        "firm_id",
        "year",
        "Y",
        "K",
        "L",
        "M",
        "X",
        "region",
        "industry",
        "rel_price",
    ])?;
    for r in panel.rows() {
        w.write_record([
            r.firm_id.clone(),
            r.year.to_string(),
            r.output.to_string(),
            r.capital.to_string(),
            r.labor.to_string(),
            r.materials.to_string(),
            r.export_intensity.to_string(),
            r.region.clone(),
            r.industry.clone(),
            r.rel_price.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
