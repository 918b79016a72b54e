use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{ExperimentError, Result};

/// Number of meshes used by a rate fit.
pub const RATE_WINDOW: usize = 3;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CellErrors {
    pub l2: Option<f64>,
    pub energy: Option<f64>,
}

/// One mesh × variant result.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub variant: String,
    /// Elements per side (surfaces) or per patch (rods).
    pub mesh: usize,
    pub dofs: usize,
    pub errors: CellErrors,
    pub cond: Option<f64>,
    pub newton_iters: Option<usize>,
    pub outliers: Option<usize>,
    pub converged: Option<bool>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, f64>,
}

impl Cell {
    pub fn new(variant: impl Into<String>, mesh: usize, dofs: usize) -> Self {
        Self { variant: variant.into(), mesh, dofs, ..Self::default() }
    }
}

/// A benchmark assertion and its outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Numeric table written as a CSV file next to the report.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsvTable {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Formats with 12 significant digits.
pub fn format_sig12(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else {
        format!("{x}")
    }
}

impl CsvTable {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r.iter().map(|&x| format_sig12(x)))?;
        }
        let bytes = w.into_inner().map_err(|e| ExperimentError::Report(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| ExperimentError::Report(e.to_string()))
    }

    pub fn parse(name: impl Into<String>, text: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header = r.headers()?.iter().map(str::to_string).collect::<Vec<_>>();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|s| s.trim().parse::<f64>().map_err(|_| ExperimentError::Report(format!("bad number `{s}`"))))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Ok(Self { name: name.into(), header, rows })
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }
}

/// Least-squares slope of `log(error)` against `log(h)` over the last three meshes.
///
/// Refuses to fit with fewer than three meshes or non-positive values.
pub fn fit_rate(h: &[f64], err: &[f64]) -> Result<f64> {
    if h.len() != err.len() {
        return Err(ExperimentError::Report("mesh sizes and errors differ in length".into()));
    }
    if h.len() < RATE_WINDOW {
        return Err(ExperimentError::Report(format!(
            "a rate needs at least {RATE_WINDOW} meshes, got {}",
            h.len()
        )));
    }
    let s = h.len() - RATE_WINDOW;
    let pts: Vec<(f64, f64)> = h[s..].iter().zip(&err[s..]).map(|(&a, &b)| (a, b)).collect();
    if pts.iter().any(|&(a, b)| !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite())) {
        return Err(ExperimentError::Report("rate fit needs positive finite values".into()));
    }
    let n = pts.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = pts.iter().map(|&(a, b)| (a.ln(), b.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(ExperimentError::Report("rate fit needs distinct mesh sizes".into()));
    }
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub benchmark: String,
    pub config: BTreeMap<String, Value>,
    pub cells: Vec<Cell>,
    pub rates: BTreeMap<String, f64>,
    #[serde(default)]
    pub checks: Vec<Check>,
    #[serde(default)]
    pub runtime_seconds: f64,
    #[serde(skip)]
    pub tables: Vec<CsvTable>,
}

impl ExperimentReport {
    pub fn new(benchmark: impl Into<String>) -> Self {
        Self { benchmark: benchmark.into(), ..Self::default() }
    }

    pub fn set_config(&mut self, key: &str, value: impl Into<Value>) {
        self.config.insert(key.to_string(), value.into());
    }

    pub fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) -> bool {
        self.checks.push(Check { name: name.into(), passed, detail: detail.into() });
        passed
    }

    pub fn all_checks_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn find_check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn cells_of<'a>(&'a self, variant: &'a str) -> impl Iterator<Item = &'a Cell> + 'a {
        self.cells.iter().filter(move |c| c.variant == variant)
    }

    /// Fits and stores the energy rate (or L2 rate with `use_l2`) of one variant.
    pub fn fit_variant_rate(&mut self, variant: &str, key: &str, use_l2: bool) -> Result<f64> {
        let (h, e): (Vec<f64>, Vec<f64>) = self
            .cells_of(variant)
            .filter_map(|c| {
                let e = if use_l2 { c.errors.l2 } else { c.errors.energy };
                e.map(|e| (1.0 / c.mesh as f64, e))
            })
            .unzip();
        let r = fit_rate(&h, &e)?;
        self.rates.insert(key.to_string(), r);
        Ok(r)
    }

    /// Moves the cells, checks, rates and tables of `other` into this report, tagging
    /// variants, check names and rate keys with `prefix`. Its config goes under `prefix`.
    pub fn absorb(&mut self, other: ExperimentReport, prefix: &str) {
        let tag = |s: &str| if s.is_empty() { prefix.to_string() } else { format!("{prefix}_{s}") };
        for mut c in other.cells {
            c.variant = tag(&c.variant);
            self.cells.push(c);
        }
        for mut c in other.checks {
            c.name = format!("{prefix}: {}", c.name);
            self.checks.push(c);
        }
        for (k, r) in other.rates {
            self.rates.insert(tag(&k), r);
        }
        self.config.insert(prefix.to_string(), Value::Object(other.config.into_iter().collect()));
        self.tables.extend(other.tables);
        self.runtime_seconds += other.runtime_seconds;
    }

    pub fn set_runtime(&mut self, d: Duration) {
        self.runtime_seconds = d.as_secs_f64();
    }

    pub fn to_json(&self) -> Result<String> {
        self.validate()?;
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        for (k, r) in &self.rates {
            if !r.is_finite() {
                return Err(ExperimentError::Report(format!("rate `{k}` is not finite")));
            }
        }
        for c in &self.cells {
            for e in [c.errors.l2, c.errors.energy].into_iter().flatten() {
                if !(e >= 0.0) {
                    return Err(ExperimentError::Report(format!("negative or NaN error in cell {}", c.mesh)));
                }
            }
        }
        Ok(())
    }

    /// Writes `report.json` and one CSV per table into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.to_json()?)?;
        for t in &self.tables {
            std::fs::write(dir.join(format!("{}.csv", t.name)), t.to_csv_string()?)?;
        }
        Ok(())
    }
}
