//! Scan reports: rows, metadata and their CSV/JSON files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};

/// Outcome of one row. Asserted rows pass when `value <= bound`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PassFlag {
    #[serde(rename = "true")]
    Pass,
    #[serde(rename = "false")]
    Fail,
    #[serde(rename = "report-only")]
    ReportOnly,
    /// The requested point does not exist (e.g. `nu > N`).
    #[serde(rename = "invalid")]
    Invalid,
}

impl PassFlag {
    pub fn as_str(&self) -> &'static str {
        match self {
            PassFlag::Pass => "true",
            PassFlag::Fail => "false",
            PassFlag::ReportOnly => "report-only",
            PassFlag::Invalid => "invalid",
        }
    }

    pub fn is_asserted(&self) -> bool {
        matches!(self, PassFlag::Pass | PassFlag::Fail)
    }
}

/// One line of a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    #[serde(rename = "Z")]
    pub z: f64,
    #[serde(rename = "N")]
    pub n: f64,
    pub alpha: f64,
    pub observable: String,
    #[serde(with = "nan_as_null")]
    pub value: f64,
    pub bound: Option<f64>,
    pub pass: PassFlag,
    pub runtime_s: f64,
}

/// JSON has no NaN; missing values travel as `null`.
mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

impl ReportRow {
    /// Asserted row: passes iff `value <= bound` (a NaN value fails).
    pub fn asserted(z: f64, n: f64, alpha: f64, observable: impl Into<String>, value: f64, bound: f64) -> Self {
        ReportRow {
            z,
            n,
            alpha,
            observable: observable.into(),
            value,
            bound: Some(bound),
            pass: if value <= bound { PassFlag::Pass } else { PassFlag::Fail },
            runtime_s: 0.0,
        }
    }

    pub fn report_only(z: f64, n: f64, alpha: f64, observable: impl Into<String>, value: f64) -> Self {
        ReportRow {
            z,
            n,
            alpha,
            observable: observable.into(),
            value,
            bound: None,
            pass: PassFlag::ReportOnly,
            runtime_s: 0.0,
        }
    }

    pub fn invalid(z: f64, n: f64, alpha: f64, observable: impl Into<String>) -> Self {
        ReportRow {
            pass: PassFlag::Invalid,
            ..Self::report_only(z, n, alpha, observable, f64::NAN)
        }
    }

    /// Report-only row with a reference value in the bound column.
    pub fn compared(z: f64, n: f64, alpha: f64, observable: impl Into<String>, value: f64, reference: f64) -> Self {
        ReportRow {
            bound: Some(reference),
            ..Self::report_only(z, n, alpha, observable, value)
        }
    }

    pub fn with_runtime(mut self, runtime_s: f64) -> Self {
        self.runtime_s = runtime_s;
        self
    }

    /// The flag implied by the value and bound columns.
    pub fn recomputed_pass(&self) -> PassFlag {
        match (self.pass, self.bound) {
            (PassFlag::Pass | PassFlag::Fail, Some(b)) => {
                if self.value <= b {
                    PassFlag::Pass
                } else {
                    PassFlag::Fail
                }
            }
            (p, _) => p,
        }
    }
}

/// `(Z, observable, x, value)` samples for plotting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    #[serde(rename = "Z")]
    pub z: f64,
    pub observable: String,
    pub x: f64,
    #[serde(with = "nan_as_null")]
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub version: String,
    pub config_hash: String,
    pub date: String,
    pub experiment: String,
    pub config: ExperimentConfig,
    /// Fitted constants, never asserted by themselves.
    pub fitted: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub metadata: ReportMetadata,
    pub rows: Vec<ReportRow>,
    #[serde(default)]
    pub series: Vec<SeriesPoint>,
}

impl ScanReport {
    pub fn new(cfg: &ExperimentConfig) -> Self {
        ScanReport {
            metadata: ReportMetadata {
                version: env!("CARGO_PKG_VERSION").to_string(),
                config_hash: cfg.hash(),
                date: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
                experiment: cfg.experiment.to_string(),
                config: cfg.clone(),
                fitted: BTreeMap::new(),
                notes: Vec::new(),
            },
            rows: Vec::new(),
            series: Vec::new(),
        }
    }

    /// True when no asserted row fails.
    pub fn all_asserted_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass != PassFlag::Fail)
    }

    pub fn asserted_rows(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(|r| r.pass.is_asserted())
    }

    pub fn rows_named<'a>(&'a self, observable: &'a str) -> impl Iterator<Item = &'a ReportRow> + 'a {
        self.rows.iter().filter(move |r| r.observable == observable)
    }

    /// Process exit status: 0 iff every asserted row passes.
    pub fn exit_code(&self) -> i32 {
        if self.all_asserted_pass() {
            0
        } else {
            1
        }
    }

    /// Zeroes every runtime, for byte-reproducible files.
    pub fn strip_timings(&mut self) {
        self.rows.iter_mut().for_each(|r| r.runtime_s = 0.0);
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

pub const CSV_HEADER: [&str; 8] = ["Z", "N", "alpha", "observable", "value", "bound", "pass", "runtime_s"];

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// Writes the report CSV with the fixed column order.
pub fn write_report_csv(report: &ScanReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Serialization(format!("{}: {e}", path.display())))?;
    w.write_record(CSV_HEADER)?;
    for r in &report.rows {
        w.write_record([
            num(r.z),
            num(r.n),
            num(r.alpha),
            r.observable.clone(),
            num(r.value),
            r.bound.map(num).unwrap_or_default(),
            r.pass.as_str().to_string(),
            num(r.runtime_s),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `report.csv` and/or `report.json` into `out_dir`, plus
/// `observable_vs_x.csv` when the report carries plot series.
pub fn emit_report(report: &ScanReport, formats: &[String], out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();
    for f in formats {
        match f.as_str() {
            "csv" => {
                let p = out_dir.join("report.csv");
                write_report_csv(report, &p)?;
                written.push(p);
            }
            "json" => {
                let p = out_dir.join("report.json");
                let text = serde_json::to_string_pretty(report)?;
                std::fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
                written.push(p);
            }
            other => return Err(Error::param(format!("unknown report format '{other}'"))),
        }
    }
    if !report.series.is_empty() {
        let p = out_dir.join("observable_vs_x.csv");
        let mut w = csv::Writer::from_path(&p).map_err(|e| Error::Serialization(format!("{}: {e}", p.display())))?;
        w.write_record(["Z", "observable", "x", "value"])?;
        for s in &report.series {
            w.write_record([num(s.z), s.observable.clone(), num(s.x), num(s.value)])?;
        }
        w.flush().map_err(|e| Error::io(&p, e))?;
        written.push(p);
    }
    Ok(written)
}
