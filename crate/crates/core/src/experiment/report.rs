use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ReportFormat};
use crate::error::{Error, Result};

/// Which closed-form bound a row is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundName {
    None,
    SinglePixel,
    MultiPixel,
    IndividualLog,
    AfmRepeat,
}

/// One setting of a sweep. CSV columns follow the field order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub sweep_index: u64,
    pub sweep_param: String,
    pub sweep_value: Option<f64>,
    /// Protocol variant, e.g. `fock`, `collective`, `script-17`.
    pub setting: String,
    pub predicted_n: Option<f64>,
    pub predicted_nabs: Option<f64>,
    pub predicted_pe: Option<f64>,
    pub trials: u64,
    pub empirical_pe: Option<f64>,
    pub empirical_pe_se: Option<f64>,
    pub empirical_nabs: Option<f64>,
    pub empirical_nabs_se: Option<f64>,
    pub bound: BoundName,
    pub bound_value: Option<f64>,
    /// Whether the absorption clears the bound; `None` when nothing is compared.
    pub passed: Option<bool>,
}

impl ReportRow {
    pub fn new(sweep_index: u64, sweep: Option<(&str, f64)>, setting: impl Into<String>) -> Self {
        Self {
            sweep_index,
            sweep_param: sweep.map(|s| s.0.to_string()).unwrap_or_default(),
            sweep_value: sweep.map(|s| s.1),
            setting: setting.into(),
            predicted_n: None,
            predicted_nabs: None,
            predicted_pe: None,
            trials: 0,
            empirical_pe: None,
            empirical_pe_se: None,
            empirical_nabs: None,
            empirical_nabs_se: None,
            bound: BoundName::None,
            bound_value: None,
            passed: None,
        }
    }
}

/// One inequality that was checked, with its margin `lhs - rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub row: usize,
    pub check: String,
    pub step: Option<usize>,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub minabs_core: String,
    pub report_schema: u32,
}

impl Default for Versions {
    fn default() -> Self {
        Self {
            minabs_core: env!("CARGO_PKG_VERSION").to_string(),
            report_schema: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolReport {
    pub config: ExperimentConfig,
    pub rows: Vec<ReportRow>,
    pub audits: Vec<AuditEntry>,
    pub versions: Versions,
}

impl ProtocolReport {
    /// True when no row falls below its bound and every audit passes.
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed != Some(false)) && self.audits.iter().all(|a| a.passed)
    }

    pub fn failed_audits(&self) -> impl Iterator<Item = &AuditEntry> {
        self.audits.iter().filter(|a| !a.passed)
    }
}

/// Header plus one line per row.
pub fn rows_to_csv(rows: &[ReportRow]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(CSV_COLUMNS).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

/// Column names in output order.
pub const CSV_COLUMNS: [&str; 15] = [
    "sweep_index",
    "sweep_param",
    "sweep_value",
    "setting",
    "predicted_n",
    "predicted_nabs",
    "predicted_pe",
    "trials",
    "empirical_pe",
    "empirical_pe_se",
    "empirical_nabs",
    "empirical_nabs_se",
    "bound",
    "bound_value",
    "passed",
];

pub fn rows_from_csv(text: &str) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(csv_err)?;
    if header.iter().ne(CSV_COLUMNS.iter().copied()) {
        return Err(Error::Parse { line: 1, msg: "unexpected CSV header".into() });
    }
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}

pub fn report_to_json(report: &ProtocolReport) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn report_from_json(text: &str) -> Result<ProtocolReport> {
    serde_json::from_str(text).map_err(|e| Error::Parse { line: e.line(), msg: e.to_string() })
}

pub fn render_report(report: &ProtocolReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Csv => rows_to_csv(&report.rows),
        ReportFormat::Json => report_to_json(report),
    }
}

/// Writes the report to `path`.
pub fn emit_report(report: &ProtocolReport, format: ReportFormat, path: &Path) -> Result<()> {
    let text = render_report(report, format)?;
    let mut f = File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse { line, msg: e.to_string() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::config::{ExperimentKind, Sweep};

    fn sample_row() -> ReportRow {
        let mut r = ReportRow::new(2, Some(("eps", 0.01)), "fock");
        r.predicted_n = Some(2628.0);
        r.predicted_nabs = Some(1681.9200000000001);
        r.predicted_pe = Some(0.09871234567890123);
        r.trials = 10;
        r.empirical_pe = Some(0.1);
        r.empirical_pe_se = Some(0.0948683298050514);
        r.empirical_nabs = Some(1680.3);
        r.empirical_nabs_se = Some(7.25);
        r.bound = BoundName::SinglePixel;
        r.bound_value = Some(819.2);
        r.passed = Some(true);
        r
    }

    #[test]
    fn empty_csv_is_header_only() {
        let text = rows_to_csv(&[]).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert_eq!(text.trim_end(), CSV_COLUMNS.join(","));
        assert!(rows_from_csv(&text).unwrap().is_empty());
    }

    #[test]
    fn csv_round_trip() {
        let mut analytic = ReportRow::new(0, None, "collective");
        analytic.predicted_nabs = Some(1.0 / 3.0);
        let rows = vec![sample_row(), analytic];
        let back = rows_from_csv(&rows_to_csv(&rows).unwrap()).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn json_round_trip() {
        let mut config = ExperimentConfig::new(ExperimentKind::Count, 7);
        config.sweep = Some(Sweep { param: "eps".into(), values: vec![0.01] });
        let report = ProtocolReport {
            config,
            rows: vec![sample_row()],
            audits: vec![AuditEntry {
                row: 0,
                check: "absorption_bound".into(),
                step: None,
                lhs: 1702.05,
                rhs: 819.2,
                margin: 882.85,
                passed: true,
            }],
            versions: Versions::default(),
        };
        let text = report_to_json(&report).unwrap();
        assert_eq!(report_from_json(&text).unwrap(), report);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        for key in ["config", "rows", "audits", "versions"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert!(report.passed());
    }

    #[test]
    fn unwritable_path() {
        let report = ProtocolReport {
            config: ExperimentConfig::new(ExperimentKind::Afm, 1),
            rows: vec![],
            audits: vec![],
            versions: Versions::default(),
        };
        let err = emit_report(&report, ReportFormat::Csv, Path::new("/nonexistent/dir/out.csv"));
        assert!(matches!(err, Err(Error::Io(_))));
    }
}
