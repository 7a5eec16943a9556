//! Plot-ready report files.
//!
//! CSV: one row per fold or sweep cell plus `fold = "mean"` aggregate rows,
//! metrics with six decimals. JSON: the resolved configuration, every row at
//! full precision and the aggregates.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::harness::{AugmentationCell, FoldOutcome, LosoResult, SweepRow};
use super::metrics::MeanMetrics;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "method,fold,k_or_n,accuracy,precision,recall,f1,flags";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    pub fold: String,
    pub k_or_n: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub flags: String,
}

impl ReportRow {
    fn from_fold(method: &str, k_or_n: usize, f: &FoldOutcome) -> Self {
        ReportRow {
            method: method.to_owned(),
            fold: f.test_subject.clone(),
            k_or_n,
            accuracy: f.metrics.accuracy,
            precision: f.metrics.precision,
            recall: f.metrics.recall,
            f1: f.metrics.f1,
            flags: f.metrics.flags.describe(),
        }
    }

    fn aggregate(method: &str, k_or_n: usize, m: &MeanMetrics) -> Self {
        ReportRow {
            method: method.to_owned(),
            fold: "mean".into(),
            k_or_n,
            accuracy: m.accuracy,
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
            flags: String::new(),
        }
    }

    fn sort_key(&self) -> (&str, usize, &str) {
        (&self.method, self.k_or_n, &self.fold)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub config: serde_json::Value,
    pub folds: Vec<ReportRow>,
    pub aggregates: Vec<ReportRow>,
    /// Command-specific extras (loss curves, label fractions, majority baselines, warnings).
    #[serde(default)]
    pub details: serde_json::Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl Report {
    pub fn new(command: &str, config: serde_json::Value) -> Self {
        Report {
            command: command.to_owned(),
            config,
            folds: Vec::new(),
            aggregates: Vec::new(),
            details: serde_json::Value::Null,
        }
    }

    fn sort(&mut self) {
        self.folds.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        self.aggregates.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    }

    pub fn add_loso(&mut self, method: &str, k_or_n: usize, r: &LosoResult) {
        self.folds.extend(r.folds.iter().map(|f| ReportRow::from_fold(method, k_or_n, f)));
        self.aggregates.push(ReportRow::aggregate(method, k_or_n, &r.mean));
        self.sort();
    }

    pub fn add_sweep(&mut self, rows: &[SweepRow]) {
        for row in rows {
            let m = row.method.name();
            self.folds.extend(row.folds.iter().map(|f| ReportRow::from_fold(m, row.key, f)));
            self.aggregates.push(ReportRow::aggregate(m, row.key, &row.mean));
        }
        self.sort();
    }

    pub fn add_augmentations(&mut self, cells: &[AugmentationCell]) {
        for c in cells {
            let name = format!("cudle:{}:{}", c.augment.name(), c.encoder.name());
            let k = c.result.folds.first().map_or(0, |f| f.labeled_subjects.len());
            self.folds.extend(c.result.folds.iter().map(|f| ReportRow::from_fold(&name, k, f)));
            self.aggregates.push(ReportRow::aggregate(&name, k, &c.result.mean));
        }
        self.sort();
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in self.folds.iter().chain(&self.aggregates) {
            let field = |s: &str| {
                if s.contains([',', '"', '\n']) {
                    format!("\"{}\"", s.replace('"', "\"\""))
                } else {
                    s.to_owned()
                }
            };
            out.push_str(&format!(
                "{},{},{},{:.6},{:.6},{:.6},{:.6},{}\n",
                field(&r.method),
                field(&r.fold),
                r.k_or_n,
                r.accuracy,
                r.precision,
                r.recall,
                r.f1,
                field(&r.flags)
            ));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Write via a temporary sibling file and rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| Error::invalid(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    result.map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

pub fn emit_report(report: &Report, format: ReportFormat, path: &Path) -> Result<()> {
    let text = match format {
        ReportFormat::Csv => report.to_csv(),
        ReportFormat::Json => report.to_json()?,
    };
    write_atomic(path, text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut r = Report::new("eval-loso", serde_json::json!({"seed": 7}));
        for (fold, acc) in [("S02", 0.1 + 0.2), ("S01", 2.0 / 3.0)] {
            r.folds.push(ReportRow {
                method: "cudle".into(),
                fold: fold.into(),
                k_or_n: 19,
                accuracy: acc,
                precision: 1.0 / 7.0,
                recall: 0.0,
                f1: 0.0,
                flags: "no_positive_predictions".into(),
            });
        }
        r.sort();
        r
    }

    #[test]
    fn csv_layout_and_order() {
        let csv = sample().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "cudle,S01,19,0.666667,0.142857,0.000000,0.000000,no_positive_predictions");
        assert!(lines[2].starts_with("cudle,S02,19,0.300000,"));
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let r = sample();
        let back = Report::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.folds[1].accuracy.to_bits(), (0.1f64 + 0.2).to_bits());
    }

    #[test]
    fn rewrite_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        emit_report(&sample(), ReportFormat::Json, &path).unwrap();
        let first = std::fs::read(&path).unwrap();
        emit_report(&sample(), ReportFormat::Json, &path).unwrap();
        assert_eq!(first, std::fs::read(&path).unwrap());
        let leftovers: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
        assert_eq!(leftovers.len(), 1);
        assert!(emit_report(&sample(), ReportFormat::Csv, &dir.path().join("missing/r.csv")).is_err());
    }
}
