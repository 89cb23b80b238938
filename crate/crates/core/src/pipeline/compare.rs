//! Mode × metric table assembled from finished runs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::eval::{read_report, EvaluationReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub mode: String,
    pub config_hash: String,
    pub auc: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareTable {
    pub schema_version: u32,
    pub rows: Vec<CompareRow>,
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

impl CompareTable {
    /// Values are written exactly as stored in the reports.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("mode,auc,sensitivity,specificity,config_hash\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                r.mode,
                cell(r.auc),
                cell(r.sensitivity),
                cell(r.specificity),
                r.config_hash
            );
        }
        s
    }

    pub fn to_text(&self) -> String {
        let f = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.3}"));
        let w = self
            .rows
            .iter()
            .map(|r| r.mode.len())
            .max()
            .unwrap_or(0)
            .max(4);
        let mut s = format!("{:<w$}  {:>6}  {:>6}  {:>6}\n", "mode", "AUC", "ST", "SP");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<w$}  {:>6}  {:>6}  {:>6}",
                r.mode,
                f(r.auc),
                f(r.sensitivity),
                f(r.specificity)
            );
        }
        s
    }
}

/// A run directory resolves to its `report.json`; a file is read directly.
fn report_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join("report.json")
    } else {
        p.to_path_buf()
    }
}

/// Builds the table in argument order. Needs two or more runs that share a
/// report schema version.
pub fn compare_runs(runs: &[PathBuf]) -> Result<CompareTable, PipelineError> {
    if runs.len() < 2 {
        return Err(PipelineError::MissingRun(format!(
            "need at least 2 runs, got {}",
            runs.len()
        )));
    }
    let reports: Vec<EvaluationReport> = runs
        .iter()
        .map(|r| {
            let path = report_path(r);
            if !path.exists() {
                return Err(PipelineError::MissingRun(format!(
                    "no report at {}",
                    path.display()
                )));
            }
            read_report(&path).map_err(PipelineError::from)
        })
        .collect::<Result<_, _>>()?;
    let version = reports[0].schema_version;
    if let Some(r) = reports.iter().find(|r| r.schema_version != version) {
        return Err(PipelineError::Data(format!(
            "compare: schema version {} does not match {version}",
            r.schema_version
        )));
    }
    Ok(CompareTable {
        schema_version: version,
        rows: reports
            .iter()
            .map(|r| CompareRow {
                mode: r.mode.clone(),
                config_hash: r.config_hash.clone(),
                auc: r.metrics.auc,
                sensitivity: r.metrics.sensitivity,
                specificity: r.metrics.specificity,
            })
            .collect(),
    })
}
