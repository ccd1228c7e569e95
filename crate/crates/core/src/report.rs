//! Machine-readable run reports and history export.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataseq::DatasetStats;
use crate::trainer::{EvalReport, IterationRecord, TrainedModel};

/// Metrics of one trained model inside a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSection {
    pub rmse: f64,
    pub mae: f64,
    pub count: usize,
    pub iterations_run: usize,
    pub best_iteration: usize,
    pub elapsed_seconds: f64,
    pub history: Vec<IterationRecord>,
}

impl ModelSection {
    pub fn new(model: &TrainedModel<f64>, eval: &EvalReport) -> Self {
        Self {
            rmse: eval.rmse,
            mae: eval.mae,
            count: eval.count,
            iterations_run: model.iterations_run,
            best_iteration: model.best_iteration,
            elapsed_seconds: model.elapsed_seconds,
            history: model.history.clone(),
        }
    }
}

/// Top-level JSON document written by every CLI command.
///
/// Field names are stable; metrics that do not apply to a command are
/// `null`, and `baseline` only appears for `compare`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub config: serde_json::Value,
    pub stats: Option<DatasetStats>,
    pub rmse: Option<f64>,
    pub mae: Option<f64>,
    pub count: Option<usize>,
    pub iterations_run: Option<usize>,
    pub elapsed_seconds: f64,
    pub history: Vec<IterationRecord>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<ModelSection>,
}

impl RunReport {
    pub fn new(command: &str, config: serde_json::Value, seed: u64) -> Self {
        Self {
            command: command.to_owned(),
            config,
            stats: None,
            rmse: None,
            mae: None,
            count: None,
            iterations_run: None,
            elapsed_seconds: 0.0,
            history: Vec::new(),
            seed,
            baseline: None,
        }
    }

    pub fn with_eval(mut self, eval: &EvalReport) -> Self {
        self.rmse = Some(eval.rmse);
        self.mae = Some(eval.mae);
        self.count = Some(eval.count);
        self.iterations_run = Some(eval.iterations_run);
        self
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

pub fn write_report(report: &RunReport, path: &Path) -> io::Result<()> {
    fs::write(path, report.to_json())
}

pub fn read_report(path: &Path) -> io::Result<RunReport> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}

/// Per-iteration history as CSV, one row per iteration.
pub fn history_csv(history: &[IterationRecord]) -> String {
    let mut out = String::from(
        "iteration,train_rmse,val_rmse,objective_before_q,objective_after_q,elapsed_seconds\n",
    );
    for h in history {
        let val = h.val_rmse.map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{}",
            h.iteration,
            h.train_rmse,
            val,
            h.objective_before_q,
            h.objective_after_q,
            h.elapsed_seconds
        )
        .unwrap();
    }
    out
}
