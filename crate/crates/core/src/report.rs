//! CSV reports over a directory of run logs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{AgreementMetric, Condition};
use crate::error::{Error, Result};
use crate::metrics::{
    aggregate_cells, agreement_curve, condition_table, group_by_cell, tokens_table, AggregateCell,
};
use crate::runlog::{log_files, RunLog};

pub const DEFAULT_THRESHOLDS: [f64; 3] = [0.5, 0.6, 0.7];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportKind {
    Table1,
    Curves,
    Tokens,
}

/// Loads every `.jsonl` log in `dir`. Fails when there are none.
pub fn load_logs(dir: &Path) -> Result<Vec<RunLog>> {
    let files = log_files(dir)?;
    if files.is_empty() {
        return Err(Error::NoLogs(dir.to_path_buf()));
    }
    files.iter().map(|f| RunLog::load(f)).collect()
}

fn fmt(x: f64) -> String {
    format!("{x:.6}")
}

fn table_cell(cell: &Option<AggregateCell>) -> String {
    match cell {
        None => "-".to_string(),
        Some(c) if c.n_seeds == 1 => format!("{:.3} ± {:.3} (n=1)", c.mean, c.std),
        Some(c) => format!("{:.3} ± {:.3}", c.mean, c.std),
    }
}

/// The metric reports use unless told otherwise: the first log's.
pub fn default_metric(logs: &[RunLog]) -> AgreementMetric {
    logs.first()
        .map(|l| l.config.agreement_metric)
        .unwrap_or_default()
}

/// Writes `summary.csv` (one row per grid cell) and `table1.csv` (rows
/// `(N, K)`, one column per condition, pooled over alpha).
pub fn write_table1(
    logs: &[RunLog],
    metric: AgreementMetric,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let summary_path = out_dir.join("summary.csv");
    let mut w = csv::Writer::from_path(&summary_path)?;
    w.write_record([
        "condition",
        "N",
        "K",
        "alpha",
        "metric",
        "mean",
        "std",
        "n_seeds",
    ])?;
    for (key, cell) in aggregate_cells(logs, metric) {
        w.write_record([
            key.condition.to_string(),
            key.n_agents.to_string(),
            key.memory_window.to_string(),
            key.alpha.to_string(),
            metric.as_str().to_string(),
            fmt(cell.mean),
            fmt(cell.std),
            cell.n_seeds.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(&summary_path, e))?;

    let table_path = out_dir.join("table1.csv");
    let mut w = csv::Writer::from_path(&table_path)?;
    let mut header = vec!["N".to_string(), "K".to_string()];
    header.extend(Condition::ALL.iter().map(|c| c.to_string()));
    header.push("metric".into());
    w.write_record(&header)?;
    for row in condition_table(logs, metric) {
        let mut record = vec![row.n_agents.to_string(), row.memory_window.to_string()];
        record.extend(row.cells.iter().map(table_cell));
        record.push(metric.as_str().to_string());
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| Error::io(&table_path, e))?;
    Ok(vec![summary_path, table_path])
}

/// One `curves_<cond>_<N>_<K>_<alpha>.csv` per grid cell.
pub fn write_curves(
    logs: &[RunLog],
    metric: AgreementMetric,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for (key, group) in group_by_cell(logs) {
        let curve = agreement_curve(&group, metric)?;
        let path = out_dir.join(format!(
            "curves_{}_{}_{}_{}.csv",
            key.condition, key.n_agents, key.memory_window, key.alpha
        ));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["round", "mean", "std", "cumulative_tokens"])?;
        for p in curve {
            w.write_record([
                p.round.to_string(),
                fmt(p.mean),
                fmt(p.std),
                fmt(p.cumulative_tokens),
            ])?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

/// `tokens.csv`: mean tokens-to-convergence per condition and threshold.
pub fn write_tokens(
    logs: &[RunLog],
    thresholds: &[f64],
    metric: AgreementMetric,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let path = out_dir.join("tokens.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record([
        "condition",
        "threshold",
        "mean_tokens",
        "n_reached",
        "n_runs",
        "metric",
    ])?;
    for row in tokens_table(logs, thresholds, metric) {
        w.write_record([
            row.condition.to_string(),
            row.threshold.to_string(),
            row.mean_tokens
                .map_or_else(|| "not-reached".to_string(), fmt),
            row.n_reached.to_string(),
            row.n_runs.to_string(),
            metric.as_str().to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(vec![path])
}

/// Generates one report kind from the logs in `log_dir` into `out_dir`.
pub fn generate(
    log_dir: &Path,
    kind: ReportKind,
    thresholds: &[f64],
    metric: Option<AgreementMetric>,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let logs = load_logs(log_dir)?;
    let metric = metric.unwrap_or_else(|| default_metric(&logs));
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    match kind {
        ReportKind::Table1 => write_table1(&logs, metric, out_dir),
        ReportKind::Curves => write_curves(&logs, metric, out_dir),
        ReportKind::Tokens => write_tokens(&logs, thresholds, metric, out_dir),
    }
}
