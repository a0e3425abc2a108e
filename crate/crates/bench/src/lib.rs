//! Benchmark harness for pgplang: suites of ground-truth programs, evidence
//! generation, head-to-head regression runs, reports and plots.

pub mod curve;
pub mod plot;
pub mod run;
pub mod suite;

use serde::Serialize;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};
use thiserror::Error;

pub use curve::{success_curve, CurveRow};
pub use run::{audit, run_suite, BenchReport, Row, RunOptions};
pub use suite::{make_evidence, BenchSuite, TestCase};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {detail}")]
    Parse { path: PathBuf, detail: String },
    #[error("ground truth {id:?} is unusable: {detail}")]
    IllTyped { id: String, detail: String },
    #[error("invalid suite: {0}")]
    Config(String),
    #[error("report audit failed: {0}")]
    Audit(String),
    #[error("plotting failed: {0}")]
    Plot(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl BenchError {
    pub fn io(path: &Path, source: io::Error) -> BenchError {
        BenchError::Io { path: path.to_path_buf(), source }
    }
}

pub fn unix_time() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), BenchError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| BenchError::io(path, e))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| BenchError::io(path, e))
}

#[derive(Serialize)]
struct RuntimeEntry<'a> {
    test: &'a str,
    seed: u64,
    mode: &'a str,
    budget: usize,
    seconds: f64,
}

#[derive(Serialize)]
struct ReportMetadata<'a> {
    finished_at_unix: f64,
    elapsed_seconds: f64,
    suite_config: &'a str,
    runtimes: Vec<RuntimeEntry<'a>>,
}

/// Trials per budget for the success curve that accompanies a report.
pub const REPORT_CURVE_TRIALS: usize = 2000;

/// Writes `report.csv`, `report.json`, `metadata.json`, one results and one
/// relative plot per budget, and the random-search success curve up to the
/// largest budget (`success.csv`, `success.svg`) into `dir`. Only
/// `metadata.json` holds timings.
pub fn write_report(report: &BenchReport, suite_config: &str, dir: &Path) -> Result<Vec<PathBuf>, BenchError> {
    fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    let mut written = Vec::new();
    let csv_path = dir.join("report.csv");
    write_csv(&csv_path, &report.rows)?;
    written.push(csv_path);
    let json_path = dir.join("report.json");
    write_json(&json_path, report)?;
    written.push(json_path);
    let runtimes = report
        .rows
        .iter()
        .zip(&report.runtimes)
        .map(|(r, s)| RuntimeEntry { test: &r.test, seed: r.seed, mode: r.mode.name(), budget: r.budget, seconds: *s })
        .collect();
    let meta = ReportMetadata { finished_at_unix: unix_time(), elapsed_seconds: report.elapsed, suite_config, runtimes };
    let meta_path = dir.join("metadata.json");
    write_json(&meta_path, &meta)?;
    written.push(meta_path);
    for &b in &report.budgets {
        let p = dir.join(format!("results_b{b}.svg"));
        plot::results_plot(report, b, &p)?;
        written.push(p);
        let p = dir.join(format!("relative_b{b}.svg"));
        plot::relative_plot(report, b, &p)?;
        written.push(p);
    }
    if let Some(&max) = report.budgets.iter().max() {
        let budgets: Vec<usize> = (1..=max.max(1)).collect();
        let rows = success_curve(&budgets, REPORT_CURVE_TRIALS, 0);
        let p = dir.join("success.csv");
        write_csv(&p, &rows)?;
        written.push(p);
        let p = dir.join("success.svg");
        plot::success_plot(&rows, &p)?;
        written.push(p);
    }
    Ok(written)
}
