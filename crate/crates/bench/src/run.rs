//! Running a suite: one regression search per (test, seed, mode, budget).

use crate::suite::BenchSuite;
use crate::BenchError;
use pgplang::regression::{search, Mode, SearchConfig};
use pgplang::{RngStream, SampleSet};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::time::Instant;

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub modes: Vec<Mode>,
    pub budgets: Vec<usize>,
    pub time_limit: Option<f64>,
    pub max_iterations: Option<usize>,
    pub threads: Option<usize>,
}

impl RunOptions {
    pub fn from_suite(suite: &BenchSuite) -> RunOptions {
        RunOptions {
            modes: Mode::ALL.to_vec(),
            budgets: suite.budgets.clone(),
            time_limit: suite.time_limit,
            max_iterations: suite.max_iterations,
            threads: None,
        }
    }
}

/// One cell of the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub test: String,
    pub seed: u64,
    pub mode: Mode,
    pub budget: usize,
    pub best_score: f64,
    pub iterations: usize,
    pub invalid_candidates: usize,
    pub runtime_failures: usize,
    pub best_program: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub test: String,
    pub seed: Option<u64>,
    pub mode: Option<Mode>,
    pub budget: Option<usize>,
    pub error: String,
}

/// Head-to-head tallies. A cell counts as a typed win when the typed best
/// score is at most the baseline's.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Tally {
    pub cells: usize,
    pub typed_wins: usize,
    pub baseline_wins: usize,
    pub ties: usize,
}

impl Tally {
    pub fn typed_win_fraction(&self) -> f64 {
        if self.cells == 0 {
            0.0
        } else {
            self.typed_wins as f64 / self.cells as f64
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub by_budget: BTreeMap<usize, Tally>,
    /// Keyed by test id, then budget.
    pub by_test: BTreeMap<String, BTreeMap<usize, Tally>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub version: u32,
    pub suite: String,
    pub tests: Vec<String>,
    pub seeds: Vec<u64>,
    pub modes: Vec<Mode>,
    pub budgets: Vec<usize>,
    pub rows: Vec<Row>,
    pub failures: Vec<CellFailure>,
    pub aggregates: Aggregates,
    /// Wall-clock seconds per row; kept out of the reproducible outputs.
    #[serde(skip)]
    pub runtimes: Vec<f64>,
    #[serde(skip)]
    pub elapsed: f64,
}

/// Seed of the search for `(seed, test index)`; shared by both modes.
pub fn cell_seed(seed: u64, test_index: usize) -> u64 {
    RngStream::derive_seed(seed, test_index as u64)
}

pub fn aggregate(rows: &[Row]) -> Aggregates {
    let mut pairs: BTreeMap<(&str, u64, usize), (Option<f64>, Option<f64>)> = BTreeMap::new();
    for r in rows {
        let slot = pairs.entry((r.test.as_str(), r.seed, r.budget)).or_default();
        match r.mode {
            Mode::Typed => slot.0 = Some(r.best_score),
            Mode::Baseline => slot.1 = Some(r.best_score),
        }
    }
    let mut agg = Aggregates::default();
    for ((test, _, budget), scores) in pairs {
        let (Some(typed), Some(base)) = scores else { continue };
        for t in [agg.by_budget.entry(budget).or_default(), agg.by_test.entry(test.into()).or_default().entry(budget).or_default()] {
            t.cells += 1;
            if typed <= base {
                t.typed_wins += 1;
            } else {
                t.baseline_wins += 1;
            }
            if typed == base {
                t.ties += 1;
            }
        }
    }
    agg
}

/// Recomputes aggregates and row counts from the rows.
pub fn audit(report: &BenchReport) -> Result<(), BenchError> {
    let expected = report.tests.len() * report.seeds.len() * report.modes.len() * report.budgets.len();
    let failed_cells: usize = report
        .failures
        .iter()
        .map(|f| match (f.seed, f.mode, f.budget) {
            (Some(_), Some(_), Some(_)) => 1,
            _ => report.seeds.len() * report.modes.len() * report.budgets.len(),
        })
        .sum();
    if report.rows.len() + failed_cells != expected {
        return Err(BenchError::Audit(format!(
            "{} rows and {failed_cells} failed cells, expected {expected} cells",
            report.rows.len()
        )));
    }
    if aggregate(&report.rows) != report.aggregates {
        return Err(BenchError::Audit("aggregates do not match the rows".into()));
    }
    for t in report.aggregates.by_budget.values() {
        if t.typed_wins + t.baseline_wins != t.cells || t.ties > t.typed_wins {
            return Err(BenchError::Audit("inconsistent tally".into()));
        }
    }
    Ok(())
}

struct Cell {
    test: usize,
    seed: u64,
    mode: Mode,
    budget: usize,
}

fn run_cell(suite: &BenchSuite, evidence: &SampleSet, cell: &Cell, opts: &RunOptions) -> Result<(Row, f64), String> {
    let mut cfg = SearchConfig::new(cell.mode, cell.budget, evidence.clone());
    cfg.time_limit = opts.time_limit;
    cfg.max_iterations = opts.max_iterations;
    cfg.n_candidate = suite.n_candidate;
    cfg.metric = suite.metric;
    cfg.seed = cell_seed(cell.seed, cell.test);
    let start = Instant::now();
    let r = search(&cfg).map_err(|e| e.to_string())?;
    let row = Row {
        test: suite.tests[cell.test].id.clone(),
        seed: cell.seed,
        mode: cell.mode,
        budget: cell.budget,
        best_score: r.best_score,
        iterations: r.iterations,
        invalid_candidates: r.invalid_candidates,
        runtime_failures: r.runtime_failures,
        best_program: r.best_program,
    };
    Ok((row, start.elapsed().as_secs_f64()))
}

/// Runs every cell on a pool of `opts.threads` workers (default: all cores).
/// Rows come back in (test, seed, budget, mode) order regardless of
/// scheduling.
pub fn run_suite(suite: &BenchSuite, opts: &RunOptions) -> Result<BenchReport, BenchError> {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut evidence = Vec::new();
    for (i, t) in suite.tests.iter().enumerate() {
        match suite.evidence_for(i, suite.evidence_seed) {
            Ok(s) => evidence.push(Some(s)),
            Err(e) => {
                failures.push(CellFailure { test: t.id.clone(), seed: None, mode: None, budget: None, error: e.to_string() });
                evidence.push(None);
            }
        }
    }
    let mut cells = Vec::new();
    for (test, ev) in evidence.iter().enumerate() {
        if ev.is_none() {
            continue;
        }
        for &seed in &suite.seeds {
            for &budget in &opts.budgets {
                for &mode in &opts.modes {
                    cells.push(Cell { test, seed, mode, budget });
                }
            }
        }
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = opts.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| BenchError::Config(e.to_string()))?;
    let results: Vec<Result<(Row, f64), String>> = pool.install(|| {
        cells
            .par_iter()
            .map(|c| run_cell(suite, evidence[c.test].as_ref().expect("filtered above"), c, opts))
            .collect()
    });
    let mut rows = Vec::new();
    let mut runtimes = Vec::new();
    for (cell, r) in cells.iter().zip(results) {
        match r {
            Ok((row, secs)) => {
                rows.push(row);
                runtimes.push(secs);
            }
            Err(error) => failures.push(CellFailure {
                test: suite.tests[cell.test].id.clone(),
                seed: Some(cell.seed),
                mode: Some(cell.mode),
                budget: Some(cell.budget),
                error,
            }),
        }
    }
    let aggregates = aggregate(&rows);
    Ok(BenchReport {
        version: REPORT_VERSION,
        suite: suite.name.clone(),
        tests: suite.tests.iter().map(|t| t.id.clone()).collect(),
        seeds: suite.seeds.clone(),
        modes: opts.modes.clone(),
        budgets: opts.budgets.clone(),
        rows,
        failures,
        aggregates,
        runtimes,
        elapsed: start.elapsed().as_secs_f64(),
    })
}
