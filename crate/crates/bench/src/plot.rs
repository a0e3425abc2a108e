//! SVG charts of benchmark reports.

use crate::curve::CurveRow;
use crate::run::{BenchReport, Row};
use crate::BenchError;
use plotters::prelude::*;
use pgplang::regression::Mode;
use std::path::Path;

const SIZE: (u32, u32) = (800, 480);
const TYPED: RGBColor = RGBColor(31, 119, 180);
const BASELINE: RGBColor = RGBColor(214, 39, 40);

fn plot_err(e: impl std::fmt::Display) -> BenchError {
    BenchError::Plot(e.to_string())
}

fn colour(mode: Mode) -> RGBColor {
    match mode {
        Mode::Typed => TYPED,
        Mode::Baseline => BASELINE,
    }
}

fn sorted_scores(rows: &[Row], mode: Mode, budget: usize) -> Vec<f64> {
    let mut v: Vec<f64> = rows.iter().filter(|r| r.mode == mode && r.budget == budget).map(|r| r.best_score).collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Best scores of every cell, sorted, one line per mode.
pub fn results_plot(report: &BenchReport, budget: usize, path: &Path) -> Result<(), BenchError> {
    let series: Vec<(Mode, Vec<f64>)> = report.modes.iter().map(|&m| (m, sorted_scores(&report.rows, m, budget))).collect();
    let n = series.iter().map(|(_, v)| v.len()).max().unwrap_or(0).max(1);
    let top = series.iter().flat_map(|(_, v)| v.iter().copied()).fold(0.0f64, f64::max).max(1e-3) * 1.05;
    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(format!("Best score per cell, sorted (budget {budget})"), ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(36)
        .y_label_area_size(56)
        .build_cartesian_2d(0usize..n, 0.0..top)
        .map_err(plot_err)?;
    chart.configure_mesh().x_desc("cell rank").y_desc("best score (lower is better)").draw().map_err(plot_err)?;
    for (mode, scores) in series {
        let c = colour(mode);
        chart
            .draw_series(LineSeries::new(scores.iter().copied().enumerate(), c.stroke_width(2)))
            .map_err(plot_err)?
            .label(mode.name())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], c.stroke_width(2)));
    }
    chart.configure_series_labels().border_style(BLACK).background_style(WHITE).draw().map_err(plot_err)?;
    root.present().map_err(plot_err)
}

/// Per test: typed wins above the axis, baseline wins below it.
pub fn relative_plot(report: &BenchReport, budget: usize, path: &Path) -> Result<(), BenchError> {
    let tallies: Vec<(usize, usize)> = report
        .tests
        .iter()
        .map(|t| {
            report.aggregates.by_test.get(t).and_then(|m| m.get(&budget)).map_or((0, 0), |x| (x.typed_wins, x.baseline_wins))
        })
        .collect();
    let n = tallies.len().max(1);
    let m = tallies.iter().map(|(a, b)| (*a).max(*b)).max().unwrap_or(1).max(1) as i64;
    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(format!("Wins per test (budget {budget})"), ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(36)
        .y_label_area_size(48)
        .build_cartesian_2d(0..n as i64, -m..m)
        .map_err(plot_err)?;
    chart.configure_mesh().x_desc("test").y_desc("typed wins / baseline wins").draw().map_err(plot_err)?;
    chart
        .draw_series(tallies.iter().enumerate().map(|(i, (w, _))| {
            Rectangle::new([(i as i64, 0), (i as i64 + 1, *w as i64)], TYPED.filled())
        }))
        .map_err(plot_err)?
        .label("typed")
        .legend(|(x, y)| Rectangle::new([(x, y - 5), (x + 12, y + 5)], TYPED.filled()));
    chart
        .draw_series(tallies.iter().enumerate().map(|(i, (_, l))| {
            Rectangle::new([(i as i64, -(*l as i64)), (i as i64 + 1, 0)], BASELINE.filled())
        }))
        .map_err(plot_err)?
        .label("baseline")
        .legend(|(x, y)| Rectangle::new([(x, y - 5), (x + 12, y + 5)], BASELINE.filled()));
    chart.configure_series_labels().border_style(BLACK).background_style(WHITE).draw().map_err(plot_err)?;
    root.present().map_err(plot_err)
}

/// Success rate against budget with the one-half line.
pub fn success_plot(rows: &[CurveRow], path: &Path) -> Result<(), BenchError> {
    let max_b = rows.iter().map(|r| r.budget).max().unwrap_or(1).max(1);
    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption("Random search success rate", ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(36)
        .y_label_area_size(48)
        .build_cartesian_2d(0..max_b + 1, 0.0..1.0)
        .map_err(plot_err)?;
    chart.configure_mesh().x_desc("budget").y_desc("fraction that typechecks").draw().map_err(plot_err)?;
    chart
        .draw_series(LineSeries::new([(0, 0.5), (max_b + 1, 0.5)], BLACK.stroke_width(1)))
        .map_err(plot_err)?;
    chart
        .draw_series(LineSeries::new(rows.iter().map(|r| (r.budget, r.rate)), TYPED.stroke_width(2)))
        .map_err(plot_err)?;
    chart
        .draw_series(rows.iter().map(|r| Circle::new((r.budget, r.rate), 3, TYPED.filled())))
        .map_err(plot_err)?;
    root.present().map_err(plot_err)
}
