//! Success rate of the random baseline as a function of the budget.

use pgplang::baseline::{count_successes, GenConfig};
use pgplang::RngStream;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub budget: usize,
    pub trials: usize,
    pub successes: usize,
    pub rate: f64,
}

impl CurveRow {
    /// Binomial standard error of `rate`.
    pub fn std_error(&self) -> f64 {
        (self.rate * (1.0 - self.rate) / self.trials as f64).sqrt()
    }
}

/// Trials for budget `b` use substream `b` of `seed`, so adding or removing
/// budgets never changes the other rows.
pub fn success_curve(budgets: &[usize], trials: usize, seed: u64) -> Vec<CurveRow> {
    let master = RngStream::new(seed);
    budgets
        .par_iter()
        .map(|&budget| {
            let successes = count_successes(&GenConfig::with_budget(budget), trials, &master.substream(budget as u64));
            let rate = if trials == 0 { 0.0 } else { successes as f64 / trials as f64 };
            CurveRow { budget, trials, successes, rate }
        })
        .collect()
}

/// First budget whose rate is below one half.
pub fn first_below_half(rows: &[CurveRow]) -> Option<usize> {
    rows.iter().find(|r| r.rate < 0.5).map(|r| r.budget)
}

/// Whether no later rate exceeds an earlier one by more than `sigmas`
/// combined standard errors.
pub fn non_increasing_within(rows: &[CurveRow], sigmas: f64) -> bool {
    rows.iter().enumerate().all(|(i, a)| {
        rows[i + 1..].iter().all(|b| {
            let se = (a.std_error().powi(2) + b.std_error().powi(2)).sqrt();
            b.rate <= a.rate + sigmas * se.max(f64::EPSILON)
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_is_deterministic_and_stable_under_subsets() {
        let a = success_curve(&[1, 2, 3], 300, 5);
        let b = success_curve(&[3], 300, 5);
        assert_eq!(a[2], b[0]);
        assert_eq!(a, success_curve(&[1, 2, 3], 300, 5));
        assert!(a.iter().all(|r| r.successes <= r.trials));
    }

    #[test]
    fn monotonicity_check() {
        let r = |budget, rate| CurveRow { budget, trials: 10_000, successes: 0, rate };
        assert!(non_increasing_within(&[r(1, 0.9), r(2, 0.8), r(3, 0.801)], 3.0));
        assert!(!non_increasing_within(&[r(1, 0.5), r(2, 0.7)], 3.0));
        assert_eq!(first_below_half(&[r(1, 0.9), r(2, 0.49)]), Some(2));
    }
}
