//! Two-sample goodness-of-fit statistics.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Kolmogorov-Smirnov: sup-distance between empirical CDFs.
    #[default]
    Ks,
    /// Energy distance `2E|X-Y| - E|X-X'| - E|Y-Y'|`.
    Energy,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Ks => "ks",
            Metric::Energy => "energy",
        }
    }

    /// Score assigned to candidates whose sampling failed; dominates every
    /// score a valid candidate can reach.
    pub fn penalty(self) -> f64 {
        match self {
            Metric::Ks => 2.0,
            Metric::Energy => f64::MAX,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("unknown metric {0:?} (expected ks or energy)")]
pub struct UnknownMetric(pub String);

impl FromStr for Metric {
    type Err = UnknownMetric;

    fn from_str(s: &str) -> Result<Metric, UnknownMetric> {
        match s.to_ascii_lowercase().as_str() {
            "ks" | "kolmogorov-smirnov" => Ok(Metric::Ks),
            "energy" => Ok(Metric::Energy),
            _ => Err(UnknownMetric(s.into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GofError {
    #[error("goodness of fit needs two non-empty sample sets")]
    EmptyInput,
    #[error("sample sets must not contain NaN")]
    NaN,
}

/// A fitness value (lower is better) together with how it was computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessScore {
    pub value: f64,
    pub metric: Metric,
    pub n_evidence: usize,
    pub n_candidate: usize,
}

/// Sorts a copy ascending.
pub fn sorted(xs: &[f64]) -> Result<Vec<f64>, GofError> {
    if xs.iter().any(|x| x.is_nan()) {
        return Err(GofError::NaN);
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// KS statistic of two ascending samples. Tied values advance both CDFs
/// together.
pub fn ks_statistic_sorted(a: &[f64], b: &[f64]) -> f64 {
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// `Σ_{i<j} (x_j - x_i)` for ascending `x`.
fn within_sum(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    x.iter().enumerate().map(|(i, v)| (2.0 * i as f64 - n + 1.0) * v).sum()
}

/// `Σ_{i,j} |a_i - b_j|` for ascending samples, by a merge with prefix sums.
fn cross_sum(a: &[f64], b: &[f64]) -> f64 {
    let total_b: f64 = b.iter().sum();
    let mut below = 0.0;
    let mut j = 0;
    let mut acc = 0.0;
    for &x in a {
        while j < b.len() && b[j] < x {
            below += b[j];
            j += 1;
        }
        let (k, rest) = (j as f64, (b.len() - j) as f64);
        acc += x * k - below + (total_b - below) - x * rest;
    }
    acc
}

/// Energy distance of two ascending samples.
pub fn energy_distance_sorted(a: &[f64], b: &[f64]) -> f64 {
    let (n, m) = (a.len() as f64, b.len() as f64);
    let xy = cross_sum(a, b) / (n * m);
    let xx = 2.0 * within_sum(a) / (n * n);
    let yy = 2.0 * within_sum(b) / (m * m);
    (2.0 * xy - xx - yy).max(0.0)
}

/// Score of `candidate` against `evidence`, both ascending.
pub fn fitness_sorted(evidence: &[f64], candidate: &[f64], metric: Metric) -> Result<FitnessScore, GofError> {
    if evidence.is_empty() || candidate.is_empty() {
        return Err(GofError::EmptyInput);
    }
    let value = match metric {
        Metric::Ks => ks_statistic_sorted(evidence, candidate),
        Metric::Energy => energy_distance_sorted(evidence, candidate),
    };
    Ok(FitnessScore { value, metric, n_evidence: evidence.len(), n_candidate: candidate.len() })
}

/// Score of two unsorted samples; symmetric in its arguments.
pub fn fitness(evidence: &[f64], candidate: &[f64], metric: Metric) -> Result<FitnessScore, GofError> {
    fitness_sorted(&sorted(evidence)?, &sorted(candidate)?, metric)
}

/// Asymptotic two-sample KS critical value at level `alpha`.
pub fn ks_critical_value(n: usize, m: usize, alpha: f64) -> f64 {
    let (n, m) = (n as f64, m as f64);
    (-(alpha / 2.0).ln() / 2.0).sqrt() * ((n + m) / (n * m)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use rand::Rng;

    fn brute_ks(a: &[f64], b: &[f64]) -> f64 {
        let cdf = |s: &[f64], x: f64| s.iter().filter(|v| **v <= x).count() as f64 / s.len() as f64;
        a.iter().chain(b).map(|&x| (cdf(a, x) - cdf(b, x)).abs()).fold(0.0, f64::max)
    }

    fn brute_energy(a: &[f64], b: &[f64]) -> f64 {
        let mean = |s: &[f64], t: &[f64]| {
            s.iter().flat_map(|x| t.iter().map(move |y| (x - y).abs())).sum::<f64>() / (s.len() * t.len()) as f64
        };
        2.0 * mean(a, b) - mean(a, a) - mean(b, b)
    }

    #[test]
    fn identical_sets_score_zero() {
        let s = [0.3, -1.0, 2.0, 2.0, 5.0];
        assert_eq!(fitness(&s, &s, Metric::Ks).unwrap().value, 0.0);
        assert!(fitness(&s, &s, Metric::Energy).unwrap().value.abs() < 1e-12);
    }

    #[test]
    fn disjoint_point_masses() {
        let a = vec![0.0; 1000];
        let b = vec![1.0; 1000];
        assert_eq!(fitness(&a, &b, Metric::Ks).unwrap().value, 1.0);
        assert!((fitness(&a, &b, Metric::Energy).unwrap().value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn matches_brute_force_with_ties() {
        let mut rng = RngStream::new(1);
        for _ in 0..50 {
            let n = rng.random_range(1..40);
            let m = rng.random_range(1..40);
            let a: Vec<f64> = (0..n).map(|_| rng.random_range(0..6) as f64).collect();
            let b: Vec<f64> = (0..m).map(|_| rng.random_range(0..6) as f64 + 0.5 * rng.random_range(0..2) as f64).collect();
            let ks = fitness(&a, &b, Metric::Ks).unwrap().value;
            assert!((ks - brute_ks(&a, &b)).abs() < 1e-12);
            assert_eq!(ks, fitness(&b, &a, Metric::Ks).unwrap().value);
            let e = fitness(&a, &b, Metric::Energy).unwrap().value;
            assert!((e - brute_energy(&a, &b).max(0.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn same_law_scores_below_critical_value() {
        let mut rng = RngStream::new(2);
        let a: Vec<f64> = (0..10_000).map(|_| rng.random()).collect();
        let b: Vec<f64> = (0..10_000).map(|_| rng.random()).collect();
        assert!(fitness(&a, &b, Metric::Ks).unwrap().value < 0.05);
    }

    #[test]
    fn critical_value_at_ten_thousand() {
        let c = ks_critical_value(10_000, 10_000, 0.01);
        assert!((c - 0.02302).abs() < 1e-4, "{c}");
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(fitness(&[], &[1.0], Metric::Ks), Err(GofError::EmptyInput));
        assert_eq!(fitness(&[f64::NAN], &[1.0], Metric::Ks), Err(GofError::NaN));
        assert_eq!("KS".parse::<Metric>(), Ok(Metric::Ks));
        assert!("triangle".parse::<Metric>().is_err());
    }
}
