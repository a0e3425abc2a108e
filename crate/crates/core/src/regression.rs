//! Stochastic symbolic regression: random-restart search for the program
//! whose samples best match some evidence.

use crate::baseline::{generate_random, is_valid, GenConfig};
use crate::gof::{fitness_sorted, sorted, GofError, Metric};
use crate::intervals::{Bound, DualBound};
use crate::lang::Expr;
use crate::rng::RngStream;
use crate::sampler::{sample_many, SampleSet};
use crate::synth::{min_budget, synthesize_with, RuleWeights, SynthError};
use crate::typecheck::TypingContext;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Typed,
    Baseline,
}

impl Mode {
    pub const ALL: [Mode; 2] = [Mode::Typed, Mode::Baseline];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Typed => "typed",
            Mode::Baseline => "baseline",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = SearchError;

    fn from_str(s: &str) -> Result<Mode, SearchError> {
        match s.to_ascii_lowercase().as_str() {
            "typed" => Ok(Mode::Typed),
            "baseline" | "random" => Ok(Mode::Baseline),
            _ => Err(SearchError::UnknownMode(s.into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SearchError {
    #[error("unknown search mode {0:?} (expected typed or baseline)")]
    UnknownMode(String),
    #[error("a time limit or an iteration limit is required")]
    NoStoppingCriterion,
    #[error("candidate sample count {0} is below the minimum of 30")]
    TooFewCandidateSamples(usize),
    #[error("evidence is empty")]
    EmptyEvidence,
    #[error("target {target} cannot be met within budget {budget}")]
    UnreachableTarget { target: DualBound, budget: usize },
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Gof(#[from] GofError),
}

pub const MIN_CANDIDATE_SAMPLES: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub mode: Mode,
    pub budget: usize,
    /// Wall-clock limit in seconds.
    pub time_limit: Option<f64>,
    pub max_iterations: Option<usize>,
    pub n_candidate: usize,
    pub seed: u64,
    pub metric: Metric,
    /// Requested type in typed mode.
    pub target: DualBound,
    /// Replace `target` by `«∅,[min,max]»` of the evidence.
    pub target_from_evidence: bool,
    pub weights: RuleWeights,
    #[serde(skip)]
    pub evidence: SampleSet,
}

impl SearchConfig {
    pub fn new(mode: Mode, budget: usize, evidence: SampleSet) -> SearchConfig {
        SearchConfig {
            mode,
            budget,
            time_limit: None,
            max_iterations: Some(100),
            n_candidate: 1000,
            seed: 0,
            metric: Metric::Ks,
            target: DualBound::ANY,
            target_from_evidence: false,
            weights: RuleWeights::default(),
            evidence,
        }
    }

    /// The target actually requested in typed mode.
    pub fn effective_target(&self) -> DualBound {
        match (self.target_from_evidence, self.evidence.min_max()) {
            (true, Some((lo, hi))) => DualBound::loose(Bound::closed(lo, hi).expect("finite ordered samples")),
            _ => self.target,
        }
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        if self.time_limit.is_none() && self.max_iterations.is_none() {
            return Err(SearchError::NoStoppingCriterion);
        }
        if self.n_candidate < MIN_CANDIDATE_SAMPLES {
            return Err(SearchError::TooFewCandidateSamples(self.n_candidate));
        }
        if self.evidence.is_empty() {
            return Err(SearchError::EmptyEvidence);
        }
        if self.mode == Mode::Typed {
            let target = self.effective_target();
            if !matches!(min_budget(&target), Some(b) if b <= self.budget) {
                return Err(SearchError::UnreachableTarget { target, budget: self.budget });
            }
        }
        Ok(())
    }
}

/// Outcome of scoring one candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub score: f64,
    /// Some execution raised a runtime error; `score` is then the penalty.
    pub runtime_failed: bool,
}

/// Samples `e` `n_c` times and scores the draws against ascending evidence.
pub fn evaluate_candidate(
    e: &Expr,
    evidence_sorted: &[f64],
    n_c: usize,
    rng: &mut RngStream,
    metric: Metric,
) -> Result<Evaluation, GofError> {
    let (samples, errors) = sample_many(e, n_c, rng);
    if errors > 0 || samples.is_empty() {
        return Ok(Evaluation { score: metric.penalty(), runtime_failed: true });
    }
    let cand = sorted(samples.values())?;
    let score = fitness_sorted(evidence_sorted, &cand, metric)?.value;
    Ok(Evaluation { score, runtime_failed: false })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub score: f64,
    pub best_so_far: f64,
    /// Accepted by the static typechecker.
    pub type_valid: bool,
    pub runtime_failed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best_program: String,
    pub best_score: f64,
    pub best_iteration: usize,
    pub iterations: usize,
    /// Candidates rejected by the static typechecker.
    pub invalid_candidates: usize,
    pub runtime_failures: usize,
    pub trace: Vec<TraceEntry>,
    /// Seconds since the start at which each iteration finished. Not part of
    /// the reproducible output.
    #[serde(skip)]
    pub timestamps: Vec<f64>,
    #[serde(skip)]
    pub elapsed: Duration,
}

/// Runs the generate-and-score loop. Candidate `i` is drawn and sampled from
/// substream `i` of the master seed, so an iteration-limited run is fully
/// reproducible.
pub fn search(cfg: &SearchConfig) -> Result<SearchResult, SearchError> {
    cfg.validate()?;
    let start = Instant::now();
    let evidence = sorted(cfg.evidence.values())?;
    let master = RngStream::new(cfg.seed);
    let target = cfg.effective_target();
    let gen = GenConfig::with_budget(cfg.budget);
    let ctx = TypingContext::new();
    let limit = cfg.time_limit.map(Duration::from_secs_f64);

    let mut best: Option<(Expr, f64, usize)> = None;
    let mut trace = Vec::new();
    let mut timestamps = Vec::new();
    let (mut invalid, mut failures) = (0, 0);
    for i in 0.. {
        if cfg.max_iterations.is_some_and(|m| i >= m) || (i > 0 && limit.is_some_and(|l| start.elapsed() >= l)) {
            break;
        }
        let mut rng = master.substream(i as u64);
        let e = match cfg.mode {
            Mode::Typed => synthesize_with(&ctx, &target, cfg.budget, &cfg.weights, &mut rng)?,
            Mode::Baseline => generate_random(&gen, &mut rng),
        };
        let type_valid = is_valid(&e);
        let eval = evaluate_candidate(&e, &evidence, cfg.n_candidate, &mut rng, cfg.metric)?;
        invalid += usize::from(!type_valid);
        failures += usize::from(eval.runtime_failed);
        if best.as_ref().is_none_or(|(_, s, _)| eval.score < *s) {
            best = Some((e, eval.score, i));
        }
        let best_so_far = best.as_ref().map_or(eval.score, |b| b.1);
        trace.push(TraceEntry { iteration: i, score: eval.score, best_so_far, type_valid, runtime_failed: eval.runtime_failed });
        timestamps.push(start.elapsed().as_secs_f64());
    }
    let (program, best_score, best_iteration) = best.expect("at least one iteration runs");
    Ok(SearchResult {
        best_program: program.to_string(),
        best_score,
        best_iteration,
        iterations: trace.len(),
        invalid_candidates: invalid,
        runtime_failures: failures,
        trace,
        timestamps,
        elapsed: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_program;
    use crate::sampler::sample_many;

    fn evidence(src: &str, n: usize, seed: u64) -> SampleSet {
        sample_many(&parse_program(src).unwrap(), n, &mut RngStream::new(seed)).0
    }

    const BETAS: &str = "let Beta 0.3 0.25 in let Beta 0.4 0.25 in add v1 v2";

    #[test]
    fn self_fit_is_below_critical_value() {
        let ev = sorted(evidence(BETAS, 10_000, 1).values()).unwrap();
        let e = parse_program(BETAS).unwrap();
        let s = evaluate_candidate(&e, &ev, 10_000, &mut RngStream::new(2), Metric::Ks).unwrap();
        assert!(!s.runtime_failed);
        assert!(s.score < crate::gof::ks_critical_value(10_000, 10_000, 0.01));
    }

    #[test]
    fn constant_candidate_fits_badly() {
        let ev = sorted(evidence("Normal 0 1", 5000, 1).values()).unwrap();
        let s = evaluate_candidate(&Expr::Lit(0.0), &ev, 1000, &mut RngStream::new(2), Metric::Ks).unwrap();
        assert!(s.score >= 0.45);
    }

    #[test]
    fn failing_candidate_is_penalised() {
        let ev = sorted(evidence("Normal 0 1", 1000, 1).values()).unwrap();
        let bad = parse_program("Normal 0 -1").unwrap();
        let s = evaluate_candidate(&bad, &ev, 100, &mut RngStream::new(2), Metric::Ks).unwrap();
        assert!(s.runtime_failed);
        assert!(s.score > 1.0);
    }

    #[test]
    fn typed_search_never_produces_invalid_candidates() {
        let mut cfg = SearchConfig::new(Mode::Typed, 8, evidence(BETAS, 2000, 3));
        cfg.max_iterations = Some(60);
        cfg.n_candidate = 200;
        let r = search(&cfg).unwrap();
        assert_eq!(r.iterations, 60);
        assert_eq!(r.invalid_candidates, 0);
        assert_eq!(r.runtime_failures, 0);
        assert!(r.trace.windows(2).all(|w| w[1].best_so_far <= w[0].best_so_far));
        let min = r.trace.iter().map(|t| t.score).fold(f64::INFINITY, f64::min);
        assert_eq!(r.best_score, min);
        assert!(parse_program(&r.best_program).is_ok());
    }

    #[test]
    fn reproducible_from_seed() {
        for mode in Mode::ALL {
            let mut cfg = SearchConfig::new(mode, 5, evidence("Uniform 0 1", 1000, 4));
            cfg.max_iterations = Some(25);
            cfg.n_candidate = 100;
            cfg.seed = 77;
            let run = || serde_json::to_string(&search(&cfg).unwrap()).unwrap();
            assert_eq!(run(), run());
        }
    }

    #[test]
    fn time_limit_stops_early() {
        let mut cfg = SearchConfig::new(Mode::Baseline, 10, evidence("Normal 0 1", 500, 5));
        cfg.max_iterations = None;
        cfg.time_limit = Some(0.1);
        let r = search(&cfg).unwrap();
        assert!(r.iterations >= 1);
        assert!(r.elapsed < Duration::from_secs(5));
    }

    #[test]
    fn config_validation() {
        let ev = evidence("Normal 0 1", 100, 6);
        let mut cfg = SearchConfig::new(Mode::Typed, 3, ev.clone());
        cfg.max_iterations = None;
        assert_eq!(search(&cfg), Err(SearchError::NoStoppingCriterion));
        let mut cfg = SearchConfig::new(Mode::Typed, 3, ev.clone());
        cfg.n_candidate = 10;
        assert_eq!(search(&cfg), Err(SearchError::TooFewCandidateSamples(10)));
        let mut cfg = SearchConfig::new(Mode::Typed, 3, ev);
        cfg.target = "«[0.0,inf],[-1.0,inf]»".parse().unwrap();
        assert!(matches!(search(&cfg), Err(SearchError::UnreachableTarget { .. })));
        assert_eq!("Typed".parse::<Mode>(), Ok(Mode::Typed));
    }

    #[test]
    fn evidence_derived_target() {
        let mut cfg = SearchConfig::new(Mode::Typed, 6, evidence("Uniform 2 3", 500, 7));
        cfg.target_from_evidence = true;
        cfg.max_iterations = Some(20);
        cfg.n_candidate = 100;
        let t = cfg.effective_target();
        assert!(t.over().is_subset_of(&Bound::closed(2.0, 3.0).unwrap()));
        let r = search(&cfg).unwrap();
        assert_eq!(r.runtime_failures, 0);
    }
}
