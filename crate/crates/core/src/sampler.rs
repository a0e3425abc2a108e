//! Forward interpreter: draws samples from a program.
//!
//! Each `let` realises its bound value once per execution and every variable
//! referring to it sees that same value.

use crate::lang::{Arg, DistFamily, Expr};
use crate::rng::RngStream;
use rand::Rng;
use rand_distr::{Distribution, Gamma, Open01, StandardNormal};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::{self, BufRead, Write};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RuntimeError {
    #[error("{family} parameter {index} = {value} is outside the family's domain")]
    InvalidParameter { family: DistFamily, index: usize, value: f64 },
    #[error("non-finite intermediate value {0}")]
    NonFinite(f64),
    #[error("variable v{0} is unbound")]
    Unbound(usize),
}

/// A multiset of finite samples with a label recording where they came from.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    values: Vec<f64>,
    source: String,
}

#[derive(Debug, Error)]
pub enum SampleFileError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {text:?} is not a finite number")]
    BadValue { line: usize, text: String },
}

impl SampleSet {
    /// Non-finite values are dropped.
    pub fn new(values: Vec<f64>, source: impl Into<String>) -> SampleSet {
        let values = values.into_iter().filter(|v| v.is_finite()).collect();
        SampleSet { values, source: source.into() }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min_max(&self) -> Option<(f64, f64)> {
        let mut it = self.values.iter().copied();
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v))))
    }

    /// One shortest-round-trip decimal per line.
    pub fn write_to(&self, mut w: impl Write) -> io::Result<()> {
        for v in &self.values {
            writeln!(w, "{v:?}")?;
        }
        Ok(())
    }

    /// Reads one value per line; blank lines and `#` comments are skipped.
    pub fn read_from(r: impl BufRead, source: impl Into<String>) -> Result<SampleSet, SampleFileError> {
        let mut values = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let t = line.split('#').next().unwrap_or("").trim();
            if t.is_empty() {
                continue;
            }
            match t.parse::<f64>() {
                Ok(v) if v.is_finite() => values.push(v),
                _ => return Err(SampleFileError::BadValue { line: i + 1, text: t.into() }),
            }
        }
        Ok(SampleSet { values, source: source.into() })
    }
}

impl fmt::Display for SampleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} samples from {}", self.values.len(), self.source)
    }
}

#[derive(Debug, Clone, Copy)]
enum Step {
    Lit(f64),
    Var(usize),
    Dist(DistFamily, Arg, Arg),
    Add(Arg, Arg),
}

/// A program flattened into its binding sequence for repeated execution.
#[derive(Debug, Clone)]
pub struct CompiledProgram {
    steps: Vec<Step>,
}

impl CompiledProgram {
    pub fn new(e: &Expr) -> CompiledProgram {
        let (bindings, body) = e.bindings();
        let steps = bindings.into_iter().chain(std::iter::once(body)).map(to_step).collect();
        CompiledProgram { steps }
    }

    pub fn sample(&self, rng: &mut RngStream, scratch: &mut Vec<f64>) -> Result<f64, RuntimeError> {
        scratch.clear();
        let mut last = 0.0;
        for step in &self.steps {
            last = eval_step(step, scratch, rng)?;
            if !last.is_finite() {
                return Err(RuntimeError::NonFinite(last));
            }
            scratch.push(last);
        }
        Ok(last)
    }
}

fn to_step(e: &Expr) -> Step {
    match *e {
        Expr::Lit(v) => Step::Lit(v),
        Expr::Var(l) => Step::Var(l),
        Expr::Dist(f, a, b) => Step::Dist(f, a, b),
        Expr::Add(a, b) => Step::Add(a, b),
        Expr::Let(..) => unreachable!("bindings() returns value forms only"),
    }
}

fn arg_value(a: &Arg, env: &[f64]) -> Result<f64, RuntimeError> {
    match *a {
        Arg::Lit(v) => Ok(v),
        Arg::Var(l) => l
            .checked_sub(1)
            .and_then(|i| env.get(i))
            .copied()
            .ok_or(RuntimeError::Unbound(l)),
    }
}

fn eval_step(step: &Step, env: &[f64], rng: &mut RngStream) -> Result<f64, RuntimeError> {
    match step {
        Step::Lit(v) => Ok(*v),
        Step::Var(l) => arg_value(&Arg::Var(*l), env),
        Step::Add(a, b) => Ok(arg_value(a, env)? + arg_value(b, env)?),
        Step::Dist(family, a, b) => draw(*family, arg_value(a, env)?, arg_value(b, env)?, rng),
    }
}

/// One draw from `family(p1, p2)` with realised parameters.
pub fn draw(family: DistFamily, p1: f64, p2: f64, rng: &mut RngStream) -> Result<f64, RuntimeError> {
    let invalid = |index, value| Err(RuntimeError::InvalidParameter { family, index, value });
    match family {
        DistFamily::Normal => {
            if !(p2 > 0.0) {
                return invalid(2, p2);
            }
            let z: f64 = rng.sample(StandardNormal);
            Ok(p1 + p2 * z)
        }
        DistFamily::Laplace => {
            if !(p2 > 0.0) {
                return invalid(2, p2);
            }
            let u: f64 = rng.sample::<f64, _>(Open01) - 0.5;
            Ok(p1 - p2 * u.signum() * (1.0 - 2.0 * u.abs()).ln())
        }
        DistFamily::Uniform => {
            let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
            let u: f64 = rng.random();
            let width = hi - lo;
            let x = if width.is_finite() { lo + width * u } else { lo * (1.0 - u) + hi * u };
            Ok(x.clamp(lo, hi))
        }
        DistFamily::Beta => {
            if !(p1 > 0.0) {
                return invalid(1, p1);
            }
            if !(p2 > 0.0) {
                return invalid(2, p2);
            }
            Ok(beta(p1, p2, rng))
        }
    }
}

/// `ln G` for `G ~ Gamma(shape, 1)`. Shapes below one use
/// `G = G' * U^(1/shape)` with `G' ~ Gamma(shape + 1)`, kept in log space so
/// tiny shapes do not underflow.
fn ln_gamma_draw(shape: f64, rng: &mut RngStream) -> f64 {
    if shape >= 1.0 {
        let g = Gamma::new(shape, 1.0).expect("valid gamma shape");
        g.sample(rng).ln()
    } else {
        let g = Gamma::new(shape + 1.0, 1.0).expect("valid gamma shape");
        let u: f64 = rng.sample(Open01);
        g.sample(rng).ln() + u.ln() / shape
    }
}

fn beta(alpha: f64, beta: f64, rng: &mut RngStream) -> f64 {
    let la = ln_gamma_draw(alpha, rng);
    let lb = ln_gamma_draw(beta, rng);
    if la == f64::NEG_INFINITY && lb == f64::NEG_INFINITY {
        // Both shapes are so small the law is a coin flip between 0 and 1.
        let u: f64 = rng.random();
        return if u * (alpha + beta) < alpha { 1.0 } else { 0.0 };
    }
    (1.0 / (1.0 + (lb - la).exp())).clamp(0.0, 1.0)
}

/// Executes `e` once.
pub fn sample_once(e: &Expr, rng: &mut RngStream) -> Result<f64, RuntimeError> {
    CompiledProgram::new(e).sample(rng, &mut Vec::new())
}

/// `n` independent executions; failures are counted rather than returned.
pub fn sample_many(e: &Expr, n: usize, rng: &mut RngStream) -> (SampleSet, usize) {
    let prog = CompiledProgram::new(e);
    let mut scratch = Vec::new();
    let mut values = Vec::with_capacity(n);
    let mut errors = 0;
    for _ in 0..n {
        match prog.sample(rng, &mut scratch) {
            Ok(v) => values.push(v),
            Err(_) => errors += 1,
        }
    }
    (SampleSet { values, source: "program".into() }, errors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_program;

    fn prog(s: &str) -> Expr {
        parse_program(s).unwrap()
    }

    #[test]
    fn literal_program_is_constant() {
        let mut rng = RngStream::new(1);
        assert_eq!(sample_once(&Expr::Lit(2.5), &mut rng), Ok(2.5));
        let (s, errs) = sample_many(&Expr::Lit(1.0), 3, &mut rng);
        assert_eq!(s.values(), &[1.0, 1.0, 1.0]);
        assert_eq!(errs, 0);
    }

    #[test]
    fn uniform_stays_in_support() {
        let mut rng = RngStream::new(2);
        let (s, errs) = sample_many(&prog("Uniform 0 1"), 10_000, &mut rng);
        assert_eq!(errs, 0);
        assert!(s.values().iter().all(|v| (0.0..=1.0).contains(v)));
        let (s, _) = sample_many(&prog("Uniform 3 -2"), 1000, &mut rng);
        assert!(s.values().iter().all(|v| (-2.0..=3.0).contains(v)));
        let (s, _) = sample_many(&prog("Uniform 4 4"), 10, &mut rng);
        assert!(s.values().iter().all(|v| *v == 4.0));
    }

    #[test]
    fn invalid_parameters_are_runtime_errors() {
        let mut rng = RngStream::new(3);
        assert!(matches!(
            sample_once(&prog("Normal 0 -1"), &mut rng),
            Err(RuntimeError::InvalidParameter { family: DistFamily::Normal, index: 2, .. })
        ));
        assert!(sample_once(&prog("Laplace 0 0"), &mut rng).is_err());
        assert!(sample_once(&prog("Beta 0 1"), &mut rng).is_err());
        assert!(sample_once(&prog("Beta 1 -2"), &mut rng).is_err());
        assert!(sample_once(&prog("Normal 0 1e-300"), &mut rng).is_ok());
    }

    #[test]
    fn sum_of_betas_in_zero_two() {
        let mut rng = RngStream::new(4);
        let (s, errs) =
            sample_many(&prog("let Beta 0.3 0.25 in let Beta 0.4 0.25 in add v1 v2"), 10_000, &mut rng);
        assert_eq!(errs, 0);
        assert!(s.values().iter().all(|v| (0.0..=2.0).contains(v)));
    }

    #[test]
    fn beta_handles_extreme_shapes() {
        let mut rng = RngStream::new(5);
        for (a, b) in [(1e-300, 1e-300), (1e-5, 3.0), (1e6, 1e-6), (0.5, 0.5), (1e300, 1.0)] {
            for _ in 0..200 {
                let x = draw(DistFamily::Beta, a, b, &mut rng).unwrap();
                assert!((0.0..=1.0).contains(&x), "Beta({a},{b}) gave {x}");
            }
        }
    }

    #[test]
    fn moments_are_plausible() {
        let mut rng = RngStream::new(6);
        let n = 20_000;
        let mean = |s: &SampleSet| s.values().iter().sum::<f64>() / s.len() as f64;
        let (s, _) = sample_many(&prog("Normal 3 2"), n, &mut rng);
        assert!((mean(&s) - 3.0).abs() < 0.1);
        let (s, _) = sample_many(&prog("Laplace -1 0.5"), n, &mut rng);
        assert!((mean(&s) + 1.0).abs() < 0.05);
        let (s, _) = sample_many(&prog("Beta 2 6"), n, &mut rng);
        assert!((mean(&s) - 0.25).abs() < 0.01);
    }

    #[test]
    fn determinism() {
        let e = prog("let Uniform 0 1 in let Normal v1 0.1 in add v2 v1");
        let a = sample_many(&e, 500, &mut RngStream::new(9));
        let b = sample_many(&e, 500, &mut RngStream::new(9));
        assert_eq!(a, b);
    }

    #[test]
    fn sample_file_round_trip() {
        let s = SampleSet::new(vec![0.1, -2.0, 1e-300, 3.0], "t");
        let mut buf = Vec::new();
        s.write_to(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "0.1\n-2.0\n1e-300\n3.0\n");
        let back = SampleSet::read_from(&buf[..], "t").unwrap();
        assert_eq!(back, s);
        assert!(SampleSet::read_from(&b"1.0\nfoo\n"[..], "t").is_err());
        assert!(SampleSet::read_from(&b"inf\n"[..], "t").is_err());
    }
}
