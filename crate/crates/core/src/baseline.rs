//! Type-agnostic random program generation, the comparison baseline.

use crate::lang::{Arg, DistFamily, Expr};
use crate::rng::RngStream;
use crate::sampler::CompiledProgram;
use crate::synth::split_budget;
use crate::typecheck::{infer, TypingContext};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// Selection weights of the grammar's node productions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProductionWeights {
    pub normal: f64,
    pub uniform: f64,
    pub laplace: f64,
    pub beta: f64,
    pub add: f64,
}

impl Default for ProductionWeights {
    fn default() -> Self {
        ProductionWeights { normal: 1.0, uniform: 1.0, laplace: 1.0, beta: 1.0, add: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub budget: usize,
    pub weights: ProductionWeights,
    /// Chance that a leaf argument is a variable when one is in scope.
    pub var_probability: f64,
    pub literal_mean: f64,
    pub literal_std: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig { budget: 1, weights: ProductionWeights::default(), var_probability: 0.5, literal_mean: 0.0, literal_std: 10.0 }
    }
}

impl GenConfig {
    pub fn with_budget(budget: usize) -> GenConfig {
        GenConfig { budget, ..GenConfig::default() }
    }
}

#[derive(Debug, Clone, Copy)]
enum Production {
    Family(DistFamily),
    Add,
}

struct Gen<'a> {
    cfg: &'a GenConfig,
    literal: Normal<f64>,
    rng: &'a mut RngStream,
    bindings: Vec<Expr>,
}

impl Gen<'_> {
    fn production(&mut self) -> Production {
        let w = &self.cfg.weights;
        let table = [
            (Production::Family(DistFamily::Normal), w.normal),
            (Production::Family(DistFamily::Uniform), w.uniform),
            (Production::Family(DistFamily::Laplace), w.laplace),
            (Production::Family(DistFamily::Beta), w.beta),
            (Production::Add, w.add),
        ];
        let total: f64 = table.iter().map(|(_, w)| w.max(0.0)).sum();
        if !(total > 0.0) {
            return Production::Add;
        }
        let mut r = self.rng.random::<f64>() * total;
        for (p, w) in table {
            let w = w.max(0.0);
            if r < w {
                return p;
            }
            r -= w;
        }
        Production::Add
    }

    fn leaf(&mut self) -> Arg {
        let depth = self.bindings.len();
        if depth > 0 && self.rng.random_bool(self.cfg.var_probability.clamp(0.0, 1.0)) {
            Arg::Var(self.rng.random_range(1..=depth))
        } else {
            Arg::Lit(self.literal.sample(self.rng))
        }
    }

    fn node(&mut self, budget: usize) -> Expr {
        let production = self.production();
        let (left, right) = split_budget(budget, self.rng).expect("node budget is positive");
        let a = self.arg(left);
        let b = self.arg(right);
        match production {
            Production::Family(f) => Expr::Dist(f, a, b),
            Production::Add => Expr::Add(a, b),
        }
    }

    fn arg(&mut self, budget: usize) -> Arg {
        if budget == 0 {
            return self.leaf();
        }
        let e = self.node(budget);
        self.bindings.push(e);
        Arg::Var(self.bindings.len())
    }
}

/// A scope-correct ANF program using exactly `cfg.budget` nodes. Nothing
/// about parameter domains is enforced.
pub fn generate_random(cfg: &GenConfig, rng: &mut RngStream) -> Expr {
    let std = if cfg.literal_std.is_finite() && cfg.literal_std >= 0.0 { cfg.literal_std } else { 10.0 };
    let literal = Normal::new(cfg.literal_mean, std).expect("finite, nonnegative deviation");
    let mut g = Gen { cfg, literal, rng, bindings: Vec::new() };
    let body = if cfg.budget == 0 {
        match g.leaf() {
            Arg::Lit(v) => Expr::Lit(v),
            Arg::Var(l) => Expr::Var(l),
        }
    } else {
        g.node(cfg.budget)
    };
    Expr::from_bindings(g.bindings, body)
}

/// Runs `e` `n` times and reports whether every run succeeded. A program can
/// pass this screen and still be ill-typed.
pub fn validate_by_sampling(e: &Expr, n: usize, rng: &mut RngStream) -> bool {
    let prog = CompiledProgram::new(e);
    let mut scratch = Vec::new();
    (0..n).all(|_| prog.sample(rng, &mut scratch).is_ok())
}

/// Whether the static typechecker accepts `e` in the empty context.
pub fn is_valid(e: &Expr) -> bool {
    infer(&TypingContext::new(), e).is_ok()
}

/// Number of typechecking programs among `trials` draws. Trial `i` uses
/// substream `i` of `rng`.
pub fn count_successes(cfg: &GenConfig, trials: usize, rng: &RngStream) -> usize {
    (0..trials as u64).filter(|&i| is_valid(&generate_random(cfg, &mut rng.substream(i)))).count()
}

/// Fraction of default-configuration programs of the given budget that
/// typecheck.
pub fn success_rate(budget: usize, trials: usize, rng: &mut RngStream) -> f64 {
    if trials == 0 {
        return f64::NAN;
    }
    let base = RngStream::new(rng.random());
    count_successes(&GenConfig::with_budget(budget), trials, &base) as f64 / trials as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{node_cost, parse_program, print_program};

    #[test]
    fn budget_one_is_a_single_node() {
        let mut rng = RngStream::new(1);
        for _ in 0..200 {
            let e = generate_random(&GenConfig::with_budget(1), &mut rng);
            assert!(matches!(e, Expr::Dist(_, Arg::Lit(_), Arg::Lit(_)) | Expr::Add(Arg::Lit(_), Arg::Lit(_))), "{e}");
        }
    }

    #[test]
    fn programs_are_well_formed_and_use_the_budget() {
        let mut rng = RngStream::new(2);
        for budget in 0..40 {
            let e = generate_random(&GenConfig::with_budget(budget), &mut rng);
            assert!(e.check_well_formed(0).is_ok());
            assert_eq!(node_cost(&e), budget);
            assert_eq!(parse_program(&print_program(&e)).unwrap(), e);
        }
    }

    #[test]
    fn deterministic() {
        let cfg = GenConfig::with_budget(12);
        assert_eq!(generate_random(&cfg, &mut RngStream::new(5)), generate_random(&cfg, &mut RngStream::new(5)));
    }

    #[test]
    fn large_budgets_often_fail_to_typecheck() {
        let base = RngStream::new(3);
        let ok = count_successes(&GenConfig::with_budget(31), 2000, &base);
        assert!(ok < 2000);
    }

    #[test]
    fn sampling_screen() {
        let mut rng = RngStream::new(4);
        assert!(!validate_by_sampling(&parse_program("Normal 0 -1").unwrap(), 1, &mut rng));
        assert!(validate_by_sampling(&Expr::Lit(3.0), 100, &mut rng));
        let rare = parse_program("let Normal 10 1 in Normal 10 v1").unwrap();
        assert!(!is_valid(&rare));
        assert!(validate_by_sampling(&rare, 10_000, &mut rng));
    }

    #[test]
    fn valid_programs_pass_the_screen() {
        let base = RngStream::new(6);
        for i in 0..300 {
            let e = generate_random(&GenConfig::with_budget(6), &mut base.substream(i));
            if is_valid(&e) {
                assert!(validate_by_sampling(&e, 200, &mut base.substream(10_000 + i)), "{e}");
            }
        }
    }
}
