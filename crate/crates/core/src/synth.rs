//! Type-directed synthesis.
//!
//! Given a context, a target `DualBound` and a node budget, [`synthesize`]
//! builds an ANF program in a single top-down pass. Every rule only issues
//! child requests that are satisfiable by construction, so the pass never
//! backtracks and its output always checks against the target.

use crate::intervals::{Bound, DualBound};
use crate::lang::{Arg, DistFamily, Expr};
use crate::rng::RngStream;
use crate::typecheck::TypingContext;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("no program within budget {budget} has type {target}")]
    Unsatisfiable { target: DualBound, budget: usize },
    #[error("cannot pick a real number from {0}")]
    NoRealPoint(Bound),
    #[error("every applicable rule for {0} has zero weight")]
    NoWeightedRule(DualBound),
    #[error("a budget split needs a positive budget")]
    ZeroBudget,
    #[error("invalid point list {0:?}")]
    InvalidPointList(Vec<f64>),
}

/// Relative selection weights of the synthesis rules. `var_reuse` applies
/// once per eligible context entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleWeights {
    pub normal: f64,
    pub laplace: f64,
    pub beta: f64,
    pub uniform: f64,
    pub add: f64,
    pub var_reuse: f64,
    pub constant: f64,
}

impl Default for RuleWeights {
    fn default() -> Self {
        RuleWeights { normal: 1.0, laplace: 1.0, beta: 1.0, uniform: 1.0, add: 1.0, var_reuse: 1.0, constant: 1.0 }
    }
}

/// One synthesis job: context `Δ`, target type and node budget.
#[derive(Debug, Clone)]
pub struct SynthRequest {
    pub ctx: TypingContext,
    pub target: DualBound,
    pub budget: usize,
    pub rng: RngStream,
}

/// Splits the budget of a node between its two children after charging one
/// unit for the node itself.
pub fn split_budget(b: usize, rng: &mut RngStream) -> Result<(usize, usize), SynthError> {
    if b == 0 {
        return Err(SynthError::ZeroBudget);
    }
    let left = rng.random_range(0..b);
    Ok((left, b - 1 - left))
}

/// Draws a real number from `range`: standard normal on the whole line,
/// a half-normal offset on half-lines and uniform on finite intervals.
pub fn pick(range: &Bound, rng: &mut RngStream) -> Result<f64, SynthError> {
    let (lo, hi) = match range.endpoints() {
        Some(e) if range.has_real_point() => e,
        _ => return Err(SynthError::NoRealPoint(*range)),
    };
    let x = match (lo.is_finite(), hi.is_finite()) {
        (false, false) => rng.sample(StandardNormal),
        (true, false) => lo + rng.sample::<f64, _>(StandardNormal).abs(),
        (false, true) => hi - rng.sample::<f64, _>(StandardNormal).abs(),
        (true, true) => {
            let u: f64 = rng.random();
            let width = hi - lo;
            if width.is_finite() {
                lo + width * u
            } else {
                lo * (1.0 - u) + hi * u
            }
        }
    };
    Ok(x.clamp(lo, hi))
}

/// `«[ol,ul,uh,oh]»`, or `«[ol,oh]»` when the under-approximation is empty.
#[derive(Debug, Clone, PartialEq)]
pub struct PointList(Vec<f64>);

impl PointList {
    pub fn new(points: Vec<f64>) -> Result<PointList, SynthError> {
        let ok = matches!(points.len(), 2 | 4)
            && points.iter().all(|p| !p.is_nan())
            && points.windows(2).all(|w| w[0] <= w[1]);
        if ok {
            Ok(PointList(points))
        } else {
            Err(SynthError::InvalidPointList(points))
        }
    }

    /// `None` when the over-approximation is empty.
    pub fn from_target(t: &DualBound) -> Option<PointList> {
        let (ol, oh) = t.over().endpoints()?;
        Some(match t.under().endpoints() {
            Some((ul, uh)) => PointList(vec![ol, ul, uh, oh]),
            None => PointList(vec![ol, oh]),
        })
    }

    pub fn to_target(&self) -> DualBound {
        let p = &self.0;
        let over = Bound::closed(p[0], p[p.len() - 1]).expect("ordered point list");
        let under = if p.len() == 4 { Bound::closed(p[1], p[2]).expect("ordered point list") } else { Bound::EMPTY };
        DualBound::new(under, over).expect("ordered point list")
    }

    pub fn points(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl fmt::Display for PointList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|p| format!("{p:?}")).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

/// Gap between consecutive points; unbounded whenever an end is infinite.
fn diff(a: f64, b: f64) -> f64 {
    if a.is_infinite() || b.is_infinite() {
        f64::INFINITY
    } else {
        b - a
    }
}

/// Attempts allowed before falling back to the trivial split `(vals, 0)`.
const PARTITION_ATTEMPTS: i32 = 64;

/// Splits a point list into two whose pointwise sums are the input.
///
/// `r1` starts as a copy of `vals` and `r2` as zeros. Crossing each gap, a
/// cumulative random magnitude drawn from `[0, diff]` moves from `r1` to `r2`;
/// finally `r1 += p` and `r2 -= p` with `p` drawn from the whole line. Both
/// outputs stay nondecreasing and `r1[i] + r2[i] == vals[i]` holds exactly,
/// with no rounding. Draws that rounding would break are retried at halved
/// magnitudes.
pub fn partition_add(vals: &PointList, rng: &mut RngStream) -> (PointList, PointList) {
    let v = vals.points();
    let gaps: Vec<f64> = v
        .windows(2)
        .map(|w| {
            let range = Bound::closed(0.0, diff(w[0], w[1])).expect("nonnegative gap");
            pick(&range, rng).expect("gap range is non-empty")
        })
        .collect();
    let p = pick(&Bound::EVERYTHING, rng).expect("the real line is non-empty");
    let mut scale = 1.0;
    for _ in 0..PARTITION_ATTEMPTS {
        if let Some(parts) = try_partition(v, &gaps, p, scale) {
            return parts;
        }
        scale *= 0.5;
    }
    (vals.clone(), PointList(vec![0.0; v.len()]))
}

/// Whether `a + b` equals `v` with no rounding error.
fn sum_is_exact(a: f64, b: f64, v: f64) -> bool {
    let s = a + b;
    let bb = s - a;
    s == v && (a - (s - bb)) + (b - bb) == 0.0
}

fn try_partition(v: &[f64], gaps: &[f64], p: f64, scale: f64) -> Option<(PointList, PointList)> {
    let mut r1 = Vec::with_capacity(v.len());
    let mut r2 = Vec::with_capacity(v.len());
    let mut moved = 0.0;
    for (i, &vi) in v.iter().enumerate() {
        if i > 0 {
            moved += gaps[i - 1] * scale;
        }
        let q = moved - p * scale;
        let (x, y) = if vi.is_infinite() { (vi, q) } else {
            let x = vi - q;
            (x, vi - x)
        };
        if !y.is_finite() || (vi.is_finite() && !(x.is_finite() && sum_is_exact(x, y, vi))) {
            return None;
        }
        r1.push(x);
        r2.push(y);
    }
    Some((PointList::new(r1).ok()?, PointList::new(r2).ok()?))
}

/// Whether some program with enough budget has type `t`, ignoring the context.
pub fn satisfiable(t: &DualBound) -> bool {
    let (u, o) = (t.under(), t.over());
    if u.is_empty() {
        o.has_real_point()
    } else {
        u.is_finite() || o == Bound::EVERYTHING
    }
}

/// Smallest budget at which a satisfiable `t` can be met without the context.
pub fn min_budget(t: &DualBound) -> Option<usize> {
    if !satisfiable(t) {
        None
    } else if t.under().is_empty() || (t.under().is_singleton() && t.under().is_finite()) {
        Some(0)
    } else {
        Some(1)
    }
}

/// Scale-like parameters are requested strictly positive so that sampled
/// programs never hit a zero scale.
fn positive() -> DualBound {
    DualBound::loose(Bound::closed(f64::MIN_POSITIVE, f64::INFINITY).expect("ordered"))
}

#[derive(Debug, Clone, Copy)]
enum Rule {
    Constant,
    Reuse(usize),
    Family(DistFamily),
    UniformStrict,
    UniformLoose,
    Add,
}

struct Synth<'a> {
    weights: &'a RuleWeights,
    rng: &'a mut RngStream,
    ctx: Vec<DualBound>,
    bindings: Vec<Expr>,
}

impl Synth<'_> {
    fn rules(&self, t: &DualBound, budget: usize, root: bool) -> Vec<(Rule, f64)> {
        let w = self.weights;
        let (u, o) = (t.under(), t.over());
        let mut rules = Vec::new();
        if budget == 0 {
            let single = u.is_singleton() && u.is_finite();
            if single || (u.is_empty() && o.has_real_point()) {
                rules.push((Rule::Constant, w.constant));
            }
        }
        if !(root && budget > 0) {
            for (i, d) in self.ctx.iter().enumerate() {
                if d.is_subtype_of(t) {
                    rules.push((Rule::Reuse(i + 1), w.var_reuse));
                }
            }
        }
        if budget == 0 || !satisfiable(t) {
            return rules;
        }
        if o == Bound::EVERYTHING {
            rules.push((Rule::Family(DistFamily::Normal), w.normal));
            rules.push((Rule::Family(DistFamily::Laplace), w.laplace));
        }
        if Bound::UNIT.is_subset_of(&o) && u.is_subset_of(&Bound::UNIT) {
            rules.push((Rule::Family(DistFamily::Beta), w.beta));
        }
        if u.is_empty() {
            rules.push((Rule::UniformLoose, w.uniform));
        } else if u.is_finite() {
            rules.push((Rule::UniformStrict, w.uniform));
        }
        if budget >= 3 {
            rules.push((Rule::Add, w.add));
        }
        rules
    }

    fn choose(&mut self, t: &DualBound, rules: &[(Rule, f64)]) -> Result<Rule, SynthError> {
        let total: f64 = rules.iter().map(|(_, w)| w.max(0.0)).sum();
        if !(total > 0.0) {
            return Err(SynthError::NoWeightedRule(*t));
        }
        let mut r = self.rng.random::<f64>() * total;
        for &(rule, w) in rules {
            let w = w.max(0.0);
            if r < w {
                return Ok(rule);
            }
            r -= w;
        }
        let last = rules.iter().rev().find(|(_, w)| *w > 0.0).expect("positive total weight");
        Ok(last.0)
    }

    fn node(&mut self, t: &DualBound, budget: usize, root: bool) -> Result<Expr, SynthError> {
        let rules = self.rules(t, budget, root);
        if rules.is_empty() {
            return Err(SynthError::Unsatisfiable { target: *t, budget });
        }
        let (u, o) = (t.under(), t.over());
        match self.choose(t, &rules)? {
            Rule::Constant => {
                let v = match u.endpoints() {
                    Some((v, _)) => v,
                    None => pick(&o, self.rng)?,
                };
                Ok(Expr::Lit(v))
            }
            Rule::Reuse(level) => Ok(Expr::Var(level)),
            Rule::Family(family) => {
                let (ta, tb) = match family {
                    DistFamily::Beta => (positive(), positive()),
                    _ => (DualBound::ANY, positive()),
                };
                self.pair(Expr::Dist, family, &ta, &tb, budget)
            }
            Rule::UniformStrict => {
                let ((ol, oh), (ul, uh)) = (o.endpoints().expect("non-empty"), u.endpoints().expect("non-empty"));
                let ta = DualBound::loose(Bound::closed(ol, ul).expect("under inside over"));
                let tb = DualBound::loose(Bound::closed(uh, oh).expect("under inside over"));
                self.pair(Expr::Dist, DistFamily::Uniform, &ta, &tb, budget)
            }
            Rule::UniformLoose => {
                let (ol, oh) = o.endpoints().expect("non-empty");
                let s = pick(&o, self.rng)?;
                let ta = DualBound::loose(Bound::closed(ol, s).expect("pick stays in range"));
                let tb = DualBound::loose(Bound::closed(s, oh).expect("pick stays in range"));
                self.pair(Expr::Dist, DistFamily::Uniform, &ta, &tb, budget)
            }
            Rule::Add => {
                let vals = PointList::from_target(t).expect("satisfiable target has an over-approximation");
                let (r1, r2) = partition_add(&vals, self.rng);
                let (ta, tb) = (r1.to_target(), r2.to_target());
                let need_a = min_budget(&ta).expect("partition of a satisfiable target");
                let need_b = min_budget(&tb).expect("partition of a satisfiable target");
                let left = self.rng.random_range(need_a..=budget - 1 - need_b);
                let a = self.child(&ta, left)?;
                let b = self.child(&tb, budget - 1 - left)?;
                Ok(Expr::Add(a, b))
            }
        }
    }

    fn pair<F>(&mut self, build: F, family: DistFamily, ta: &DualBound, tb: &DualBound, budget: usize) -> Result<Expr, SynthError>
    where
        F: Fn(DistFamily, Arg, Arg) -> Expr,
    {
        let (left, right) = split_budget(budget, self.rng)?;
        let a = self.child(ta, left)?;
        let b = self.child(tb, right)?;
        Ok(build(family, a, b))
    }

    /// Synthesizes an argument; compound children become `let` bindings and
    /// are recorded in the context at their requested type.
    fn child(&mut self, t: &DualBound, budget: usize) -> Result<Arg, SynthError> {
        match self.node(t, budget, false)? {
            Expr::Lit(v) => Ok(Arg::Lit(v)),
            Expr::Var(level) => Ok(Arg::Var(level)),
            e => {
                self.bindings.push(e);
                self.ctx.push(*t);
                Ok(Arg::Var(self.ctx.len()))
            }
        }
    }
}

/// Synthesizes with the default rule weights.
pub fn synthesize(req: SynthRequest) -> Result<Expr, SynthError> {
    let SynthRequest { ctx, target, budget, mut rng } = req;
    synthesize_with(&ctx, &target, budget, &RuleWeights::default(), &mut rng)
}

/// Returns a program `e` with `check(ctx, e, target)` and
/// `node_cost(e) <= budget`; when `budget >= 1` the program has at least one
/// node.
pub fn synthesize_with(
    ctx: &TypingContext,
    target: &DualBound,
    budget: usize,
    weights: &RuleWeights,
    rng: &mut RngStream,
) -> Result<Expr, SynthError> {
    let mut s = Synth { weights, rng, ctx: ctx.iter().map(|(_, d)| *d).collect(), bindings: Vec::new() };
    let body = s.node(target, budget, true)?;
    Ok(Expr::from_bindings(s.bindings, body))
}

/// A random well-formed, satisfiable target mixing empty and non-empty
/// under-approximations with finite and infinite over-approximations.
pub fn random_target(rng: &mut RngStream) -> DualBound {
    let point = |rng: &mut RngStream| -> f64 {
        match rng.random_range(0..4) {
            0 => rng.random_range(-3..=3) as f64,
            1 => rng.random_range(-10.0..10.0),
            2 => rng.random_range(-1.0..1.0) * 10f64.powi(rng.random_range(-6..6)),
            _ => (rng.random_range(-100.0..100.0_f64) * 10.0).round() / 10.0,
        }
    };
    let sorted = |n: usize, rng: &mut RngStream| -> Vec<f64> {
        let mut xs: Vec<f64> = (0..n).map(|_| point(rng)).collect();
        if rng.random_bool(0.15) {
            xs[n - 1] = xs[0];
        }
        xs.sort_by(f64::total_cmp);
        xs
    };
    let inf = f64::INFINITY;
    let b = |lo, hi| Bound::closed(lo, hi).expect("sorted");
    let (under, over) = match rng.random_range(0..8) {
        0 => (Bound::EMPTY, Bound::EVERYTHING),
        1 => (Bound::EVERYTHING, Bound::EVERYTHING),
        2 => {
            let x = sorted(2, rng);
            let u = match rng.random_range(0..3) {
                0 => b(x[0], inf),
                1 => b(-inf, x[1]),
                _ => b(x[0], x[1]),
            };
            (u, Bound::EVERYTHING)
        }
        3 => {
            let x = sorted(3, rng);
            let under = if rng.random_bool(0.5) { Bound::EMPTY } else { b(x[1], x[2]) };
            (under, if rng.random_bool(0.5) { b(x[0], inf) } else { b(-inf, x[2]) })
        }
        4 => {
            let x = sorted(3, rng);
            (if rng.random_bool(0.5) { Bound::EMPTY } else { b(x[0], x[1]) }, b(-inf, x[2]))
        }
        5 => {
            let x = sorted(2, rng);
            (Bound::EMPTY, b(x[0], x[1]))
        }
        6 => {
            let x = sorted(4, rng);
            (b(x[1], x[2]), b(x[0], x[3]))
        }
        _ => {
            let x = sorted(2, rng);
            let c = if rng.random_bool(0.5) { x[0] } else { x[1] };
            (b(c, c), b(x[0], x[1]))
        }
    };
    DualBound::new(under, over).expect("under chosen inside over")
}
