//! The typing judgement `Γ ⊢ e : «d»`.
//!
//! [`infer`] computes the principal dual bound of an expression without
//! applying subtyping; subtyping is only used where an argument is checked
//! against a distribution's parameter domain, and in [`check`].

use crate::intervals::{Bound, DualBound, IntervalError};
use crate::lang::{Arg, DistFamily, Expr};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Types of the enclosing binders, indexed by 1-based De Bruijn level.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TypingContext(Vec<DualBound>);

impl TypingContext {
    pub fn new() -> Self {
        TypingContext(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `Γ(level)`, 1-based.
    pub fn get(&self, level: usize) -> Option<&DualBound> {
        level.checked_sub(1).and_then(|i| self.0.get(i))
    }

    pub fn push(&mut self, d: DualBound) {
        self.0.push(d);
    }

    /// A copy with `d` appended.
    pub fn extended(&self, d: DualBound) -> TypingContext {
        let mut c = self.clone();
        c.push(d);
        c
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &DualBound)> {
        self.0.iter().enumerate().map(|(i, d)| (i + 1, d))
    }
}

impl FromIterator<DualBound> for TypingContext {
    fn from_iter<I: IntoIterator<Item = DualBound>>(iter: I) -> Self {
        TypingContext(iter.into_iter().collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TypeErrorKind {
    ArgumentBoundViolation,
    UnboundVariable,
    SubtypeFailure,
    IndeterminateArithmetic,
    InvalidLiteral,
}

impl fmt::Display for TypeErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TypeErrorKind::ArgumentBoundViolation => "argument bound violation",
            TypeErrorKind::UnboundVariable => "unbound variable",
            TypeErrorKind::SubtypeFailure => "subtype failure",
            TypeErrorKind::IndeterminateArithmetic => "indeterminate arithmetic",
            TypeErrorKind::InvalidLiteral => "invalid literal",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub struct TypeError {
    pub kind: TypeErrorKind,
    /// `v3.arg2`, `body`, ...: the binding (or body) and argument at fault.
    pub path: String,
    pub expected: Option<DualBound>,
    pub actual: Option<DualBound>,
    pub detail: String,
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.kind, self.path, self.detail)?;
        if let Some(e) = &self.expected {
            write!(f, "; expected {e}")?;
        }
        if let Some(a) = &self.actual {
            write!(f, ", found {a}")?;
        }
        Ok(())
    }
}

impl TypeError {
    fn new(kind: TypeErrorKind, path: &str, detail: impl Into<String>) -> TypeError {
        TypeError { kind, path: path.into(), expected: None, actual: None, detail: detail.into() }
    }

    fn arithmetic(path: &str, e: IntervalError) -> TypeError {
        TypeError::new(TypeErrorKind::IndeterminateArithmetic, path, e.to_string())
    }
}

fn arg_type(ctx: &TypingContext, a: &Arg, path: &str) -> Result<DualBound, TypeError> {
    match *a {
        Arg::Lit(v) if !v.is_finite() => {
            Err(TypeError::new(TypeErrorKind::InvalidLiteral, path, format!("literal {v} is not finite")))
        }
        Arg::Lit(v) => DualBound::literal(v).map_err(|e| TypeError::arithmetic(path, e)),
        Arg::Var(level) => ctx.get(level).copied().ok_or_else(|| {
            TypeError::new(
                TypeErrorKind::UnboundVariable,
                path,
                format!("v{level} is not bound ({} binders in scope)", ctx.len()),
            )
        }),
    }
}

/// Checks `a` against a parameter domain via subtyping.
fn check_param(
    ctx: &TypingContext,
    family: DistFamily,
    a: &Arg,
    index: usize,
    domain: DualBound,
    path: &str,
) -> Result<DualBound, TypeError> {
    let path = format!("{path}.arg{index}");
    let got = arg_type(ctx, a, &path)?;
    if got.is_subtype_of(&domain) {
        Ok(got)
    } else {
        Err(TypeError {
            kind: TypeErrorKind::ArgumentBoundViolation,
            detail: format!("parameter {index} of {family} may take values outside its domain"),
            expected: Some(domain),
            actual: Some(got),
            path,
        })
    }
}

/// Type of `Uniform(a, b)` given the argument types.
///
/// The over-approximation is the hull of the argument over-approximations.
/// When the argument over-approximations are ordered (`a` never exceeds the
/// smallest value of `b`, or the reverse), every realisation of the interval
/// contains the gap between them, so the gap is part of the
/// under-approximation. Otherwise the under-approximation is `a¹ ∩ b¹`.
pub fn uniform_type(a: &DualBound, b: &DualBound) -> DualBound {
    let over = a.over().union(&b.over());
    let gap = match (a.over().endpoints(), b.over().endpoints()) {
        (Some((a_lo, a_hi)), Some((b_lo, b_hi))) => {
            if a_hi <= b_lo {
                Bound::closed(a_hi, b_lo).unwrap_or(Bound::EMPTY)
            } else if b_hi <= a_lo {
                Bound::closed(b_hi, a_lo).unwrap_or(Bound::EMPTY)
            } else {
                Bound::EMPTY
            }
        }
        _ => Bound::EMPTY,
    };
    let under = gap.union(&a.under().intersect(&b.under()));
    DualBound::new(under, over).expect("uniform under-approximation lies inside the hull")
}

/// Type of a distribution call whose arguments have already been typed.
pub fn dist_type(family: DistFamily, a: &DualBound, b: &DualBound) -> DualBound {
    match family {
        DistFamily::Normal | DistFamily::Laplace => DualBound::FULL,
        DistFamily::Beta => DualBound::UNIT,
        DistFamily::Uniform => uniform_type(a, b),
    }
}

/// Parameter domains `(first, second)` of a family.
pub fn param_domains(family: DistFamily) -> (DualBound, DualBound) {
    match family {
        DistFamily::Normal | DistFamily::Laplace => (DualBound::ANY, DualBound::NON_NEGATIVE),
        DistFamily::Beta => (DualBound::NON_NEGATIVE, DualBound::NON_NEGATIVE),
        DistFamily::Uniform => (DualBound::ANY, DualBound::ANY),
    }
}

fn infer_value(ctx: &TypingContext, e: &Expr, path: &str) -> Result<DualBound, TypeError> {
    match e {
        Expr::Lit(v) => arg_type(ctx, &Arg::Lit(*v), path),
        Expr::Var(level) => arg_type(ctx, &Arg::Var(*level), path),
        Expr::Dist(family, a, b) => {
            let (da, db) = param_domains(*family);
            let ta = check_param(ctx, *family, a, 1, da, path)?;
            let tb = check_param(ctx, *family, b, 2, db, path)?;
            Ok(dist_type(*family, &ta, &tb))
        }
        Expr::Add(a, b) => {
            let ta = arg_type(ctx, a, &format!("{path}.arg1"))?;
            let tb = arg_type(ctx, b, &format!("{path}.arg2"))?;
            ta.add(&tb).map_err(|e| TypeError::arithmetic(path, e))
        }
        Expr::Let(..) => unreachable!("let chains are unrolled by infer"),
    }
}

/// Principal type of `e` under `ctx`.
pub fn infer(ctx: &TypingContext, e: &Expr) -> Result<DualBound, TypeError> {
    let mut ctx = ctx.clone();
    let mut cur = e;
    while let Expr::Let(bound, body) = cur {
        let path = format!("v{}", ctx.len() + 1);
        let t = infer_value(&ctx, bound, &path)?;
        ctx.push(t);
        cur = body;
    }
    infer_value(&ctx, cur, "body")
}

/// `infer(ctx, e) <: target`.
pub fn check(ctx: &TypingContext, e: &Expr, target: &DualBound) -> Result<bool, TypeError> {
    Ok(infer(ctx, e)?.is_subtype_of(target))
}

/// Like [`check`] but reports a failed subtype check as a [`TypeError`].
pub fn require(ctx: &TypingContext, e: &Expr, target: &DualBound) -> Result<DualBound, TypeError> {
    let got = infer(ctx, e)?;
    if got.is_subtype_of(target) {
        Ok(got)
    } else {
        Err(TypeError {
            kind: TypeErrorKind::SubtypeFailure,
            path: "program".into(),
            expected: Some(*target),
            actual: Some(got),
            detail: "program type is not a subtype of the target".into(),
        })
    }
}
