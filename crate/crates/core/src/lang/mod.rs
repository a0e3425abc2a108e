//! Abstract syntax of PGPLang in A-normal form.
//!
//! Programs are a chain of nameless `let` binders followed by a body. Every
//! operator argument is either a literal or a variable, so intermediate values
//! must be bound first. Variables are De Bruijn *levels*: `v1` is the first
//! binder introduced, `v2` the second, and so on.

mod parse;
mod print;

pub use parse::{parse_program, ParseError, ParseErrorKind};
pub use print::print_program;

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// The distribution families of the language. Every family takes exactly two
/// parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DistFamily {
    Normal,
    Uniform,
    Laplace,
    Beta,
}

impl DistFamily {
    pub const ALL: [DistFamily; 4] = [
        DistFamily::Normal,
        DistFamily::Uniform,
        DistFamily::Laplace,
        DistFamily::Beta,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DistFamily::Normal => "Normal",
            DistFamily::Uniform => "Uniform",
            DistFamily::Laplace => "Laplace",
            DistFamily::Beta => "Beta",
        }
    }

    /// Case-insensitive lookup used by the parser.
    pub fn from_keyword(word: &str) -> Option<DistFamily> {
        DistFamily::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(word))
    }
}

impl fmt::Display for DistFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An operator argument: a variable (1-based level) or a finite literal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Arg {
    Var(usize),
    Lit(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Lit(f64),
    Var(usize),
    Dist(DistFamily, Arg, Arg),
    Add(Arg, Arg),
    /// `let bound in body`; `bound` is always a value form (`Dist`, `Add` or `Lit`).
    Let(Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WellFormedError {
    #[error("literal {0} is not finite")]
    NonFiniteLiteral(f64),
    #[error("variable v{level} is unbound ({depth} binders in scope)")]
    UnboundVariable { level: usize, depth: usize },
    #[error("let may only bind a distribution, add or literal")]
    NonValueBinding,
}

impl Expr {
    pub fn dist(family: DistFamily, a: Arg, b: Arg) -> Expr {
        Expr::Dist(family, a, b)
    }

    pub fn add(a: Arg, b: Arg) -> Expr {
        Expr::Add(a, b)
    }

    pub fn let_in(bound: Expr, body: Expr) -> Expr {
        Expr::Let(Box::new(bound), Box::new(body))
    }

    /// Builds `let b1 in let b2 in ... body` from a binding list.
    pub fn from_bindings(bindings: Vec<Expr>, body: Expr) -> Expr {
        bindings
            .into_iter()
            .rev()
            .fold(body, |acc, bound| Expr::let_in(bound, acc))
    }

    /// Splits the leading `let` chain into its bound values and the body.
    pub fn bindings(&self) -> (Vec<&Expr>, &Expr) {
        let mut bound = Vec::new();
        let mut cur = self;
        while let Expr::Let(b, body) = cur {
            bound.push(b.as_ref());
            cur = body.as_ref();
        }
        (bound, cur)
    }

    pub fn is_value(&self) -> bool {
        matches!(self, Expr::Lit(_) | Expr::Dist(..) | Expr::Add(..))
    }

    /// Checks ANF shape, scoping and literal finiteness, assuming `depth`
    /// binders are already in scope.
    pub fn check_well_formed(&self, depth: usize) -> Result<(), WellFormedError> {
        let arg_ok = |a: &Arg| match *a {
            Arg::Lit(v) if !v.is_finite() => Err(WellFormedError::NonFiniteLiteral(v)),
            Arg::Var(level) if level == 0 || level > depth => {
                Err(WellFormedError::UnboundVariable { level, depth })
            }
            _ => Ok(()),
        };
        match self {
            Expr::Lit(v) if !v.is_finite() => Err(WellFormedError::NonFiniteLiteral(*v)),
            Expr::Lit(_) => Ok(()),
            Expr::Var(level) => arg_ok(&Arg::Var(*level)),
            Expr::Dist(_, a, b) | Expr::Add(a, b) => {
                arg_ok(a)?;
                arg_ok(b)
            }
            Expr::Let(bound, body) => {
                if !bound.is_value() {
                    return Err(WellFormedError::NonValueBinding);
                }
                bound.check_well_formed(depth)?;
                body.check_well_formed(depth + 1)
            }
        }
    }
}

/// Number of non-trivial nodes: distribution calls and additions. Literals,
/// variables and binders are free.
pub fn node_cost(e: &Expr) -> usize {
    match e {
        Expr::Lit(_) | Expr::Var(_) => 0,
        Expr::Dist(..) | Expr::Add(..) => 1,
        Expr::Let(bound, body) => node_cost(bound) + node_cost(body),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_program(self))
    }
}
