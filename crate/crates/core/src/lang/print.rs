use super::{Arg, Expr};
use std::fmt::Write;

/// Shortest decimal that reads back to the same `f64`; integral values keep a
/// trailing `.0`.
pub(crate) fn fmt_literal(v: f64) -> String {
    format!("{v:?}")
}

fn fmt_arg(a: &Arg) -> String {
    match a {
        Arg::Var(level) => format!("v{level}"),
        Arg::Lit(v) => fmt_literal(*v),
    }
}

fn fmt_value(e: &Expr, out: &mut String) {
    match e {
        Expr::Lit(v) => out.push_str(&fmt_literal(*v)),
        Expr::Var(level) => {
            let _ = write!(out, "v{level}");
        }
        Expr::Dist(family, a, b) => {
            let _ = write!(out, "{family} {} {}", fmt_arg(a), fmt_arg(b));
        }
        Expr::Add(a, b) => {
            let _ = write!(out, "add {} {}", fmt_arg(a), fmt_arg(b));
        }
        Expr::Let(..) => unreachable!("let chains are unrolled by print_program"),
    }
}

/// Renders a program with one binder per line, so the binding of `vN` sits on
/// line N.
pub fn print_program(e: &Expr) -> String {
    let (bindings, body) = e.bindings();
    let mut out = String::new();
    for b in bindings {
        out.push_str("let ");
        fmt_value(b, &mut out);
        out.push_str(" in\n");
    }
    fmt_value(body, &mut out);
    out
}
