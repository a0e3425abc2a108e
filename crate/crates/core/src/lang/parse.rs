use super::{Arg, DistFamily, Expr};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{line}:{column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    InvalidNumber(String),
    UnexpectedToken { found: String, expected: &'static str },
    UnexpectedEnd { expected: &'static str },
    UnboundVariable { level: usize, depth: usize },
    /// An operator appeared where only a variable or literal may go.
    NestedExpression(String),
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected character {c:?}"),
            ParseErrorKind::InvalidNumber(s) => write!(f, "invalid or non-finite number {s:?}"),
            ParseErrorKind::UnexpectedToken { found, expected } => {
                write!(f, "expected {expected}, found {found:?}")
            }
            ParseErrorKind::UnexpectedEnd { expected } => {
                write!(f, "expected {expected}, found end of input")
            }
            ParseErrorKind::UnboundVariable { level, depth } => {
                write!(f, "unbound variable v{level} ({depth} binders in scope)")
            }
            ParseErrorKind::NestedExpression(op) => write!(
                f,
                "nested expression {op:?}: arguments must be variables or literals, bind it with let first"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Num(f64),
    LParen,
    RParen,
    Comma,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Word(w) => w.clone(),
            Tok::Num(v) => format!("{v:?}"),
            Tok::LParen => "(".into(),
            Tok::RParen => ")".into(),
            Tok::Comma => ",".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    for (line_idx, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let (line, column) = (line_idx + 1, i + 1);
            let err = |kind| ParseError { line, column, kind };
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            let simple = match c {
                '(' => Some(Tok::LParen),
                ')' => Some(Tok::RParen),
                ',' => Some(Tok::Comma),
                _ => None,
            };
            if let Some(tok) = simple {
                out.push(Spanned { tok, line, column });
                i += 1;
                continue;
            }
            let starts_number = c.is_ascii_digit()
                || c == '.'
                || ((c == '-' || c == '+')
                    && chars.get(i + 1).is_some_and(|n| n.is_ascii_digit() || *n == '.'));
            if starts_number {
                let start = i;
                i += 1;
                while i < chars.len() {
                    let d = chars[i];
                    let exp_sign = (d == '-' || d == '+') && matches!(chars[i - 1], 'e' | 'E');
                    if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exp_sign {
                        i += 1;
                    } else {
                        break;
                    }
                }
                let s: String = chars[start..i].iter().collect();
                match s.parse::<f64>() {
                    Ok(v) if v.is_finite() => out.push(Spanned { tok: Tok::Num(v), line, column }),
                    _ => return Err(err(ParseErrorKind::InvalidNumber(s))),
                }
                continue;
            }
            if c.is_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let w: String = chars[start..i].iter().collect();
                out.push(Spanned { tok: Tok::Word(w), line, column });
                continue;
            }
            return Err(err(ParseErrorKind::UnexpectedChar(c)));
        }
    }
    Ok(out)
}

fn var_level(word: &str) -> Option<usize> {
    let digits = word.strip_prefix('v')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    end: (usize, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Spanned> {
        self.toks.get(self.pos)
    }

    fn next(&mut self, expected: &'static str) -> Result<Spanned, ParseError> {
        match self.toks.get(self.pos) {
            Some(t) => {
                self.pos += 1;
                Ok(t.clone())
            }
            None => Err(self.eof(expected)),
        }
    }

    fn eof(&self, expected: &'static str) -> ParseError {
        ParseError {
            line: self.end.0,
            column: self.end.1,
            kind: ParseErrorKind::UnexpectedEnd { expected },
        }
    }

    fn expect(&mut self, want: Tok, expected: &'static str) -> Result<(), ParseError> {
        let t = self.next(expected)?;
        if t.tok == want {
            Ok(())
        } else {
            Err(ParseError {
                line: t.line,
                column: t.column,
                kind: ParseErrorKind::UnexpectedToken { found: t.tok.describe(), expected },
            })
        }
    }

    fn expr(&mut self, depth: usize) -> Result<Expr, ParseError> {
        const WHAT: &str = "let, a distribution, add, a variable or a literal";
        let t = self.peek().cloned().ok_or_else(|| self.eof(WHAT))?;
        match &t.tok {
            Tok::Word(w) if w == "let" => {
                self.pos += 1;
                let bound = self.value(depth, "a distribution, add or literal after let")?;
                self.expect(Tok::Word("in".into()), "in")?;
                let body = self.expr(depth + 1)?;
                Ok(Expr::let_in(bound, body))
            }
            Tok::Word(w) if var_level(w).is_some() => {
                self.pos += 1;
                let level = var_level(w).unwrap();
                check_scope(level, depth, &t)?;
                Ok(Expr::Var(level))
            }
            _ => self.value(depth, WHAT),
        }
    }

    fn value(&mut self, depth: usize, expected: &'static str) -> Result<Expr, ParseError> {
        let t = self.next(expected)?;
        match &t.tok {
            Tok::Num(v) => Ok(Expr::Lit(*v)),
            Tok::Word(w) if w == "add" => {
                let (a, b) = self.args(depth)?;
                Ok(Expr::add(a, b))
            }
            Tok::Word(w) => match DistFamily::from_keyword(w) {
                Some(family) => {
                    let (a, b) = self.args(depth)?;
                    Ok(Expr::dist(family, a, b))
                }
                None => Err(unexpected(&t, expected)),
            },
            _ => Err(unexpected(&t, expected)),
        }
    }

    fn args(&mut self, depth: usize) -> Result<(Arg, Arg), ParseError> {
        if matches!(self.peek(), Some(Spanned { tok: Tok::LParen, .. })) {
            self.pos += 1;
            let a = self.arg(depth)?;
            self.expect(Tok::Comma, ",")?;
            let b = self.arg(depth)?;
            self.expect(Tok::RParen, ")")?;
            Ok((a, b))
        } else {
            let a = self.arg(depth)?;
            let b = self.arg(depth)?;
            Ok((a, b))
        }
    }

    fn arg(&mut self, depth: usize) -> Result<Arg, ParseError> {
        const WHAT: &str = "a variable or literal argument";
        let t = self.next(WHAT)?;
        match &t.tok {
            Tok::Num(v) => Ok(Arg::Lit(*v)),
            Tok::Word(w) => {
                if let Some(level) = var_level(w) {
                    check_scope(level, depth, &t)?;
                    return Ok(Arg::Var(level));
                }
                if w == "add" || w == "let" || DistFamily::from_keyword(w).is_some() {
                    return Err(ParseError {
                        line: t.line,
                        column: t.column,
                        kind: ParseErrorKind::NestedExpression(w.clone()),
                    });
                }
                Err(unexpected(&t, WHAT))
            }
            Tok::LParen => Err(ParseError {
                line: t.line,
                column: t.column,
                kind: ParseErrorKind::NestedExpression("(".into()),
            }),
            _ => Err(unexpected(&t, WHAT)),
        }
    }
}

fn unexpected(t: &Spanned, expected: &'static str) -> ParseError {
    ParseError {
        line: t.line,
        column: t.column,
        kind: ParseErrorKind::UnexpectedToken { found: t.tok.describe(), expected },
    }
}

fn check_scope(level: usize, depth: usize, t: &Spanned) -> Result<(), ParseError> {
    if level == 0 || level > depth {
        Err(ParseError {
            line: t.line,
            column: t.column,
            kind: ParseErrorKind::UnboundVariable { level, depth },
        })
    } else {
        Ok(())
    }
}

/// Parses a closed PGPLang program. `#` starts a comment that runs to the end
/// of the line. Both `Beta 0.3 0.25` and `Beta(0.3, 0.25)` argument styles are
/// accepted, and distribution names are case-insensitive.
pub fn parse_program(text: &str) -> Result<Expr, ParseError> {
    let toks = lex(text)?;
    let line_count = text.lines().count().max(1);
    let last_len = text.lines().last().map_or(0, |l| l.chars().count());
    let mut p = Parser { toks, pos: 0, end: (line_count, last_len + 1) };
    let e = p.expr(0)?;
    if let Some(t) = p.peek() {
        return Err(unexpected(t, "end of program"));
    }
    Ok(e)
}
