//! Bounds over the extended reals and the dual bounds used as types.
//!
//! A [`Bound`] is either empty or a closed interval `[lo, hi]` with
//! `lo <= hi`; either endpoint may be infinite. A [`DualBound`] pairs an
//! under-approximation (values that are produced with nonzero probability)
//! with an over-approximation (values outside it are never produced).

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntervalError {
    #[error("bound endpoint is NaN")]
    NaN,
    #[error("unordered bound endpoints [{lo}, {hi}]")]
    Unordered { lo: f64, hi: f64 },
    #[error("under-approximation {under} is not contained in over-approximation {over}")]
    UnderNotInOver { under: Bound, over: Bound },
    #[error("indeterminate sum of opposite infinities adding {a} and {b}")]
    IndeterminateSum { a: Bound, b: Bound },
    #[error("cannot parse bound from {0:?}")]
    Syntax(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Endpoints {
    lo: f64,
    hi: f64,
}

/// Serialized as its textual rendering (`[0.0,inf]`, `∅`) so infinities
/// survive formats such as JSON.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct Bound(Option<Endpoints>);

impl Bound {
    pub const EMPTY: Bound = Bound(None);
    pub const EVERYTHING: Bound = Bound(Some(Endpoints { lo: f64::NEG_INFINITY, hi: f64::INFINITY }));
    pub const NON_NEGATIVE: Bound = Bound(Some(Endpoints { lo: 0.0, hi: f64::INFINITY }));
    pub const UNIT: Bound = Bound(Some(Endpoints { lo: 0.0, hi: 1.0 }));

    pub fn closed(lo: f64, hi: f64) -> Result<Bound, IntervalError> {
        if lo.is_nan() || hi.is_nan() {
            return Err(IntervalError::NaN);
        }
        if lo > hi {
            return Err(IntervalError::Unordered { lo, hi });
        }
        Ok(Bound(Some(Endpoints { lo, hi })))
    }

    pub fn point(v: f64) -> Result<Bound, IntervalError> {
        Bound::closed(v, v)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_none()
    }

    pub fn endpoints(&self) -> Option<(f64, f64)> {
        self.0.map(|e| (e.lo, e.hi))
    }

    pub fn lo(&self) -> Option<f64> {
        self.0.map(|e| e.lo)
    }

    pub fn hi(&self) -> Option<f64> {
        self.0.map(|e| e.hi)
    }

    pub fn is_singleton(&self) -> bool {
        matches!(self.0, Some(e) if e.lo == e.hi)
    }

    /// Both endpoints finite (and non-empty).
    pub fn is_finite(&self) -> bool {
        matches!(self.0, Some(e) if e.lo.is_finite() && e.hi.is_finite())
    }

    /// Whether the bound contains at least one real (non-infinite) number.
    pub fn has_real_point(&self) -> bool {
        match self.0 {
            None => false,
            Some(e) => e.lo < f64::INFINITY && e.hi > f64::NEG_INFINITY,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        matches!(self.0, Some(e) if e.lo <= x && x <= e.hi)
    }

    pub fn is_subset_of(&self, other: &Bound) -> bool {
        match (self.0, other.0) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(a), Some(b)) => b.lo <= a.lo && a.hi <= b.hi,
        }
    }

    pub fn intersect(&self, other: &Bound) -> Bound {
        match (self.0, other.0) {
            (Some(a), Some(b)) => {
                let lo = a.lo.max(b.lo);
                let hi = a.hi.min(b.hi);
                if lo > hi {
                    Bound::EMPTY
                } else {
                    Bound(Some(Endpoints { lo, hi }))
                }
            }
            _ => Bound::EMPTY,
        }
    }

    /// Convex hull of the two bounds; the empty bound is the identity.
    pub fn union(&self, other: &Bound) -> Bound {
        match (self.0, other.0) {
            (None, _) => *other,
            (_, None) => *self,
            (Some(a), Some(b)) => Bound(Some(Endpoints { lo: a.lo.min(b.lo), hi: a.hi.max(b.hi) })),
        }
    }

    /// Interval sum. Empty absorbs; `+inf + -inf` at the same endpoint is an
    /// error rather than a NaN.
    pub fn add(&self, other: &Bound) -> Result<Bound, IntervalError> {
        match (self.0, other.0) {
            (Some(a), Some(b)) => {
                let lo = a.lo + b.lo;
                let hi = a.hi + b.hi;
                if lo.is_nan() || hi.is_nan() {
                    return Err(IntervalError::IndeterminateSum { a: *self, b: *other });
                }
                Ok(Bound(Some(Endpoints { lo, hi })))
            }
            _ => Ok(Bound::EMPTY),
        }
    }
}

fn fmt_endpoint(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:?}")
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            None => f.write_str("∅"),
            Some(e) => write!(f, "[{},{}]", fmt_endpoint(e.lo), fmt_endpoint(e.hi)),
        }
    }
}

fn parse_endpoint(s: &str) -> Option<f64> {
    match s.trim() {
        "inf" | "+inf" | "∞" | "+∞" => Some(f64::INFINITY),
        "-inf" | "-∞" => Some(f64::NEG_INFINITY),
        t => t.parse::<f64>().ok().filter(|v| !v.is_nan()),
    }
}

impl FromStr for Bound {
    type Err = IntervalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if matches!(t, "∅" | "empty" | "{}" | "[]") {
            return Ok(Bound::EMPTY);
        }
        let inner = t
            .strip_prefix('[')
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(|| IntervalError::Syntax(s.into()))?;
        let (lo, hi) = inner.split_once(',').ok_or_else(|| IntervalError::Syntax(s.into()))?;
        match (parse_endpoint(lo), parse_endpoint(hi)) {
            (Some(lo), Some(hi)) => Bound::closed(lo, hi),
            _ => Err(IntervalError::Syntax(s.into())),
        }
    }
}

/// The type of a random expression: `«under, over»` with `under ⊆ over`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct DualBound {
    under: Bound,
    over: Bound,
}

impl DualBound {
    /// `«[-inf,inf],[-inf,inf]»`
    pub const FULL: DualBound = DualBound { under: Bound::EVERYTHING, over: Bound::EVERYTHING };
    /// `«∅,[-inf,inf]»`, satisfied by every expression.
    pub const ANY: DualBound = DualBound { under: Bound::EMPTY, over: Bound::EVERYTHING };
    /// `«∅,[0,inf]»`
    pub const NON_NEGATIVE: DualBound = DualBound { under: Bound::EMPTY, over: Bound::NON_NEGATIVE };
    /// `«[0,1],[0,1]»`
    pub const UNIT: DualBound = DualBound { under: Bound::UNIT, over: Bound::UNIT };

    pub fn new(under: Bound, over: Bound) -> Result<DualBound, IntervalError> {
        if under.is_subset_of(&over) {
            Ok(DualBound { under, over })
        } else {
            Err(IntervalError::UnderNotInOver { under, over })
        }
    }

    /// `«∅, over»`
    pub fn loose(over: Bound) -> DualBound {
        DualBound { under: Bound::EMPTY, over }
    }

    /// The type of a literal: `«[v,v],[v,v]»`.
    pub fn literal(v: f64) -> Result<DualBound, IntervalError> {
        let b = Bound::point(v)?;
        Ok(DualBound { under: b, over: b })
    }

    pub fn under(&self) -> Bound {
        self.under
    }

    pub fn over(&self) -> Bound {
        self.over
    }

    /// Componentwise interval sum.
    pub fn add(&self, other: &DualBound) -> Result<DualBound, IntervalError> {
        let under = self.under.add(&other.under)?;
        let over = self.over.add(&other.over)?;
        // Sums of nested intervals stay nested, so this cannot fail.
        DualBound::new(under, over)
    }

    /// `self <: want`: our under-approximation covers theirs and our
    /// over-approximation fits inside theirs.
    pub fn is_subtype_of(&self, want: &DualBound) -> bool {
        want.under.is_subset_of(&self.under) && self.over.is_subset_of(&want.over)
    }
}

macro_rules! string_serde {
    ($t:ty) => {
        impl From<$t> for String {
            fn from(v: $t) -> String {
                v.to_string()
            }
        }

        impl TryFrom<String> for $t {
            type Error = IntervalError;

            fn try_from(s: String) -> Result<Self, Self::Error> {
                s.parse()
            }
        }
    };
}

string_serde!(Bound);
string_serde!(DualBound);

pub fn bound_subset(a: &Bound, b: &Bound) -> bool {
    a.is_subset_of(b)
}

pub fn bound_intersect(a: &Bound, b: &Bound) -> Bound {
    a.intersect(b)
}

pub fn bound_union(a: &Bound, b: &Bound) -> Bound {
    a.union(b)
}

pub fn add_bounds(a: &Bound, b: &Bound) -> Result<Bound, IntervalError> {
    a.add(b)
}

pub fn add_dual_bounds(a: &DualBound, b: &DualBound) -> Result<DualBound, IntervalError> {
    a.add(b)
}

pub fn is_subtype(got: &DualBound, want: &DualBound) -> bool {
    got.is_subtype_of(want)
}

impl fmt::Display for DualBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "«{},{}»", self.under, self.over)
    }
}

impl FromStr for DualBound {
    type Err = IntervalError;

    /// Accepts `«[0,1],[0,1]»`, `<<∅,[0,inf]>>` or the bare `empty,[0,inf]`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let inner = t
            .strip_prefix('«')
            .and_then(|r| r.strip_suffix('»'))
            .or_else(|| t.strip_prefix("<<").and_then(|r| r.strip_suffix(">>")))
            .unwrap_or(t)
            .trim();
        // The separating comma is the first one outside brackets.
        let mut depth = 0i32;
        let mut split = None;
        for (i, c) in inner.char_indices() {
            match c {
                '[' => depth += 1,
                ']' => depth -= 1,
                ',' if depth == 0 => {
                    split = Some(i);
                    break;
                }
                _ => {}
            }
        }
        let i = split.ok_or_else(|| IntervalError::Syntax(s.into()))?;
        let under: Bound = inner[..i].parse()?;
        let over: Bound = inner[i + 1..].parse()?;
        DualBound::new(under, over)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const INF: f64 = f64::INFINITY;

    fn b(lo: f64, hi: f64) -> Bound {
        Bound::closed(lo, hi).unwrap()
    }

    fn d(under: Bound, over: Bound) -> DualBound {
        DualBound::new(under, over).unwrap()
    }

    #[test]
    fn subset_examples() {
        assert!(bound_subset(&b(0.0, 1.0), &b(-2.0, 1.0)));
        assert!(bound_subset(&Bound::EMPTY, &Bound::EMPTY));
        assert!(!bound_subset(&b(-INF, 0.0), &b(0.0, INF)));
        assert!(!bound_subset(&b(0.0, 1.0), &Bound::EMPTY));
    }

    #[test]
    fn intersect_examples() {
        assert_eq!(bound_intersect(&b(0.0, 2.0), &b(1.0, 3.0)), b(1.0, 2.0));
        assert_eq!(bound_intersect(&b(0.0, 1.0), &b(2.0, 3.0)), Bound::EMPTY);
        assert_eq!(bound_intersect(&b(-0.5, 4.0), &Bound::EVERYTHING), b(-0.5, 4.0));
        assert_eq!(bound_intersect(&Bound::EMPTY, &Bound::EVERYTHING), Bound::EMPTY);
    }

    #[test]
    fn union_is_hull() {
        assert_eq!(bound_union(&b(0.0, 1.0), &b(2.0, 3.0)), b(0.0, 3.0));
        assert_eq!(bound_union(&Bound::EMPTY, &b(-1.0, 5.0)), b(-1.0, 5.0));
        assert_eq!(bound_union(&b(-INF, 0.0), &b(0.0, INF)), Bound::EVERYTHING);
    }

    #[test]
    fn add_examples() {
        assert_eq!(add_bounds(&Bound::EMPTY, &b(3.0, 4.0)).unwrap(), Bound::EMPTY);
        assert_eq!(add_bounds(&b(3.0, 4.0), &Bound::EMPTY).unwrap(), Bound::EMPTY);
        assert_eq!(add_bounds(&b(1.0, 2.0), &b(3.0, 4.0)).unwrap(), b(4.0, 6.0));
        assert_eq!(add_bounds(&b(-INF, 0.0), &b(0.0, INF)).unwrap(), Bound::EVERYTHING);
        let err = add_bounds(&b(INF, INF), &b(-INF, 0.0)).unwrap_err();
        assert!(matches!(err, IntervalError::IndeterminateSum { .. }));
    }

    #[test]
    fn dual_add_examples() {
        let unit = DualBound::UNIT;
        assert_eq!(add_dual_bounds(&unit, &unit).unwrap(), d(b(0.0, 2.0), b(0.0, 2.0)));
        let loose = DualBound::loose(Bound::UNIT);
        assert_eq!(add_dual_bounds(&loose, &unit).unwrap(), d(Bound::EMPTY, b(0.0, 2.0)));
        let x = d(b(-1.0, 0.5), b(-3.0, 7.0));
        assert_eq!(add_dual_bounds(&x, &DualBound::literal(0.0).unwrap()).unwrap(), x);
    }

    #[test]
    fn subtype_examples() {
        assert!(is_subtype(&DualBound::UNIT, &d(Bound::EMPTY, b(-2.0, 2.0))));
        assert!(!is_subtype(&DualBound::ANY, &DualBound::NON_NEGATIVE));
        let x = d(b(-1.0, 0.5), b(-3.0, 7.0));
        assert!(is_subtype(&x, &x));
    }

    #[test]
    fn constructors_reject_bad_input() {
        assert_eq!(Bound::closed(f64::NAN, 1.0), Err(IntervalError::NaN));
        assert!(matches!(Bound::closed(2.0, 1.0), Err(IntervalError::Unordered { .. })));
        assert!(DualBound::new(b(0.0, 2.0), b(0.0, 1.0)).is_err());
        assert!(DualBound::new(Bound::EMPTY, Bound::EMPTY).is_ok());
        assert!(Bound::point(3.0).unwrap().is_singleton());
    }

    #[test]
    fn rendering_and_parsing() {
        let x = d(Bound::EMPTY, b(0.0, INF));
        assert_eq!(x.to_string(), "«∅,[0.0,inf]»");
        assert_eq!("«∅,[0,inf]»".parse::<DualBound>().unwrap(), x);
        assert_eq!("<<empty,[0,+inf]>>".parse::<DualBound>().unwrap(), x);
        assert_eq!("[-1,0],[-2,1]".parse::<DualBound>().unwrap(), d(b(-1.0, 0.0), b(-2.0, 1.0)));
        assert!("«[0,2],[0,1]»".parse::<DualBound>().is_err());
        assert!("«[0,1]»".parse::<DualBound>().is_err());
    }
}
