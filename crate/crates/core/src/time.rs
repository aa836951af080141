//! Exact time arithmetic: bounds, intervals over the nonnegative rationals,
//! interval differences and metric-constraint checks.
//!
//! [`Interval`] is generic over any exactly ordered scalar; the crate root
//! fixes the default to [`Rational`].

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::Sub;

use num_traits::{Signed, ToPrimitive, Zero};

use crate::truth::Truth3;
use crate::Rational;

/// Scalar types usable as interval endpoints. Comparisons must be exact.
pub trait Scalar: Clone + Ord + Hash + Zero + Sub<Output = Self> + fmt::Debug {
    /// Same as `Ord::cmp`; implementations may provide a faster path.
    fn order(&self, other: &Self) -> Ordering {
        self.cmp(other)
    }

    /// Hashes consistently with `order`; implementations may provide a
    /// faster path.
    fn hash_exact<H: Hasher>(&self, state: &mut H) {
        self.hash(state);
    }
}

impl Scalar for i64 {}

impl Scalar for Rational {
    /// `Ratio::cmp` works by repeated division; endpoints here mostly share a
    /// denominator or fit a 128-bit cross product.
    fn order(&self, other: &Self) -> Ordering {
        let (a, b) = (self.denom(), other.denom());
        if a == b {
            self.numer().cmp(other.numer())
        } else {
            (i128::from(*self.numer()) * i128::from(*b)).cmp(&(i128::from(*other.numer()) * i128::from(*a)))
        }
    }

    /// `Ratio` keeps lowest terms, so the raw parts are canonical.
    fn hash_exact<H: Hasher>(&self, state: &mut H) {
        self.numer().hash(state);
        self.denom().hash(state);
    }
}

fn bound_order<T: Scalar>(a: &Bound<T>, b: &Bound<T>) -> Ordering {
    match (a, b) {
        (Bound::Finite(x), Bound::Finite(y)) => x.order(y),
        (Bound::Finite(_), Bound::Infinity) => Ordering::Less,
        (Bound::Infinity, Bound::Finite(_)) => Ordering::Greater,
        (Bound::Infinity, Bound::Infinity) => Ordering::Equal,
    }
}

/// Right endpoint of an interval.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Bound<T = Rational> {
    Finite(T),
    Infinity,
}

impl<T> Bound<T> {
    pub fn finite(&self) -> Option<&T> {
        match self {
            Bound::Finite(v) => Some(v),
            Bound::Infinity => None,
        }
    }
}

/// A nonempty interval of nonnegative scalars, possibly unbounded on the right.
#[derive(Clone, Debug)]
pub struct Interval<T = Rational> {
    lo: T,
    lo_closed: bool,
    hi: Bound<T>,
    hi_closed: bool,
}

impl<T: Scalar> Interval<T> {
    /// Builds an interval, returning `None` when it would be empty or extend
    /// below zero.
    pub fn new(lo: T, lo_closed: bool, hi: Bound<T>, hi_closed: bool) -> Option<Self> {
        if lo.order(&T::zero()) == Ordering::Less {
            return None;
        }
        let hi_closed = hi_closed && hi != Bound::Infinity;
        match &hi {
            Bound::Infinity => {}
            Bound::Finite(h) => match lo.order(h) {
                Ordering::Greater => return None,
                Ordering::Equal if !(lo_closed && hi_closed) => return None,
                _ => {}
            },
        }
        Some(Interval { lo, lo_closed, hi, hi_closed })
    }

    pub fn singleton(t: T) -> Self {
        Interval { lo: t.clone(), lo_closed: true, hi: Bound::Finite(t), hi_closed: true }
    }

    /// `[a, b]`
    pub fn closed(a: T, b: T) -> Option<Self> {
        Self::new(a, true, Bound::Finite(b), true)
    }

    /// `[a, ∞)`
    pub fn from(a: T) -> Option<Self> {
        Self::new(a, true, Bound::Infinity, false)
    }

    /// `[0, ∞)`
    pub fn all() -> Self {
        Interval { lo: T::zero(), lo_closed: true, hi: Bound::Infinity, hi_closed: false }
    }

    pub fn lo(&self) -> &T {
        &self.lo
    }
    pub fn lo_closed(&self) -> bool {
        self.lo_closed
    }
    pub fn hi(&self) -> &Bound<T> {
        &self.hi
    }
    pub fn hi_closed(&self) -> bool {
        self.hi_closed
    }

    pub fn is_singleton(&self) -> bool {
        matches!(&self.hi, Bound::Finite(h) if h.order(&self.lo) == Ordering::Equal)
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self.hi, Bound::Finite(_))
    }

    /// The timestamp of a singleton interval.
    pub fn point(&self) -> Option<&T> {
        if self.is_singleton() {
            Some(&self.lo)
        } else {
            None
        }
    }

    pub fn contains(&self, t: &T) -> bool {
        let above = match t.order(&self.lo) {
            Ordering::Less => false,
            Ordering::Equal => self.lo_closed,
            Ordering::Greater => true,
        };
        above
            && match &self.hi {
                Bound::Infinity => true,
                Bound::Finite(h) => match t.order(h) {
                    Ordering::Less => true,
                    Ordering::Equal => self.hi_closed,
                    Ordering::Greater => false,
                },
            }
    }

    fn lower_le(&self, other: &Self) -> bool {
        // lower bound of self is at or below lower bound of other
        match self.lo.order(&other.lo) {
            Ordering::Less => true,
            Ordering::Equal => self.lo_closed || !other.lo_closed,
            Ordering::Greater => false,
        }
    }

    fn upper_ge(&self, other: &Self) -> bool {
        match (&self.hi, &other.hi) {
            (Bound::Infinity, _) => true,
            (Bound::Finite(_), Bound::Infinity) => false,
            (Bound::Finite(a), Bound::Finite(b)) => match a.order(b) {
                Ordering::Greater => true,
                Ordering::Equal => self.hi_closed || !other.hi_closed,
                Ordering::Less => false,
            },
        }
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        other.lower_le(self) && other.upper_ge(self)
    }

    pub fn intersect(&self, other: &Self) -> Option<Self> {
        let (lo, lo_closed) = match self.lo.order(&other.lo) {
            Ordering::Less => (other.lo.clone(), other.lo_closed),
            Ordering::Greater => (self.lo.clone(), self.lo_closed),
            Ordering::Equal => (self.lo.clone(), self.lo_closed && other.lo_closed),
        };
        let (hi, hi_closed) = match (&self.hi, &other.hi) {
            (Bound::Infinity, _) => (other.hi.clone(), other.hi_closed),
            (_, Bound::Infinity) => (self.hi.clone(), self.hi_closed),
            (Bound::Finite(a), Bound::Finite(b)) => match a.order(b) {
                Ordering::Less => (self.hi.clone(), self.hi_closed),
                Ordering::Greater => (other.hi.clone(), other.hi_closed),
                Ordering::Equal => (self.hi.clone(), self.hi_closed && other.hi_closed),
            },
        };
        Self::new(lo, lo_closed, hi, hi_closed)
    }

    /// True iff every element of `self` is at most every element of `other`
    /// and the two are disjoint.
    pub fn precedes(&self, other: &Self) -> bool {
        match &self.hi {
            Bound::Infinity => false,
            Bound::Finite(h) => match h.order(&other.lo) {
                Ordering::Less => true,
                Ordering::Equal => !(self.hi_closed && other.lo_closed),
                Ordering::Greater => false,
            },
        }
    }

    /// `{a - b | a ∈ self, b ∈ other} ∩ [0, ∞)`, or `None` when empty.
    pub fn minus(&self, other: &Self) -> Option<Self> {
        let hi_closed = self.hi_closed && other.lo_closed;
        let hi = match &self.hi {
            Bound::Infinity => Bound::Infinity,
            Bound::Finite(h) => {
                let d = h.clone() - other.lo.clone();
                if d.order(&T::zero()) == Ordering::Less {
                    return None;
                }
                Bound::Finite(d)
            }
        };
        let (lo, lo_closed) = match &other.hi {
            Bound::Infinity => (T::zero(), true),
            Bound::Finite(oh) => {
                if self.lo.order(oh) == Ordering::Less {
                    (T::zero(), true)
                } else {
                    (self.lo.clone() - oh.clone(), self.lo_closed && other.hi_closed)
                }
            }
        };
        Self::new(lo, lo_closed, hi, hi_closed)
    }

    /// Splits around `t`: `(self ∩ [0,t), {t}, self ∩ (t,∞))`.
    pub fn split_at(&self, t: &T) -> (Option<Self>, Self, Option<Self>) {
        let left = Self::new(self.lo.clone(), self.lo_closed, Bound::Finite(t.clone()), false);
        let right = Self::new(t.clone(), false, self.hi.clone(), self.hi_closed);
        (left, Self::singleton(t.clone()), right)
    }
}

impl<T: Scalar> PartialEq for Interval<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Scalar> Eq for Interval<T> {}

impl<T: Scalar> Hash for Interval<T> {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.lo.hash_exact(state);
        self.lo_closed.hash(state);
        match &self.hi {
            Bound::Finite(h) => h.hash_exact(state),
            Bound::Infinity => state.write_u8(0xff),
        }
        self.hi_closed.hash(state);
    }
}

impl<T: Scalar> PartialOrd for Interval<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Orders by lower endpoint (closed before open), then upper endpoint. On
/// pairwise disjoint intervals this agrees with [`Interval::precedes`].
impl<T: Scalar> Ord for Interval<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.lo
            .order(&other.lo)
            .then_with(|| other.lo_closed.cmp(&self.lo_closed))
            .then_with(|| bound_order(&self.hi, &other.hi))
            .then_with(|| self.hi_closed.cmp(&other.hi_closed))
    }
}

/// Metric check of the difference `i - j` against `constraint`.
pub fn interval_mc<T: Scalar>(i: &Interval<T>, j: &Interval<T>, constraint: &Interval<T>) -> Truth3 {
    distance_mc(i.minus(j).as_ref(), constraint)
}

/// [`interval_mc`] on an already computed difference.
pub fn distance_mc<T: Scalar>(d: Option<&Interval<T>>, constraint: &Interval<T>) -> Truth3 {
    match d {
        None => Truth3::False,
        Some(d) if d.is_subset(constraint) => Truth3::True,
        Some(d) if d.intersect(constraint).is_none() => Truth3::False,
        Some(_) => Truth3::Unknown,
    }
}

/// Errors from reading rational literals.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RationalError {
    #[error("not a nonnegative decimal number: {0:?}")]
    Syntax(String),
    #[error("number out of range: {0:?}")]
    Range(String),
}

/// Parses `"3"`, `"3.25"`, `".5"` or `"7/3"` exactly. Negative values are
/// rejected.
pub fn parse_rational(s: &str) -> Result<Rational, RationalError> {
    let s = s.trim();
    let err = || RationalError::Syntax(s.to_string());
    let range = || RationalError::Range(s.to_string());
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = parse_digits(n).ok_or_else(err)?.ok_or_else(range)?;
        let d: i64 = parse_digits(d).ok_or_else(err)?.ok_or_else(range)?;
        if d == 0 {
            return Err(err());
        }
        return Ok(Rational::new(n, d));
    }
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    if int.is_empty() && frac.is_empty() {
        return Err(err());
    }
    let int_val = if int.is_empty() { Some(0) } else { parse_digits(int).ok_or_else(err)? };
    let int_val = int_val.ok_or_else(range)?;
    if frac.is_empty() {
        if s.ends_with('.') && int.is_empty() {
            return Err(err());
        }
        return Ok(Rational::from_integer(int_val));
    }
    let frac = frac.trim_end_matches('0');
    if frac.is_empty() {
        return Ok(Rational::from_integer(int_val));
    }
    if frac.len() > 15 {
        return Err(range());
    }
    let num = parse_digits(frac).ok_or_else(err)?.ok_or_else(range)?;
    let den = 10i64.pow(frac.len() as u32);
    let whole = int_val.checked_mul(den).and_then(|w| w.checked_add(num)).ok_or_else(range)?;
    Ok(Rational::new(whole, den))
}

/// `None` on syntax error, `Some(None)` on overflow.
fn parse_digits(s: &str) -> Option<Option<i64>> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    Some(s.parse::<i64>().ok())
}

/// Decimal rendering: integers get a trailing `.0`, terminating fractions are
/// written out, everything else as `n/d`.
pub fn format_rational(r: &Rational) -> String {
    let neg = r.is_negative();
    let r = r.abs();
    let (n, d) = (*r.numer(), *r.denom());
    let sign = if neg { "-" } else { "" };
    let mut rest = d;
    for p in [2, 5] {
        while rest % p == 0 {
            rest /= p;
        }
    }
    if rest != 1 {
        return format!("{sign}{n}/{d}");
    }
    let int = n / d;
    let mut rem = n % d;
    if rem == 0 {
        return format!("{sign}{int}.0");
    }
    let mut digits = String::new();
    while rem != 0 {
        // rem < d, and d divides a power of ten, so this terminates.
        let wide = rem as i128 * 10;
        digits.push(char::from(b'0' + (wide / d as i128) as u8));
        rem = (wide % d as i128) as i64;
    }
    format!("{sign}{int}.{digits}")
}

/// Lossy conversion for reporting and arrival-time arithmetic only.
pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

impl fmt::Display for Interval<Rational> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_singleton() {
            return write!(f, "{{{}}}", format_rational(&self.lo));
        }
        let open = if self.lo_closed { '[' } else { '(' };
        let close = if self.hi_closed { ']' } else { ')' };
        let hi = match &self.hi {
            Bound::Finite(h) => format_rational(h),
            Bound::Infinity => "*".to_string(),
        };
        write!(f, "{open}{},{hi}{close}", format_rational(&self.lo))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn iv(lo: i64, lc: bool, hi: Option<i64>, hc: bool) -> Interval {
        let hi = hi.map_or(Bound::Infinity, |h| Bound::Finite(r(h, 1)));
        Interval::new(r(lo, 1), lc, hi, hc).unwrap()
    }

    #[test]
    fn minus_examples() {
        let a = iv(2, true, Some(3), true);
        let b = iv(0, true, Some(1), true);
        assert_eq!(a.minus(&b), Some(iv(1, true, Some(3), true)));
        let s3 = Interval::singleton(r(3, 1));
        let s1 = Interval::singleton(r(1, 1));
        assert_eq!(s3.minus(&s1), Some(Interval::singleton(r(2, 1))));
        let c = iv(0, true, Some(3), false);
        assert_eq!(c.minus(&Interval::singleton(r(5, 1))), None);
    }

    #[test]
    fn mc_examples() {
        let c = iv(0, true, Some(3), true);
        let s3 = Interval::singleton(r(3, 1));
        let s1 = Interval::singleton(r(1, 1));
        assert_eq!(interval_mc(&s3, &s1, &c), Truth3::True);
        let tail = iv(3, false, None, false);
        assert_eq!(interval_mc(&tail, &s3, &c), Truth3::Unknown);
        let head = iv(0, true, Some(3), false);
        assert_eq!(interval_mc(&head, &Interval::singleton(r(5, 1)), &c), Truth3::False);
    }

    #[test]
    fn empty_intervals_rejected() {
        assert!(Interval::new(r(3, 1), true, Bound::Finite(r(2, 1)), true).is_none());
        assert!(Interval::new(r(2, 1), true, Bound::Finite(r(2, 1)), false).is_none());
        assert!(Interval::new(r(-1, 1), true, Bound::Infinity, false).is_none());
    }

    #[test]
    fn split_left_endpoint_gives_two_parts() {
        let i = iv(2, true, Some(5), false);
        let (l, t, rr) = i.split_at(&r(2, 1));
        assert!(l.is_none());
        assert!(t.is_singleton());
        assert_eq!(rr, Some(iv(2, false, Some(5), false)));
    }

    #[test]
    fn rational_text() {
        assert_eq!(parse_rational("3.00").unwrap(), parse_rational("3.0").unwrap());
        assert_eq!(parse_rational("0.25").unwrap(), r(1, 4));
        assert_eq!(parse_rational("7/3").unwrap(), r(7, 3));
        assert!(parse_rational("-1").is_err());
        assert!(parse_rational("1e3").is_err());
        assert!(parse_rational("").is_err());
        assert_eq!(format_rational(&r(3, 1)), "3.0");
        assert_eq!(format_rational(&r(21, 5)), "4.2");
        assert_eq!(format_rational(&r(1, 3)), "1/3");
        assert_eq!(format_rational(&r(1, 8)), "0.125");
    }

    #[test]
    fn display() {
        assert_eq!(iv(0, true, Some(3), false).to_string(), "[0.0,3.0)");
        assert_eq!(iv(3, false, None, false).to_string(), "(3.0,*)");
        assert_eq!(Interval::singleton(r(3, 1)).to_string(), "{3.0}");
    }
}
