//! Observations: finite words of interval-tagged letters describing partial
//! knowledge about a timed word, and the transformations that refine them.
//!
//! Observations are persistent: cloning is O(1) and every transformation
//! shares structure with its input.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use im::OrdMap;
use serde_json::json;

use crate::time::{format_rational, Interval};
use crate::value::Value;
use crate::Rational;

/// A tuple of a predicate's interpretation.
pub type Tuple = Vec<Value>;

/// One position of an observation. Facts and registers are only ever
/// defined on singleton intervals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Letter {
    pub interval: Interval,
    pub facts: BTreeMap<String, BTreeSet<Tuple>>,
    pub regs: BTreeMap<String, Value>,
}

impl Letter {
    pub fn empty(interval: Interval) -> Self {
        Letter { interval, facts: BTreeMap::new(), regs: BTreeMap::new() }
    }

    pub fn is_time_point(&self) -> bool {
        self.interval.is_singleton()
    }

    /// `self`'s knowledge is contained in `other`'s.
    pub fn below(&self, other: &Letter) -> bool {
        self.facts.iter().all(|(p, r)| other.facts.get(p) == Some(r))
            && self.regs.iter().all(|(k, v)| other.regs.get(k) == Some(v))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ObservationError {
    #[error("timestamp {0} is not inside a nonsingleton interval")]
    NotInGap(String),
    #[error("no letter with interval {0}")]
    NoSuchLetter(String),
    #[error("interval {0} is unbounded")]
    Unbounded(String),
    #[error("interval {0} is a singleton")]
    Singleton(String),
    #[error("timestamp {0} is not a time point")]
    NotTimePoint(String),
    #[error("{what} already defined at {ts}")]
    AlreadyDefined { what: String, ts: String },
}

/// The letters around a freshly split time point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub parent: Interval,
    pub left: Option<Interval>,
    pub point: Interval,
    pub right: Option<Interval>,
}

impl Split {
    pub fn parts(&self) -> impl Iterator<Item = &Interval> {
        self.left.iter().chain(std::iter::once(&self.point)).chain(self.right.iter())
    }
}

/// An observation word. Intervals are pairwise disjoint, strictly
/// increasing, and the last one is unbounded.
#[derive(Clone, PartialEq, Eq)]
pub struct Observation {
    letters: OrdMap<Interval, Letter>,
}

impl Default for Observation {
    fn default() -> Self {
        Self::initial()
    }
}

impl Observation {
    /// `[([0,∞), ∅, ∅)]`
    pub fn initial() -> Self {
        let mut letters = OrdMap::new();
        letters.insert(Interval::all(), Letter::empty(Interval::all()));
        Observation { letters }
    }

    /// Builds an observation from letters, validating the invariants.
    pub fn from_letters(letters: Vec<Letter>) -> Option<Self> {
        if letters.is_empty() || letters.last()?.interval.is_bounded() {
            return None;
        }
        for w in letters.windows(2) {
            if !w[0].interval.precedes(&w[1].interval) {
                return None;
            }
        }
        if letters.iter().any(|l| !l.is_time_point() && (!l.facts.is_empty() || !l.regs.is_empty())) {
            return None;
        }
        Some(Observation { letters: letters.into_iter().map(|l| (l.interval.clone(), l)).collect() })
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> impl Iterator<Item = &Letter> {
        self.letters.values()
    }

    pub fn intervals(&self) -> impl Iterator<Item = &Interval> {
        self.letters.keys()
    }

    pub fn letter(&self, iv: &Interval) -> Option<&Letter> {
        self.letters.get(iv)
    }

    pub fn first(&self) -> Option<&Letter> {
        self.letters.get_min().map(|(_, l)| l)
    }

    /// The letter whose interval contains `t`.
    pub fn containing(&self, t: &Rational) -> Option<&Letter> {
        let probe = Interval::singleton(*t);
        // `OrdMap::get_prev` and `get_next` misbehave in im 15; ranges do not.
        if let Some((_, l)) = self.letters.range(..=probe.clone()).next_back() {
            if l.interval.contains(t) {
                return Some(l);
            }
        }
        self.letters.range(probe..).next().map(|(_, l)| l).filter(|l| l.interval.contains(t))
    }

    /// The letter whose interval contains all of `iv`.
    pub fn enclosing(&self, iv: &Interval) -> Option<&Letter> {
        let before = self.letters.range(..=iv.clone()).next_back().map(|(_, l)| l);
        let after = self.letters.range(iv.clone()..).next().map(|(_, l)| l);
        before.into_iter().chain(after).find(|l| iv.is_subset(&l.interval))
    }

    pub fn time_point(&self, t: &Rational) -> Option<&Letter> {
        self.letters.get(&Interval::singleton(*t))
    }

    /// The interval following `iv`.
    pub fn next(&self, iv: &Interval) -> Option<&Interval> {
        self.letters.range((std::ops::Bound::Excluded(iv), std::ops::Bound::Unbounded)).next().map(|(k, _)| k)
    }

    /// The interval preceding `iv`.
    pub fn prev(&self, iv: &Interval) -> Option<&Interval> {
        self.letters.range(..iv).next_back().map(|(k, _)| k)
    }

    /// Letters from `iv` onward, in order.
    pub fn from_here<'a>(&'a self, iv: &Interval) -> impl Iterator<Item = &'a Letter> + 'a {
        self.letters.range(iv.clone()..).map(|(_, l)| l)
    }

    /// Letters from `iv` backward, in reverse order.
    pub fn back_from<'a>(&'a self, iv: &Interval) -> impl Iterator<Item = &'a Letter> + 'a {
        self.letters.range(..=iv.clone()).rev().map(|(_, l)| l)
    }

    pub fn time_points(&self) -> impl Iterator<Item = &Rational> {
        self.letters.keys().filter_map(|k| k.point())
    }

    /// Letters whose interval is a bounded nonsingleton.
    pub fn bounded_gaps(&self) -> impl Iterator<Item = &Interval> {
        self.letters.keys().filter(|k| !k.is_singleton() && k.is_bounded())
    }

    /// Splits the gap containing `t` in place.
    pub fn split_mut(&mut self, t: &Rational) -> Result<Split, ObservationError> {
        let parent = match self.containing(t) {
            Some(l) if !l.is_time_point() => l.interval.clone(),
            _ => return Err(ObservationError::NotInGap(format_rational(t))),
        };
        let (left, point, right) = parent.split_at(t);
        self.letters.remove(&parent);
        let split = Split { parent, left, point, right };
        for iv in split.parts() {
            self.letters.insert(iv.clone(), Letter::empty(iv.clone()));
        }
        Ok(split)
    }

    /// Transformation T1.
    pub fn split(&self, t: &Rational) -> Result<Observation, ObservationError> {
        let mut w = self.clone();
        w.split_mut(t)?;
        Ok(w)
    }

    /// Deletes the bounded gap `k` in place.
    pub fn remove_mut(&mut self, k: &Interval) -> Result<(), ObservationError> {
        if !self.letters.contains_key(k) {
            return Err(ObservationError::NoSuchLetter(k.to_string()));
        }
        if k.is_singleton() {
            return Err(ObservationError::Singleton(k.to_string()));
        }
        if !k.is_bounded() {
            return Err(ObservationError::Unbounded(k.to_string()));
        }
        self.letters.remove(k);
        Ok(())
    }

    /// Transformation T2.
    pub fn remove(&self, k: &Interval) -> Result<Observation, ObservationError> {
        let mut w = self.clone();
        w.remove_mut(k)?;
        Ok(w)
    }

    fn point_mut(&mut self, t: &Rational) -> Result<&mut Letter, ObservationError> {
        self.letters
            .get_mut(&Interval::singleton(*t))
            .ok_or_else(|| ObservationError::NotTimePoint(format_rational(t)))
    }

    pub fn set_facts_mut(&mut self, t: &Rational, pred: &str, rel: BTreeSet<Tuple>) -> Result<(), ObservationError> {
        let letter = self.point_mut(t)?;
        if letter.facts.contains_key(pred) {
            return Err(ObservationError::AlreadyDefined { what: format!("predicate {pred}"), ts: format_rational(t) });
        }
        letter.facts.insert(pred.to_string(), rel);
        Ok(())
    }

    /// Transformation T3 defining a predicate at a time point.
    pub fn set_facts(&self, t: &Rational, pred: &str, rel: BTreeSet<Tuple>) -> Result<Observation, ObservationError> {
        let mut w = self.clone();
        w.set_facts_mut(t, pred, rel)?;
        Ok(w)
    }

    pub fn set_register_mut(&mut self, t: &Rational, reg: &str, d: Value) -> Result<(), ObservationError> {
        let letter = self.point_mut(t)?;
        if letter.regs.contains_key(reg) {
            return Err(ObservationError::AlreadyDefined { what: format!("register {reg}"), ts: format_rational(t) });
        }
        letter.regs.insert(reg.to_string(), d);
        Ok(())
    }

    /// Transformation T3 defining a register at a time point.
    pub fn set_register(&self, t: &Rational, reg: &str, d: Value) -> Result<Observation, ObservationError> {
        let mut w = self.clone();
        w.set_register_mut(t, reg, d)?;
        Ok(w)
    }

    /// Applies one transformation in place. Returns the split description
    /// for T1 so callers can find the new letters.
    pub fn apply_mut(&mut self, t: &Transformation) -> Result<Option<Split>, ObservationError> {
        match t {
            Transformation::Split(ts) => self.split_mut(ts).map(Some),
            Transformation::Remove(k) => self.remove_mut(k).map(|_| None),
            Transformation::SetFacts { ts, pred, rel } => self.set_facts_mut(ts, pred, rel.clone()).map(|_| None),
            Transformation::SetRegister { ts, reg, value } => {
                self.set_register_mut(ts, reg, value.clone()).map(|_| None)
            }
        }
    }

    /// Drops every letter strictly before `iv`.
    pub fn prune_before(&mut self, iv: &Interval) {
        while let Some(first) = self.letters.get_min().map(|(k, _)| k.clone()).filter(|k| k < iv) {
            self.letters.remove(&first);
        }
    }

    /// JSON debug form: one object per letter.
    pub fn to_json(&self) -> serde_json::Value {
        let value = |v: &Value| match v {
            Value::Int(n) => json!(n),
            Value::Str(s) => json!(s.as_ref()),
        };
        serde_json::Value::Array(
            self.letters()
                .map(|l| {
                    let facts: serde_json::Map<String, serde_json::Value> = l
                        .facts
                        .iter()
                        .map(|(p, rel)| {
                            let tuples: Vec<serde_json::Value> =
                                rel.iter().map(|t| t.iter().map(value).collect()).collect();
                            (p.clone(), serde_json::Value::Array(tuples))
                        })
                        .collect();
                    let regs: serde_json::Map<String, serde_json::Value> =
                        l.regs.iter().map(|(k, v)| (k.clone(), value(v))).collect();
                    json!({ "interval": l.interval.to_string(), "facts": facts, "regs": regs })
                })
                .collect(),
        )
    }
}

/// One refinement step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Transformation {
    /// T1: split the gap containing the timestamp.
    Split(Rational),
    /// T2: drop a bounded gap.
    Remove(Interval),
    /// T3.1: define a predicate at a time point.
    SetFacts { ts: Rational, pred: String, rel: BTreeSet<Tuple> },
    /// T3.2: define a register at a time point.
    SetRegister { ts: Rational, reg: String, value: Value },
}

impl Transformation {
    /// JSON trace form.
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Transformation::Split(ts) => json!({ "op": "split", "ts": format_rational(ts) }),
            Transformation::Remove(k) => json!({ "op": "remove", "interval": k.to_string() }),
            Transformation::SetFacts { ts, pred, rel } => {
                let tuples: Vec<Vec<String>> = rel.iter().map(|t| t.iter().map(Value::to_wire).collect()).collect();
                json!({ "op": "facts", "ts": format_rational(ts), "pred": pred, "tuples": tuples })
            }
            Transformation::SetRegister { ts, reg, value } => {
                json!({ "op": "register", "ts": format_rational(ts), "reg": reg, "value": value.to_wire() })
            }
        }
    }
}

/// `u ⊑ v`: `v` is obtainable from `u` by transformations. Each letter of
/// `v` is matched to the unique letter of `u` containing its interval.
pub fn refines(u: &Observation, v: &Observation) -> bool {
    let mut matched_points = 0usize;
    for lv in v.letters() {
        let lu = match u.enclosing(&lv.interval) {
            Some(l) => l,
            None => return false,
        };
        if lu.is_time_point() {
            if !lv.is_time_point() || !lu.below(lv) {
                return false;
            }
            matched_points += 1;
        }
    }
    matched_points == u.time_points().count()
}

impl fmt::Debug for Observation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.letters().map(|l| (l.interval.to_string(), &l.facts, &l.regs))).finish()
    }
}

impl fmt::Display for Observation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_json())
    }
}
