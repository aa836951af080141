//! Reference evaluator for the three-valued semantics over observations.
//!
//! Slow and direct: temporal operators expand into their finite
//! disjunctions over all positions. Results are memoized per
//! (subformula, position, valuation restricted to free variables).

use std::collections::{BTreeMap, HashMap};

use crate::formula::{Compiled, Kind, SubId};
use crate::observation::{Letter, Observation};
use crate::time::{interval_mc, Interval};
use crate::truth::Truth3;
use crate::value::Valuation;
use crate::Rational;

/// Timestamps with their Boolean verdicts.
pub type VerdictSet = BTreeMap<Rational, bool>;

/// Truth of an atom at a letter. Predicates need a time point with the
/// predicate defined and all arguments bound; comparisons only need bound
/// arguments.
pub fn eval_atom(kind: &Kind, letter: Option<&Letter>, val: &Valuation) -> Truth3 {
    match kind {
        Kind::True => Truth3::True,
        Kind::Cmp { op, lhs, rhs } => match (lhs.resolve(val), rhs.resolve(val)) {
            (Some(a), Some(b)) => Truth3::from_bool(op.holds(a, b)),
            _ => Truth3::Unknown,
        },
        Kind::Pred { name, args } => {
            let Some(letter) = letter.filter(|l| l.is_time_point()) else {
                return Truth3::Unknown;
            };
            let Some(rel) = letter.facts.get(name) else {
                return Truth3::Unknown;
            };
            let tuple: Option<Vec<_>> = args.iter().map(|a| a.resolve(val).cloned()).collect();
            match tuple {
                Some(t) => Truth3::from_bool(rel.contains(&t)),
                None => Truth3::Unknown,
            }
        }
        _ => panic!("not an atom"),
    }
}

/// Evaluator bound to one formula and one observation.
pub struct Oracle<'a> {
    f: &'a Compiled,
    letters: Vec<&'a Letter>,
    memo: Option<HashMap<(SubId, usize, Valuation), Truth3>>,
}

impl<'a> Oracle<'a> {
    pub fn new(f: &'a Compiled, w: &'a Observation) -> Self {
        Oracle { f, letters: w.letters().collect(), memo: Some(HashMap::new()) }
    }

    /// Same semantics without the cache.
    pub fn unmemoized(f: &'a Compiled, w: &'a Observation) -> Self {
        Oracle { f, letters: w.letters().collect(), memo: None }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn position_of(&self, iv: &Interval) -> Option<usize> {
        self.letters.binary_search_by(|l| l.interval.cmp(iv)).ok()
    }

    fn tp(&self, i: usize) -> Truth3 {
        if self.letters[i].is_time_point() {
            Truth3::True
        } else {
            Truth3::Unknown
        }
    }

    fn mc(&self, a: usize, b: usize, c: &Interval) -> Truth3 {
        interval_mc(&self.letters[a].interval, &self.letters[b].interval, c)
    }

    /// Truth of subformula `sub` at position `i` under `val`.
    pub fn eval(&mut self, i: usize, sub: SubId, val: &Valuation) -> Truth3 {
        let val = val.restrict(&self.f.sub(sub).fv);
        if let Some(memo) = &self.memo {
            if let Some(v) = memo.get(&(sub, i, val.clone())) {
                return *v;
            }
        }
        let v = self.compute(i, sub, &val);
        if let Some(memo) = &mut self.memo {
            memo.insert((sub, i, val), v);
        }
        v
    }

    fn compute(&mut self, i: usize, sub: SubId, val: &Valuation) -> Truth3 {
        let f = self.f;
        let n = self.letters.len();
        match &f.sub(sub).kind {
            k @ (Kind::True | Kind::Pred { .. } | Kind::Cmp { .. }) => eval_atom(k, Some(self.letters[i]), val),
            Kind::Freeze { register, var, body } => {
                let inner = match self.letters[i].regs.get(register) {
                    Some(d) => val.with(*var, d.clone()),
                    None => val.without(*var),
                };
                self.eval(i, *body, &inner)
            }
            Kind::Not(a) => self.eval(i, *a, val).not(),
            Kind::Or(a, b) => {
                let l = self.eval(i, *a, val);
                if l == Truth3::True {
                    return l;
                }
                l.or(self.eval(i, *b, val))
            }
            Kind::Until(c, a, b) => {
                let mut acc = Truth3::False;
                let mut cont = Truth3::True;
                for j in i..n {
                    if cont != Truth3::False {
                        let anchor = self.tp(j).and(self.mc(j, i, c));
                        if anchor != Truth3::False {
                            acc = acc.or(anchor.and(cont).and(self.eval(j, *b, val)));
                            if acc == Truth3::True {
                                break;
                            }
                        }
                        let step = self.tp(j).implies(self.eval(j, *a, val));
                        cont = cont.and(step);
                    }
                }
                acc
            }
            Kind::Since(c, a, b) => {
                let mut acc = Truth3::False;
                let mut cont = Truth3::True;
                for j in (0..=i).rev() {
                    if cont != Truth3::False {
                        let anchor = self.tp(j).and(self.mc(i, j, c));
                        if anchor != Truth3::False {
                            acc = acc.or(anchor.and(cont).and(self.eval(j, *b, val)));
                            if acc == Truth3::True {
                                break;
                            }
                        }
                        let step = self.tp(j).implies(self.eval(j, *a, val));
                        cont = cont.and(step);
                    }
                }
                acc
            }
            Kind::Next(c, a) => {
                let mut acc = Truth3::False;
                if *c != Interval::singleton(Rational::from_integer(0)) {
                    let c0 = self.mc(i, i, c).and(self.eval(i, *a, val)).and(self.tp(i).not());
                    assert_ne!(c0, Truth3::True, "same-letter successor can never be certain");
                    acc = acc.or(c0);
                }
                if i + 1 < n {
                    let c1 = self.mc(i + 1, i, c).and(self.eval(i + 1, *a, val)).and(self.tp(i + 1)).and(self.tp(i));
                    acc = acc.or(c1);
                }
                if i + 2 < n {
                    let c2 = self.mc(i + 2, i, c).and(self.eval(i + 2, *a, val)).and(self.tp(i + 1).not());
                    assert_ne!(c2, Truth3::True, "skipping a gap can never be certain");
                    acc = acc.or(c2);
                }
                acc
            }
            Kind::Prev(c, a) => {
                let mut acc = Truth3::False;
                if *c != Interval::singleton(Rational::from_integer(0)) {
                    let c0 = self.mc(i, i, c).and(self.eval(i, *a, val)).and(self.tp(i).not());
                    assert_ne!(c0, Truth3::True, "same-letter predecessor can never be certain");
                    acc = acc.or(c0);
                }
                if i >= 1 {
                    let c1 = self.mc(i, i - 1, c).and(self.eval(i - 1, *a, val)).and(self.tp(i - 1)).and(self.tp(i));
                    acc = acc.or(c1);
                }
                if i >= 2 {
                    let c2 = self.mc(i, i - 2, c).and(self.eval(i - 2, *a, val)).and(self.tp(i - 1).not());
                    assert_ne!(c2, Truth3::True, "skipping a gap can never be certain");
                    acc = acc.or(c2);
                }
                acc
            }
        }
    }

    /// Truth at timestamp `t`; `⊥` unless `t` is a time point.
    pub fn eval_at(&mut self, t: &Rational, sub: SubId, val: &Valuation) -> Truth3 {
        match self.position_of(&Interval::singleton(*t)) {
            Some(i) => self.eval(i, sub, val),
            None => Truth3::Unknown,
        }
    }

    /// All Boolean verdicts of the whole formula.
    pub fn verdicts(&mut self) -> VerdictSet {
        let mut out = VerdictSet::new();
        for i in 0..self.letters.len() {
            if let Some(t) = self.letters[i].interval.point().copied() {
                if let Some(b) = self.eval(i, self.f.root(), &Valuation::empty()).to_bool() {
                    out.insert(t, b);
                }
            }
        }
        out
    }
}

/// Truth of the whole formula at position `i`.
pub fn eval(w: &Observation, i: usize, val: &Valuation, f: &Compiled) -> Truth3 {
    Oracle::new(f, w).eval(i, f.root(), val)
}

/// Truth of the whole formula at timestamp `t`.
pub fn eval_at(w: &Observation, t: &Rational, val: &Valuation, f: &Compiled) -> Truth3 {
    Oracle::new(f, w).eval_at(t, f.root(), val)
}

/// `{(τ, b) | eval_at(w, τ, ∅, φ) = b ∈ {t, f}}`
pub fn verdict_set(w: &Observation, f: &Compiled) -> VerdictSet {
    Oracle::new(f, w).verdicts()
}
