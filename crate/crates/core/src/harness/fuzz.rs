//! Random formulas and random refinement sequences for differential
//! testing of the monitor against the reference evaluator.

use std::collections::BTreeSet;

use super::rng::SplitMix64;
use crate::formula::{normalize, CmpOp, Compiled, Formula, Term};
use crate::observation::{Observation, Transformation, Tuple};
use crate::time::{Bound, Interval};
use crate::value::Value;
use crate::Rational;

#[derive(Clone, Debug)]
pub struct FuzzConfig {
    /// Maximum operator nesting.
    pub depth: u32,
    /// Maximum number of freeze quantifiers.
    pub max_vars: usize,
    /// Number of distinct predicates (arities cycle through 0, 1, 2).
    pub preds: usize,
    /// Maximum number of transformations per sequence.
    pub steps: usize,
    /// Timestamps are multiples of `1 / grid`.
    pub grid: i64,
    /// Largest timestamp.
    pub horizon: i64,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig { depth: 4, max_vars: 2, preds: 3, steps: 15, grid: 4, horizon: 20 }
    }
}

const PREDS: [&str; 4] = ["p", "q", "r", "s"];
const REGS: [&str; 2] = ["a", "b"];
const DOMAIN: [i64; 2] = [0, 1];

impl FuzzConfig {
    fn arity(i: usize) -> usize {
        i % 3
    }

    fn grid_point(&self, rng: &mut SplitMix64, max: i64) -> Rational {
        Rational::new(rng.range(0, max * self.grid), self.grid)
    }

    fn interval(&self, rng: &mut SplitMix64) -> Interval {
        loop {
            let lo = self.grid_point(rng, 3);
            let hi = if rng.chance(0.3) { Bound::Infinity } else { Bound::Finite(lo + self.grid_point(rng, 3)) };
            let lo_closed = rng.chance(0.6);
            let hi_closed = matches!(hi, Bound::Finite(_)) && rng.chance(0.6);
            if let Some(i) = Interval::new(lo, lo_closed, hi, hi_closed) {
                return i;
            }
        }
    }

    fn term(&self, rng: &mut SplitMix64, scope: &[String]) -> Term {
        if !scope.is_empty() && rng.chance(0.7) {
            Term::Var(rng.pick(scope).clone())
        } else {
            Term::Const(Value::Int(*rng.pick(&DOMAIN)))
        }
    }

    fn atom(&self, rng: &mut SplitMix64, scope: &[String]) -> Formula {
        let roll = rng.unit();
        if roll < 0.05 {
            Formula::True
        } else if roll < 0.25 && !scope.is_empty() {
            let op = *rng.pick(&[CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le]);
            Formula::Cmp { op, lhs: Term::Var(rng.pick(scope).clone()), rhs: self.term(rng, scope) }
        } else {
            let i = rng.below(self.preds.min(PREDS.len()) as u64) as usize;
            let args = (0..Self::arity(i)).map(|_| self.term(rng, scope)).collect();
            Formula::pred(PREDS[i], args)
        }
    }

    fn formula_at(&self, rng: &mut SplitMix64, depth: u32, scope: &mut Vec<String>, freezes: &mut usize) -> Formula {
        if depth == 0 || rng.chance(0.2) {
            return self.atom(rng, scope);
        }
        let d = depth - 1;
        loop {
            match rng.below(7) {
                0 => return Formula::not(self.formula_at(rng, d, scope, freezes)),
                1 => {
                    let a = self.formula_at(rng, d, scope, freezes);
                    return Formula::or(a, self.formula_at(rng, d, scope, freezes));
                }
                2 if *freezes < self.max_vars => {
                    let var = format!("x{}", *freezes);
                    *freezes += 1;
                    let reg = *rng.pick(&REGS);
                    scope.push(var.clone());
                    let body = self.formula_at(rng, d, scope, freezes);
                    scope.pop();
                    return Formula::freeze(reg, &var, body);
                }
                3 => return Formula::prev(self.interval(rng), self.formula_at(rng, d, scope, freezes)),
                4 => return Formula::next(self.interval(rng), self.formula_at(rng, d, scope, freezes)),
                5 => {
                    let i = self.interval(rng);
                    let a = self.formula_at(rng, d, scope, freezes);
                    return Formula::since(i, a, self.formula_at(rng, d, scope, freezes));
                }
                6 => {
                    let i = self.interval(rng);
                    let a = self.formula_at(rng, d, scope, freezes);
                    return Formula::until(i, a, self.formula_at(rng, d, scope, freezes));
                }
                _ => {}
            }
        }
    }

    /// A closed random formula, compiled.
    pub fn formula(&self, rng: &mut SplitMix64) -> Compiled {
        let f = self.formula_at(rng, self.depth, &mut Vec::new(), &mut 0);
        Compiled::new(&normalize(&f).expect("generated formulas are closed"))
    }

    /// A valid refinement sequence starting from the initial observation,
    /// over the predicates and registers of `f`.
    pub fn sequence(&self, rng: &mut SplitMix64, f: &Compiled) -> Vec<Transformation> {
        let mut w = Observation::initial();
        let mut out = Vec::new();
        let preds: Vec<(&String, &usize)> = f.preds.iter().collect();
        let regs: Vec<&str> = f.registers().collect();
        let len = rng.range(1, self.steps as i64) as usize;
        let mut attempts = 0;
        while out.len() < len && attempts < 20 * len {
            attempts += 1;
            let t = match rng.below(10) {
                0..=3 => {
                    let ts = self.grid_point(rng, self.horizon);
                    match w.containing(&ts) {
                        Some(l) if !l.is_time_point() => Transformation::Split(ts),
                        _ => continue,
                    }
                }
                4 | 5 => {
                    let gaps: Vec<&Interval> = w.bounded_gaps().collect();
                    if gaps.is_empty() {
                        continue;
                    }
                    Transformation::Remove((*rng.pick(&gaps)).clone())
                }
                6..=8 => {
                    let open: Vec<(Rational, &String, usize)> = w
                        .letters()
                        .filter(|l| l.is_time_point())
                        .flat_map(|l| {
                            preds
                                .iter()
                                .filter(|(p, _)| !l.facts.contains_key(*p))
                                .map(|(p, n)| (*l.interval.lo(), *p, **n))
                        })
                        .collect();
                    if open.is_empty() {
                        continue;
                    }
                    let (ts, pred, arity) = *rng.pick(&open);
                    Transformation::SetFacts { ts, pred: pred.clone(), rel: random_relation(rng, arity) }
                }
                _ => {
                    let open: Vec<(Rational, &str)> = w
                        .letters()
                        .filter(|l| l.is_time_point())
                        .flat_map(|l| regs.iter().filter(|r| !l.regs.contains_key(**r)).map(|r| (*l.interval.lo(), *r)))
                        .collect();
                    if open.is_empty() {
                        continue;
                    }
                    let (ts, reg) = *rng.pick(&open);
                    Transformation::SetRegister { ts, reg: reg.to_string(), value: Value::Int(*rng.pick(&DOMAIN)) }
                }
            };
            w.apply_mut(&t).expect("generated transformations are valid");
            out.push(t);
        }
        out
    }

    /// Formula and sequence for fuzz case `seed`.
    pub fn case(&self, seed: u64) -> (Compiled, Vec<Transformation>) {
        let mut rng = SplitMix64::new(seed);
        let f = self.formula(&mut rng);
        let steps = self.sequence(&mut rng, &f);
        (f, steps)
    }
}

fn random_relation(rng: &mut SplitMix64, arity: usize) -> BTreeSet<Tuple> {
    let mut tuples: Vec<Tuple> = vec![Vec::new()];
    for _ in 0..arity {
        tuples = tuples
            .into_iter()
            .flat_map(|t| DOMAIN.iter().map(move |d| t.iter().cloned().chain([Value::Int(*d)]).collect()))
            .collect();
    }
    tuples.into_iter().filter(|_| rng.chance(0.5)).collect()
}
