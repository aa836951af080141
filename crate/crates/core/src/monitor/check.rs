//! Whole-graph consistency check against the reference evaluator.

use super::graph::{Gate, Graph, Node, NodeId, Slot};
use crate::formula::{Kind, SubId};
use crate::observation::Observation;
use crate::oracle::Oracle;
use crate::time::{interval_mc, Interval};
use crate::truth::Truth3;
use crate::value::Valuation;
use crate::Rational;

struct Checker<'a> {
    g: &'a Graph,
    obs: &'a Observation,
    oracle: Oracle<'a>,
}

pub(super) fn check(g: &Graph, obs: &Observation) -> Result<(), String> {
    let mut c = Checker { g, obs, oracle: Oracle::new(&g.f, obs) };
    let mut ids: Vec<NodeId> = g.nodes.keys().copied().collect();
    ids.sort_unstable();
    for id in ids {
        c.node(id)?;
    }
    for (k, ids) in &g.watchers {
        for id in ids {
            let Some(n) = g.nodes.get(id) else { return Err(format!("deleted node watches {k}")) };
            if !Checker::watched(n).contains(&k) {
                return Err(format!("{} watches {k} without depending on it", c.describe(n)));
            }
        }
    }
    c.roots()
}

impl Checker<'_> {
    fn truth(&mut self, sub: SubId, iv: &Interval, val: &Valuation) -> Result<Truth3, String> {
        let i = self.oracle.position_of(iv).ok_or_else(|| format!("no letter {iv}"))?;
        Ok(self.oracle.eval(i, sub, val))
    }

    fn describe(&self, n: &Node) -> String {
        format!("({}, {}, {:?})", self.g.f.formula_of(n.sub), n.iv, n.val)
    }

    fn node(&mut self, id: NodeId) -> Result<(), String> {
        let g = self.g;
        let n = &g.nodes[&id];
        let name = self.describe(n);
        if g.index.get(&(n.sub, n.iv.clone(), n.val.clone())) != Some(&id) {
            return Err(format!("{name} missing from index"));
        }
        if !g.at.get(&n.iv).is_some_and(|s| s.contains(&id)) {
            return Err(format!("{name} missing from letter index"));
        }
        if n.val != n.val.restrict(&g.f.sub(n.sub).fv) {
            return Err(format!("{name} carries variables it does not use"));
        }
        let t = self.truth(n.sub, &n.iv, &n.val)?;
        if t != Truth3::Unknown {
            return Err(format!("{name} is stored but evaluates to {t}"));
        }
        if n.gate.truth() != Truth3::Unknown {
            return Err(format!("{name} has a Boolean gate"));
        }
        if g.gc && n.parents.is_empty() && !n.pinned {
            return Err(format!("{name} is unreachable"));
        }
        for p in &n.parents {
            let Some(pn) = g.nodes.get(p) else { return Err(format!("{name} has a dangling parent")) };
            if !pn.gate.slots().contains(&Slot::Node(id)) {
                return Err(format!("{name} lists a parent that does not read it"));
            }
        }
        if n.pinned != (n.sub == g.f.root() && n.val.is_empty()) {
            return Err(format!("{name} pinned incorrectly"));
        }
        for k in Self::watched(n) {
            if !g.watchers.get(k).is_some_and(|s| s.contains(&id)) {
                return Err(format!("{name} does not watch {k}"));
            }
        }
        for (sub, iv, val, slot) in self.inputs(n)? {
            self.input(id, &name, sub, &iv, &val, slot)?;
        }
        Ok(())
    }

    fn watched(n: &Node) -> Vec<&Interval> {
        match &n.gate {
            Gate::Step { window, .. } => window.iter().filter(|k| !k.is_singleton()).collect(),
            Gate::Window(w) => w.parts.keys().filter(|k| **k != n.iv && !k.is_singleton()).collect(),
            _ => Vec::new(),
        }
    }

    /// Checks one gate input against the child it stands for.
    fn input(&mut self, id: NodeId, name: &str, sub: SubId, iv: &Interval, val: &Valuation, slot: Slot) -> Result<(), String> {
        let val = val.restrict(&self.g.f.sub(sub).fv);
        match slot {
            Slot::Known(b) => {
                let t = self.truth(sub, iv, &val)?;
                if t != Truth3::from_bool(b) {
                    return Err(format!("{name} holds {b} for ({}, {iv}) which evaluates to {t}", self.g.f.formula_of(sub)));
                }
            }
            Slot::Node(c) => {
                let Some(cn) = self.g.nodes.get(&c) else { return Err(format!("{name} reads a deleted node")) };
                if (cn.sub, &cn.iv, &cn.val) != (sub, iv, &val) {
                    return Err(format!("{name} reads {} instead of ({sub}, {iv})", self.describe(cn)));
                }
                if !cn.parents.contains(&id) {
                    return Err(format!("{name} reads {} without an edge", self.describe(cn)));
                }
            }
        }
        Ok(())
    }

    /// The (sub, letter, valuation) each gate input must stand for, after
    /// checking the gate's static shape.
    fn inputs(&mut self, n: &Node) -> Result<Vec<(SubId, Interval, Valuation, Slot)>, String> {
        let obs = self.obs;
        let name = self.describe(n);
        let here = |sub: SubId, s: Slot| (sub, n.iv.clone(), n.val.clone(), s);
        let kind = &self.g.f.sub(n.sub).kind;
        Ok(match (kind, &n.gate) {
            (Kind::True | Kind::Pred { .. } | Kind::Cmp { .. }, Gate::Atom) => Vec::new(),
            (Kind::Not(a), Gate::Not(s)) => vec![here(*a, *s)],
            (Kind::Or(a, b), Gate::Or(l, r)) => vec![here(*a, *l), here(*b, *r)],
            (Kind::Freeze { register, var, body }, Gate::Freeze(s)) => {
                let val = match obs.letter(&n.iv).and_then(|l| l.regs.get(register)) {
                    Some(d) => n.val.with(*var, d.clone()),
                    None => n.val.without(*var),
                };
                vec![(*body, n.iv.clone(), val, *s)]
            }
            (Kind::Next(c, a) | Kind::Prev(c, a), Gate::Step { cands, window }) => {
                let future = matches!(kind, Kind::Next(..));
                let (expected, letters) = step_shape(obs, future, c, &n.iv);
                if *window != letters {
                    return Err(format!("{name} watches {window:?}, expected {letters:?}"));
                }
                let got: Vec<(Truth3, Interval)> = cands.iter().map(|c| (c.guard, c.at.clone())).collect();
                if got != expected {
                    return Err(format!("{name} has candidates {got:?}, expected {expected:?}"));
                }
                cands.iter().map(|c| (*a, c.at.clone(), n.val.clone(), c.slot)).collect()
            }
            (Kind::Until(c, a, b) | Kind::Since(c, a, b), Gate::Window(w)) => {
                let future = matches!(kind, Kind::Until(..));
                let letters: Vec<&Interval> = if future {
                    obs.from_here(&n.iv).map(|l| &l.interval).collect()
                } else {
                    obs.back_from(&n.iv).map(|l| &l.interval).collect()
                };
                let mut expected = Vec::new();
                for k in letters {
                    let (later, earlier) = if future { (k, &n.iv) } else { (&n.iv, k) };
                    if super::graph::beyond(later, earlier, c) {
                        break;
                    }
                    if k.is_singleton() && self.inert(*a, *b, c, k, later, earlier, &n.val)? {
                        continue;
                    }
                    expected.push(k.clone());
                    if w.parts.get(k).is_none_or(|p| p.blocks()) {
                        break;
                    }
                }
                let mut got: Vec<Interval> = w.parts.keys().cloned().collect();
                if !future {
                    got.reverse();
                }
                if got != expected {
                    return Err(format!("{name} has parts {got:?}, expected {expected:?}"));
                }
                let mut out = Vec::new();
                for (k, p) in &w.parts {
                    let (later, earlier) = if future { (k, &n.iv) } else { (&n.iv, k) };
                    let mc = interval_mc(later, earlier, c);
                    if p.mc != mc || p.tp != k.is_singleton() {
                        return Err(format!("{name} part {k} has stale metric or time-point flags"));
                    }
                    out.push((*a, k.clone(), n.val.clone(), p.alpha));
                    if mc != Truth3::False {
                        out.push((*b, k.clone(), n.val.clone(), p.beta));
                    }
                }
                out
            }
            _ => return Err(format!("{name} has a gate of the wrong shape")),
        })
    }

    /// A time point a window may omit: the left operand holds there and the
    /// right one cannot anchor.
    #[allow(clippy::too_many_arguments)]
    fn inert(&mut self, a: SubId, b: SubId, c: &Interval, k: &Interval, later: &Interval, earlier: &Interval, val: &Valuation) -> Result<bool, String> {
        let restrict = |s: SubId| val.restrict(&self.g.f.sub(s).fv);
        let (va, vb) = (restrict(a), restrict(b));
        if self.truth(a, k, &va)? != Truth3::True {
            return Ok(false);
        }
        Ok(interval_mc(later, earlier, c) == Truth3::False || self.truth(b, k, &vb)? == Truth3::False)
    }

    /// Every time point or gap whose root value is unknown has a root node.
    fn roots(&mut self) -> Result<(), String> {
        let root = self.g.f.root();
        for l in self.obs.letters() {
            let t = self.truth(root, &l.interval, &Valuation::empty())?;
            let present = self.g.index.contains_key(&(root, l.interval.clone(), Valuation::empty()));
            if (t == Truth3::Unknown) != present {
                return Err(format!("root at {} evaluates to {t} but node present = {present}", l.interval));
            }
        }
        Ok(())
    }
}

/// Expected non-false candidates of a NEXT (`future`) or PREV gate at `iv`,
/// and the neighbouring letters they depend on.
fn step_shape(obs: &Observation, future: bool, c: &Interval, iv: &Interval) -> (Vec<(Truth3, Interval)>, Vec<Interval>) {
    let tp = |k: &Interval| if k.is_singleton() { Truth3::True } else { Truth3::Unknown };
    let neighbour = |k: &Interval| if future { obs.next(k).cloned() } else { obs.prev(k).cloned() };
    let mc = |k: &Interval| if future { interval_mc(k, iv, c) } else { interval_mc(iv, k, c) };
    let k1 = neighbour(iv);
    let k2 = k1.as_ref().and_then(neighbour);
    let mut out = Vec::new();
    if *c != Interval::singleton(Rational::from_integer(0)) {
        out.push((mc(iv).and(tp(iv).not()), iv.clone()));
    }
    if let Some(k1) = &k1 {
        out.push((mc(k1).and(tp(iv)).and(tp(k1)), k1.clone()));
        if let Some(k2) = &k2 {
            out.push((mc(k2).and(tp(k1).not()), k2.clone()));
        }
    }
    out.retain(|(g, _)| *g != Truth3::False);
    (out, k1.into_iter().chain(k2).collect())
}
