//! The gate graph: one node per relevant (subformula, letter, valuation)
//! whose value is still unknown, with edges from each node to the gates
//! that read it.
//!
//! Nodes are created on demand from the current observation. A node whose
//! value becomes Boolean hands the value to its parents and disappears; a
//! node nobody reads any more is collected. Root nodes are pinned.

use std::collections::BTreeMap;
use std::sync::Arc;

use rustc_hash::{FxHashMap, FxHashSet};

use super::window::{Gather, Part, Window};
use crate::formula::{Compiled, Kind, SubId};
use crate::observation::{Observation, Split};
use crate::oracle::eval_atom;
use crate::time::{distance_mc, interval_mc, Bound, Interval};
use crate::truth::Truth3;
use crate::value::{Valuation, Value};
use crate::Rational;

pub type NodeId = u64;

pub(crate) type NodeKey = (SubId, Interval, Valuation);

/// A gate input: either a settled Boolean or a live node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Slot {
    Known(bool),
    Node(NodeId),
}

impl Slot {
    pub fn truth(self) -> Truth3 {
        match self {
            Slot::Known(b) => Truth3::from_bool(b),
            Slot::Node(_) => Truth3::Unknown,
        }
    }
}

/// One disjunct of a NEXT or PREV gate: a static guard built from the
/// metric and time-point conditions, and the operand at letter `at`.
#[derive(Clone, Debug)]
pub(crate) struct Cand {
    pub guard: Truth3,
    pub at: Interval,
    pub slot: Slot,
}

#[derive(Clone, Debug)]
pub(crate) enum Gate {
    Atom,
    Not(Slot),
    Or(Slot, Slot),
    Freeze(Slot),
    Step { cands: Vec<Cand>, window: Vec<Interval> },
    Window(Box<Window>),
}

impl Gate {
    pub fn slots(&self) -> Vec<Slot> {
        match self {
            Gate::Atom => Vec::new(),
            Gate::Not(s) | Gate::Freeze(s) => vec![*s],
            Gate::Or(a, b) => vec![*a, *b],
            Gate::Step { cands, .. } => cands.iter().map(|c| c.slot).collect(),
            Gate::Window(w) => w.slots().collect(),
        }
    }

    pub fn truth(&self) -> Truth3 {
        match self {
            Gate::Atom => Truth3::Unknown,
            Gate::Not(s) => s.truth().not(),
            Gate::Or(a, b) => a.truth().or(b.truth()),
            Gate::Freeze(s) => s.truth(),
            Gate::Step { cands, .. } => {
                cands.iter().fold(Truth3::False, |acc, c| acc.or(c.guard.and(c.slot.truth())))
            }
            Gate::Window(w) => w.truth(),
        }
    }

    /// Gaps other than the node's own whose split or removal reshapes this
    /// gate. Time points never change shape, so they are not watched.
    fn watched<'a>(&'a self, own: &'a Interval) -> Vec<&'a Interval> {
        match self {
            Gate::Step { window, .. } => window.iter().filter(|k| !k.is_singleton()).collect(),
            Gate::Window(w) => w.parts.keys().filter(|k| *k != own && !k.is_singleton()).collect(),
            _ => Vec::new(),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Node {
    pub sub: SubId,
    pub iv: Interval,
    pub val: Valuation,
    pub parents: FxHashSet<NodeId>,
    pub pinned: bool,
    pub gate: Gate,
}

/// True if every distance between the two letters exceeds the constraint,
/// and so does every distance for letters further away.
pub(crate) fn beyond(later: &Interval, earlier: &Interval, c: &Interval) -> bool {
    later.minus(earlier).is_some_and(|d| distance_beyond(&d, c))
}

fn distance_beyond(d: &Interval, c: &Interval) -> bool {
    match c.hi() {
        Bound::Infinity => false,
        Bound::Finite(h) => d.lo() > h || (d.lo() == h && !(d.lo_closed() && c.hi_closed())),
    }
}

fn tp(k: &Interval) -> Truth3 {
    if k.is_singleton() {
        Truth3::True
    } else {
        Truth3::Unknown
    }
}

pub(crate) struct Graph {
    pub f: Arc<Compiled>,
    pub nodes: FxHashMap<NodeId, Node>,
    pub index: FxHashMap<NodeKey, NodeId>,
    pub at: BTreeMap<Interval, FxHashSet<NodeId>>,
    pub watchers: FxHashMap<Interval, FxHashSet<NodeId>>,
    pub gc: bool,
    /// Verdicts produced since the last drain.
    pub out: Vec<(Rational, bool)>,
    next_id: NodeId,
    /// The split being processed; windows at its pieces reuse the parts of
    /// the window at its parent.
    split_hint: Option<Split>,
    /// Slots built at the pieces of the split being processed, shared by
    /// every gate that watched the parent.
    piece_slots: Vec<(SubId, Interval, Valuation, Slot)>,
    memo: bool,
}

impl Graph {
    pub fn new(f: Arc<Compiled>, gc: bool) -> Self {
        Graph {
            f,
            nodes: FxHashMap::default(),
            index: FxHashMap::default(),
            at: BTreeMap::new(),
            watchers: FxHashMap::default(),
            gc,
            out: Vec::new(),
            next_id: 0,
            split_hint: None,
            piece_slots: Vec::new(),
            memo: false,
        }
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.values().map(|n| n.parents.len()).sum()
    }

    // ---- node lifecycle -------------------------------------------------

    fn watch(&mut self, id: NodeId, k: &Interval) {
        if !k.is_singleton() {
            self.watchers.entry(k.clone()).or_default().insert(id);
        }
    }

    fn unwatch(&mut self, id: NodeId, k: &Interval) {
        if let Some(set) = self.watchers.get_mut(k) {
            set.remove(&id);
            if set.is_empty() {
                self.watchers.remove(k);
            }
        }
    }

    fn link(&mut self, child: Slot, parent: NodeId) {
        if let Slot::Node(c) = child {
            self.nodes.get_mut(&c).expect("live child").parents.insert(parent);
        }
    }

    fn unlink(&mut self, child: Slot, parent: NodeId) {
        if let Slot::Node(c) = child {
            if let Some(n) = self.nodes.get_mut(&c) {
                n.parents.remove(&parent);
                self.collect(c);
            }
        }
    }

    /// Drops a freshly built slot that ended up unused.
    fn discard(&mut self, s: Slot) {
        if let Slot::Node(id) = s {
            self.collect(id);
        }
    }

    /// Deletes `id` if nothing reads it.
    fn collect(&mut self, id: NodeId) {
        let orphan = self.nodes.get(&id).is_some_and(|n| n.parents.is_empty() && !n.pinned);
        if orphan && self.gc {
            let node = self.unregister(id);
            for s in node.gate.slots() {
                self.unlink(s, id);
            }
        }
    }

    /// Removes `id` from every index and returns it.
    fn unregister(&mut self, id: NodeId) -> Node {
        let node = self.nodes.remove(&id).expect("live node");
        self.index.remove(&(node.sub, node.iv.clone(), node.val.clone()));
        if let Some(set) = self.at.get_mut(&node.iv) {
            set.remove(&id);
            if set.is_empty() {
                self.at.remove(&node.iv);
            }
        }
        for k in node.gate.watched(&node.iv) {
            self.unwatch(id, k);
        }
        node
    }

    /// Stores a new node unless its gate is already Boolean.
    fn admit(&mut self, sub: SubId, iv: &Interval, val: Valuation, gate: Gate) -> Slot {
        match gate.truth().to_bool() {
            Some(b) => {
                for s in gate.slots() {
                    self.discard(s);
                }
                Slot::Known(b)
            }
            None => {
                let id = self.next_id;
                self.next_id += 1;
                for s in gate.slots() {
                    self.link(s, id);
                }
                let node = Node { sub, iv: iv.clone(), val: val.clone(), parents: FxHashSet::default(), pinned: false, gate };
                for k in node.gate.watched(iv) {
                    self.watch(id, k);
                }
                self.index.insert((sub, iv.clone(), val), id);
                self.at.entry(iv.clone()).or_default().insert(id);
                self.nodes.insert(id, node);
                Slot::Node(id)
            }
        }
    }

    // ---- construction ---------------------------------------------------

    /// The gate input for `sub` at letter `iv` under `val`, creating nodes
    /// as needed.
    pub fn build(&mut self, obs: &Observation, sub: SubId, iv: &Interval, val: &Valuation) -> Slot {
        let val = val.restrict(&self.f.sub(sub).fv);
        if !self.memo {
            return self.build_fresh(obs, sub, iv, val);
        }
        let hit = self.piece_slots.iter().find(|(s, k, v, _)| *s == sub && k == iv && *v == val).map(|e| e.3);
        match hit {
            Some(Slot::Node(id)) if !self.nodes.contains_key(&id) => {}
            Some(slot) => return slot,
            None => {}
        }
        let slot = self.build_fresh(obs, sub, iv, val.clone());
        self.piece_slots.retain(|(s, k, v, _)| !(*s == sub && k == iv && *v == val));
        self.piece_slots.push((sub, iv.clone(), val, slot));
        slot
    }

    fn build_fresh(&mut self, obs: &Observation, sub: SubId, iv: &Interval, val: Valuation) -> Slot {
        let f = Arc::clone(&self.f);
        let entry = f.sub(sub);
        let atom = matches!(entry.kind, Kind::True | Kind::Pred { .. } | Kind::Cmp { .. });
        // A settled atom never has a node, so evaluate before the lookup.
        if atom {
            if let Some(b) = eval_atom(&entry.kind, obs.letter(iv), &val).to_bool() {
                return Slot::Known(b);
            }
        }
        if let Some(&id) = self.index.get(&(sub, iv.clone(), val.clone())) {
            return Slot::Node(id);
        }
        match &entry.kind {
            Kind::True | Kind::Pred { .. } | Kind::Cmp { .. } => self.admit(sub, iv, val, Gate::Atom),
            Kind::Not(a) => match self.build(obs, *a, iv, &val) {
                Slot::Known(b) => Slot::Known(!b),
                s => self.admit(sub, iv, val, Gate::Not(s)),
            },
            Kind::Or(a, b) => {
                let l = self.build(obs, *a, iv, &val);
                if l == Slot::Known(true) {
                    return l;
                }
                let r = self.build(obs, *b, iv, &val);
                self.admit(sub, iv, val, Gate::Or(l, r))
            }
            Kind::Freeze { register, var, body } => {
                let inner = self.freeze_valuation(obs, iv, &val, register, *var);
                match self.build(obs, *body, iv, &inner) {
                    Slot::Known(b) => Slot::Known(b),
                    s => self.admit(sub, iv, val, Gate::Freeze(s)),
                }
            }
            Kind::Next(c, a) => {
                let (cands, window) = self.step_cands(obs, true, c, *a, iv, &val);
                self.admit(sub, iv, val, Gate::Step { cands, window })
            }
            Kind::Prev(c, a) => {
                let (cands, window) = self.step_cands(obs, false, c, *a, iv, &val);
                self.admit(sub, iv, val, Gate::Step { cands, window })
            }
            Kind::Until(c, a, b) => self.build_window(obs, sub, Window::new(true, *a, *b, c.clone()), iv, val),
            Kind::Since(c, a, b) => self.build_window(obs, sub, Window::new(false, *a, *b, c.clone()), iv, val),
        }
    }

    fn freeze_valuation(&self, obs: &Observation, iv: &Interval, val: &Valuation, register: &str, var: u16) -> Valuation {
        match obs.letter(iv).and_then(|l| l.regs.get(register)) {
            Some(d) => val.with(var, d.clone()),
            None => val.without(var),
        }
    }

    fn step_cands(
        &mut self,
        obs: &Observation,
        future: bool,
        c: &Interval,
        a: SubId,
        iv: &Interval,
        val: &Valuation,
    ) -> (Vec<Cand>, Vec<Interval>) {
        let neighbour = |k: &Interval| if future { obs.next(k).cloned() } else { obs.prev(k).cloned() };
        let mc = |k: &Interval| if future { interval_mc(k, iv, c) } else { interval_mc(iv, k, c) };
        let k1 = neighbour(iv);
        let k2 = k1.as_ref().and_then(neighbour);
        let mut guards: Vec<(Truth3, Interval)> = Vec::with_capacity(3);
        if *c != Interval::singleton(Rational::from_integer(0)) {
            guards.push((mc(iv).and(tp(iv).not()), iv.clone()));
        }
        if let Some(k1) = &k1 {
            guards.push((mc(k1).and(tp(iv)).and(tp(k1)), k1.clone()));
            if let Some(k2) = &k2 {
                guards.push((mc(k2).and(tp(k1).not()), k2.clone()));
            }
        }
        let mut cands = Vec::with_capacity(guards.len());
        for (guard, at) in guards {
            if guard == Truth3::False {
                continue;
            }
            let slot = self.build(obs, a, &at, val);
            let done = guard.and(slot.truth()) == Truth3::True;
            cands.push(Cand { guard, at, slot });
            if done {
                break;
            }
        }
        let window = k1.into_iter().chain(k2).collect();
        (cands, window)
    }

    /// Builds the part for letter `k` of a window gate at `own`.
    fn window_part(&mut self, obs: &Observation, w: &Window, k: &Interval, mc: Truth3, val: &Valuation) -> Part {
        let beta = if mc == Truth3::False { Slot::Known(false) } else { self.build(obs, w.beta, k, val) };
        let alpha = self.build(obs, w.alpha, k, val);
        Part { mc, tp: k.is_singleton(), alpha, beta }
    }

    /// The metric check of letter `k` for a window at `own`, or `None` when
    /// `k` and everything past it are out of reach.
    fn reach(w: &Window, own: &Interval, k: &Interval) -> Option<Truth3> {
        let d = if w.future { k.minus(own) } else { own.minus(k) };
        match &d {
            Some(d) if distance_beyond(d, &w.constraint) => None,
            _ => Some(distance_mc(d.as_ref(), &w.constraint)),
        }
    }

    fn build_window(&mut self, obs: &Observation, sub: SubId, mut w: Window, iv: &Interval, val: Valuation) -> Slot {
        if let Some(inherited) = self.inherited_parts(sub, iv, &val, w.future) {
            return self.derive_window(obs, sub, w, iv, val, inherited);
        }
        let reachable = |l: &crate::observation::Letter| Self::reach(&w, iv, &l.interval).map(|mc| (l.interval.clone(), mc));
        let letters: Vec<(Interval, Truth3)> = if w.future {
            obs.from_here(iv).map_while(reachable).collect()
        } else {
            obs.back_from(iv).map_while(reachable).collect()
        };
        let mut gather = Gather::default();
        for (k, mc) in letters {
            let part = self.window_part(obs, &w, &k, mc, &val);
            if gather.push(k, part) {
                break;
            }
        }
        w.fill(gather);
        self.admit(sub, iv, val, Gate::Window(Box::new(w)))
    }

    /// Parts of the parent gap's window lying beyond the parent, when `iv`
    /// is a piece of the split in progress and that window is live.
    fn inherited_parts(&self, sub: SubId, iv: &Interval, val: &Valuation, future: bool) -> Option<Vec<(Interval, Part)>> {
        let split = self.split_hint.as_ref()?;
        if !split.parts().any(|k| k == iv) {
            return None;
        }
        let id = self.index.get(&(sub, split.parent.clone(), val.clone()))?;
        let Gate::Window(pw) = &self.nodes[id].gate else { return None };
        let clone = |(k, p): (&Interval, &Part)| (k.clone(), p.clone());
        Some(if future {
            pw.parts.range((std::ops::Bound::Excluded(&split.parent), std::ops::Bound::Unbounded)).map(clone).collect()
        } else {
            pw.parts.range(..&split.parent).rev().map(clone).collect()
        })
    }

    /// Builds the window at a piece of a split gap. The piece is contained in
    /// the gap, so its reach ends no later than the gap's: past the split
    /// pieces, every part is one of the gap window's with the same slots.
    /// Only metric checks that were undecided for the gap can change.
    fn derive_window(
        &mut self,
        obs: &Observation,
        sub: SubId,
        mut w: Window,
        iv: &Interval,
        val: Valuation,
        inherited: Vec<(Interval, Part)>,
    ) -> Slot {
        let split = self.split_hint.clone().expect("split in progress");
        let mut pieces: Vec<&Interval> = split.parts().filter(|k| !w.before(k, iv)).collect();
        if !w.future {
            pieces.reverse();
        }
        let mut gather = Gather::default();
        let mut done = false;
        for k in pieces {
            let Some(mc) = Self::reach(&w, iv, k) else {
                done = true;
                break;
            };
            let part = self.window_part(obs, &w, k, mc, &val);
            if gather.push(k.clone(), part) {
                done = true;
                break;
            }
        }
        if !done {
            for (k, p) in inherited {
                let mc = match p.mc {
                    Truth3::True => Truth3::True,
                    _ => match Self::reach(&w, iv, &k) {
                        Some(mc) => mc,
                        None => break,
                    },
                };
                let beta = if mc == Truth3::False { Slot::Known(false) } else { p.beta };
                if gather.push(k, Part { mc, beta, ..p }) {
                    break;
                }
            }
        }
        w.fill(gather);
        self.admit(sub, iv, val, Gate::Window(Box::new(w)))
    }

    /// Root node for letter `iv`; emits the verdict at once for a time point
    /// whose value is already settled.
    pub fn ensure_root(&mut self, obs: &Observation, iv: &Interval) {
        let root = self.f.root();
        match self.build(obs, root, iv, &Valuation::empty()) {
            Slot::Node(id) => self.nodes.get_mut(&id).expect("root").pinned = true,
            Slot::Known(b) => {
                if let Some(t) = iv.point() {
                    self.out.push((*t, b));
                }
            }
        }
    }

    // ---- truth propagation ----------------------------------------------

    /// `id` has settled to `b`: hand the value to every reader.
    fn resolve(&mut self, id: NodeId, b: bool) {
        let node = self.unregister(id);
        for s in node.gate.slots() {
            self.unlink(s, id);
        }
        if node.sub == self.f.root() {
            if let Some(t) = node.iv.point() {
                self.out.push((*t, b));
            }
        }
        let mut parents: Vec<NodeId> = node.parents.into_iter().collect();
        parents.sort_unstable();
        for p in parents {
            self.feed(p, id, node.sub, &node.iv, b);
        }
    }

    /// Substitutes the settled child `child` into gate `p`.
    fn feed(&mut self, p: NodeId, child: NodeId, child_sub: SubId, child_iv: &Interval, b: bool) {
        let Some(node) = self.nodes.get_mut(&p) else { return };
        let from = Slot::Node(child);
        let to = Slot::Known(b);
        let mut dropped: Vec<(Interval, Part)> = Vec::new();
        match &mut node.gate {
            Gate::Atom => unreachable!("atoms have no inputs"),
            Gate::Not(s) | Gate::Freeze(s) => {
                if *s == from {
                    *s = to;
                }
            }
            Gate::Or(l, r) => {
                for s in [l, r] {
                    if *s == from {
                        *s = to;
                    }
                }
            }
            Gate::Step { cands, .. } => {
                for c in cands.iter_mut().filter(|c| c.slot == from) {
                    c.slot = to;
                }
            }
            Gate::Window(w) => {
                if w.set_slot(child_iv, child_sub, to) && w.blocks_at(child_iv) {
                    dropped = w.cut_after(child_iv);
                }
            }
        }
        let own = node.iv.clone();
        for (k, part) in dropped {
            if k != own {
                self.unwatch(p, &k);
            }
            for s in part.slots() {
                self.unlink(s, p);
            }
        }
        self.settle(p);
    }

    /// Resolves `id` if its gate has become Boolean.
    fn settle(&mut self, id: NodeId) {
        let Some(node) = self.nodes.get(&id) else { return };
        if let Some(b) = node.gate.truth().to_bool() {
            self.resolve(id, b);
        }
    }

    // ---- observation updates --------------------------------------------

    fn sorted(set: Option<&FxHashSet<NodeId>>) -> Vec<NodeId> {
        let mut v: Vec<NodeId> = set.map(|s| s.iter().copied().collect()).unwrap_or_default();
        v.sort_unstable();
        v
    }

    /// Deletes every node at `k` after all outside readers have let go.
    fn drop_letter(&mut self, k: &Interval) {
        for id in Self::sorted(self.at.get(k)) {
            if !self.nodes.contains_key(&id) {
                continue;
            }
            let node = self.unregister(id);
            debug_assert!(
                node.parents.iter().all(|p| self.nodes.get(p).is_none_or(|n| n.iv == *k)),
                "node at {k} still read from another letter"
            );
            for s in node.gate.slots() {
                self.unlink(s, id);
            }
        }
        // Readers at `k` itself are gone; children elsewhere may be orphans.
        self.at.remove(k);
        debug_assert!(!self.watchers.contains_key(k), "letter {k} still watched");
    }

    /// Recomputes the candidates of a NEXT or PREV gate after a neighbour
    /// changed.
    fn rebuild_step(&mut self, obs: &Observation, id: NodeId) {
        let node = &self.nodes[&id];
        let (sub, iv, val) = (node.sub, node.iv.clone(), node.val.clone());
        let (future, c, a) = match &self.f.sub(sub).kind {
            Kind::Next(c, a) => (true, c.clone(), *a),
            Kind::Prev(c, a) => (false, c.clone(), *a),
            _ => unreachable!("step gate on a non-step subformula"),
        };
        let (cands, window) = self.step_cands(obs, future, &c, a, &iv, &val);
        let fresh = Gate::Step { cands, window };
        let new_slots = fresh.slots();
        let new_watch: Vec<Interval> = fresh.watched(&iv).into_iter().cloned().collect();
        let node = self.nodes.get_mut(&id).expect("live node");
        let old = std::mem::replace(&mut node.gate, fresh);
        let old_slots = old.slots();
        for s in &new_slots {
            if !old_slots.contains(s) {
                self.link(*s, id);
            }
        }
        for k in old.watched(&iv) {
            if !new_watch.contains(k) {
                self.unwatch(id, k);
            }
        }
        for k in &new_watch {
            self.watch(id, k);
        }
        for s in old_slots {
            if !new_slots.contains(&s) {
                self.unlink(s, id);
            }
        }
        self.settle(id);
    }

    /// Replaces the part for the split letter with parts for its pieces.
    fn refine_window(&mut self, obs: &Observation, id: NodeId, split: &Split) {
        let node = self.nodes.get_mut(&id).expect("live node");
        let (iv, val) = (node.iv.clone(), node.val.clone());
        let Gate::Window(w) = &mut node.gate else { unreachable!("window watcher without window gate") };
        let Some(old) = w.remove(&split.parent) else { return };
        let shape = Window::new(w.future, w.alpha, w.beta, w.constraint.clone());
        self.unwatch(id, &split.parent);
        let mut pieces: Vec<&Interval> = split.parts().collect();
        if !shape.future {
            pieces.reverse();
        }
        let mut fresh: Vec<(Interval, Part)> = Vec::new();
        for k in pieces {
            let Some(mc) = Self::reach(&shape, &iv, k) else { break };
            let part = self.window_part(obs, &shape, k, mc, &val);
            let blocks = part.blocks();
            fresh.push((k.clone(), part));
            if blocks {
                break;
            }
        }
        let mut dropped = Vec::new();
        for (k, part) in &fresh {
            for s in part.slots() {
                self.link(s, id);
            }
            self.watch(id, k);
        }
        let Gate::Window(w) = &mut self.nodes.get_mut(&id).expect("live node").gate else { unreachable!() };
        for (k, part) in fresh {
            let blocks = part.blocks();
            w.insert(k.clone(), part);
            if blocks {
                dropped = w.cut_after(&k);
                break;
            }
        }
        for (k, part) in dropped {
            self.unwatch(id, &k);
            for s in part.slots() {
                self.unlink(s, id);
            }
        }
        for s in old.slots() {
            self.unlink(s, id);
        }
        self.settle(id);
    }

    /// T1: the gap `split.parent` became up to three letters.
    pub fn on_split(&mut self, obs: &Observation, split: &Split) {
        self.memo = true;
        for id in Self::sorted(self.watchers.get(&split.parent)) {
            let Some(node) = self.nodes.get(&id) else { continue };
            match node.gate {
                Gate::Step { .. } => self.rebuild_step(obs, id),
                Gate::Window(_) => self.refine_window(obs, id, split),
                _ => unreachable!("only temporal gates watch other letters"),
            }
        }
        self.memo = false;
        self.piece_slots.clear();
        self.split_hint = Some(split.clone());
        for k in split.parts() {
            self.ensure_root(obs, k);
        }
        self.split_hint = None;
        self.drop_letter(&split.parent);
    }

    /// T2: the gap `k` turned out to hold no time point.
    pub fn on_remove(&mut self, obs: &Observation, k: &Interval) {
        for id in Self::sorted(self.watchers.get(k)) {
            let Some(node) = self.nodes.get_mut(&id) else { continue };
            match &mut node.gate {
                Gate::Step { .. } => self.rebuild_step(obs, id),
                Gate::Window(w) => {
                    let Some(part) = w.remove(k) else { continue };
                    self.unwatch(id, k);
                    for s in part.slots() {
                        self.unlink(s, id);
                    }
                    self.settle(id);
                }
                _ => unreachable!("only temporal gates watch other letters"),
            }
        }
        self.drop_letter(k);
    }

    /// T3.1: predicate `pred` became known at time point `k`.
    pub fn on_facts(&mut self, obs: &Observation, k: &Interval, pred: &str) {
        let f = Arc::clone(&self.f);
        let letter = obs.letter(k);
        for id in Self::sorted(self.at.get(k)) {
            let Some(node) = self.nodes.get(&id) else { continue };
            let kind = &f.sub(node.sub).kind;
            if !matches!(kind, Kind::Pred { name, .. } if name == pred) {
                continue;
            }
            if let Some(b) = eval_atom(kind, letter, &node.val).to_bool() {
                self.resolve(id, b);
            }
        }
    }

    fn freeze_slot(&self, id: NodeId) -> Option<Slot> {
        match self.nodes.get(&id)?.gate {
            Gate::Freeze(s) => Some(s),
            _ => None,
        }
    }

    /// T3.2: register `reg` became known at time point `k`.
    pub fn on_register(&mut self, obs: &Observation, k: &Interval, reg: &str, d: &Value) {
        let f = Arc::clone(&self.f);
        for id in Self::sorted(self.at.get(k)) {
            let Some(node) = self.nodes.get(&id) else { continue };
            let Kind::Freeze { register, var, body } = &f.sub(node.sub).kind else { continue };
            if register != reg {
                continue;
            }
            let inner = node.val.with(*var, d.clone());
            let fresh = self.build(obs, *body, k, &inner);
            if Some(fresh) == self.freeze_slot(id) {
                continue;
            }
            self.link(fresh, id);
            let node = self.nodes.get_mut(&id).expect("live node");
            let Gate::Freeze(slot) = &mut node.gate else { unreachable!("freeze node without freeze gate") };
            let old = std::mem::replace(slot, fresh);
            self.unlink(old, id);
            self.settle(id);
        }
    }
}
