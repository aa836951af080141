//! Bookkeeping for SINCE and UNTIL gates.
//!
//! A gate at interval `J` keeps one part per letter `K` reachable from `J`
//! in its direction of time: every letter up to the last one whose
//! distance to `J` can still satisfy the metric constraint, cut short at
//! the first time point where the left operand is false. Each part holds
//! the letter's anchor ingredients and continuation slot. Inert time
//! points, whose continuation holds and whose anchor fails, are left out. Three summaries
//! make the gate's value cheap to maintain:
//!
//! * the number of parts whose anchor is not false,
//! * the parts whose anchor is true,
//! * the parts whose continuation is not known to be true.

use std::collections::{BTreeMap, BTreeSet};

use super::graph::Slot;
use crate::formula::SubId;
use crate::time::Interval;
use crate::truth::Truth3;

#[derive(Clone, Debug)]
pub(crate) struct Part {
    /// Metric check between this letter and the gate's own interval.
    pub mc: Truth3,
    pub tp: bool,
    pub alpha: Slot,
    pub beta: Slot,
}

impl Part {
    /// `tp ∧ mc ∧ β`
    pub fn anchor(&self) -> Truth3 {
        if self.mc == Truth3::False || self.beta == Slot::Known(false) {
            Truth3::False
        } else if self.tp && self.mc == Truth3::True && self.beta == Slot::Known(true) {
            Truth3::True
        } else {
            Truth3::Unknown
        }
    }

    /// `tp → α` is false here, so no later anchor can count.
    pub fn blocks(&self) -> bool {
        self.tp && self.alpha == Slot::Known(false)
    }

    /// A time point that neither anchors nor blocks, and never will.
    pub fn inert(&self) -> bool {
        self.tp && self.alpha == Slot::Known(true) && self.anchor() == Truth3::False
    }

    pub fn slots(&self) -> [Slot; 2] {
        [self.alpha, self.beta]
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Window {
    /// UNTIL looks forward, SINCE backward.
    pub future: bool,
    pub alpha: SubId,
    pub beta: SubId,
    pub constraint: Interval,
    pub parts: BTreeMap<Interval, Part>,
    open_alpha: BTreeSet<Interval>,
    true_anchors: BTreeSet<Interval>,
    viable: usize,
}

impl Window {
    pub fn new(future: bool, alpha: SubId, beta: SubId, constraint: Interval) -> Self {
        Window {
            future,
            alpha,
            beta,
            constraint,
            parts: BTreeMap::new(),
            open_alpha: BTreeSet::new(),
            true_anchors: BTreeSet::new(),
            viable: 0,
        }
    }

    fn earliest<'a>(&self, set: &'a BTreeSet<Interval>) -> Option<&'a Interval> {
        if self.future {
            set.first()
        } else {
            set.last()
        }
    }

    /// `a` comes strictly before `b` in this window's direction.
    pub fn before(&self, a: &Interval, b: &Interval) -> bool {
        if self.future {
            a < b
        } else {
            a > b
        }
    }

    fn count(&mut self, k: &Interval, p: &Part, add: bool) {
        let anchor = p.anchor();
        if anchor != Truth3::False {
            if add {
                self.viable += 1;
            } else {
                self.viable -= 1;
            }
        }
        if anchor == Truth3::True {
            if add {
                self.true_anchors.insert(k.clone());
            } else {
                self.true_anchors.remove(k);
            }
        }
        if p.alpha != Slot::Known(true) {
            if add {
                self.open_alpha.insert(k.clone());
            } else {
                self.open_alpha.remove(k);
            }
        }
    }

    pub fn insert(&mut self, k: Interval, p: Part) {
        if p.inert() {
            return;
        }
        self.count(&k, &p, true);
        let old = self.parts.insert(k.clone(), p);
        debug_assert!(old.is_none(), "part {k} inserted twice");
    }

    /// Fills an empty window from parts gathered nearest first.
    pub fn fill(&mut self, g: Gather) {
        debug_assert!(self.parts.is_empty(), "fill on a populated window");
        let parts = g.parts;
        self.viable = parts.iter().filter(|(_, p)| p.anchor() != Truth3::False).count();
        self.true_anchors = parts.iter().filter(|(_, p)| p.anchor() == Truth3::True).map(|(k, _)| k.clone()).collect();
        self.open_alpha = parts.iter().filter(|(_, p)| p.alpha != Slot::Known(true)).map(|(k, _)| k.clone()).collect();
        self.parts = parts.into_iter().collect();
    }

    pub fn remove(&mut self, k: &Interval) -> Option<Part> {
        let p = self.parts.remove(k)?;
        self.count(k, &p, false);
        Some(p)
    }

    /// Replaces the slot of the child `sub` at `k`. Returns false if the
    /// window has no such part.
    pub fn set_slot(&mut self, k: &Interval, sub: SubId, slot: Slot) -> bool {
        let Some(mut p) = self.remove(k) else { return false };
        if sub == self.alpha {
            p.alpha = slot;
        } else {
            debug_assert_eq!(sub, self.beta);
            p.beta = slot;
        }
        self.insert(k.clone(), p);
        true
    }

    pub fn blocks_at(&self, k: &Interval) -> bool {
        self.parts.get(k).is_some_and(Part::blocks)
    }

    /// Removes every part after `k` in this window's direction.
    pub fn cut_after(&mut self, k: &Interval) -> Vec<(Interval, Part)> {
        let doomed: Vec<Interval> = if self.future {
            self.parts.range(k..).skip(1).map(|(i, _)| i.clone()).collect()
        } else {
            self.parts.range(..k).map(|(i, _)| i.clone()).collect()
        };
        doomed
            .into_iter()
            .map(|i| {
                let p = self.remove(&i).expect("part present");
                (i, p)
            })
            .collect()
    }

    /// Three-valued disjunction over anchors, each guarded by the
    /// continuations between the gate and the anchor.
    pub fn truth(&self) -> Truth3 {
        if let Some(a) = self.earliest(&self.true_anchors) {
            match self.earliest(&self.open_alpha) {
                None => return Truth3::True,
                Some(o) if !self.before(o, a) => return Truth3::True,
                _ => {}
            }
        }
        if self.viable == 0 {
            Truth3::False
        } else {
            Truth3::Unknown
        }
    }

    pub fn slots(&self) -> impl Iterator<Item = Slot> + '_ {
        self.parts.values().flat_map(Part::slots)
    }
}

/// Parts collected nearest first for [`Window::fill`].
#[derive(Default)]
pub(crate) struct Gather {
    parts: Vec<(Interval, Part)>,
    open_alpha: bool,
}

impl Gather {
    /// Adds the next part. Returns true once no further part can matter:
    /// this one blocks, or it is a true anchor with no open continuation
    /// before it.
    pub fn push(&mut self, k: Interval, p: Part) -> bool {
        if p.inert() {
            return false;
        }
        let done = p.blocks() || (p.anchor() == Truth3::True && !self.open_alpha);
        self.open_alpha |= p.alpha != Slot::Known(true);
        self.parts.push((k, p));
        done
    }
}
