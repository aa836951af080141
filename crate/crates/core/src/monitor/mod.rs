//! The incremental monitor.
//!
//! [`Monitor`] owns the current observation and a gate graph over it. Each
//! refinement step updates both and returns the verdicts it settled, in
//! ascending timestamp order. A verdict is emitted as soon as the root's
//! value at a time point becomes Boolean on the current observation.

mod check;
mod graph;
mod window;

use std::collections::BTreeSet;
use std::sync::Arc;

use serde_json::json;

use crate::formula::{Compiled, SubId};
use crate::observation::{Observation, ObservationError, Transformation, Tuple};
use crate::oracle::VerdictSet;
use crate::time::{format_rational, Interval};
use crate::truth::Truth3;
use crate::value::{Valuation, Value};
use crate::Rational;

use graph::Graph;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MonitorConfig {
    /// Delete nodes no gate reads any more.
    pub gc: bool,
    /// Drop observation letters no node can reach. Only takes effect for
    /// formulas without past operators.
    pub prune_history: bool,
    /// Compare the whole graph against the reference evaluator after every
    /// step. Expensive; implies no pruning.
    pub check_invariants: bool,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        MonitorConfig { gc: true, prune_history: true, check_invariants: false }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Verdict {
    pub ts: Rational,
    pub value: bool,
}

impl Verdict {
    pub fn to_json(&self) -> serde_json::Value {
        json!({ "ts": format_rational(&self.ts), "verdict": self.value })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    pub nodes: usize,
    pub edges: usize,
    pub peak_nodes: usize,
    pub transformations: u64,
}

impl Stats {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "nodes": self.nodes,
            "edges": self.edges,
            "peak_nodes": self.peak_nodes,
            "transformations": self.transformations,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MonitorError {
    #[error(transparent)]
    Observation(#[from] ObservationError),
    #[error("conflicting verdicts at {0}")]
    Conflict(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

/// A node of the gate graph as seen from outside.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeView {
    pub sub: SubId,
    pub formula: String,
    pub interval: Interval,
    pub valuation: Valuation,
    pub truth: Truth3,
}

impl NodeView {
    pub fn to_json(&self) -> serde_json::Value {
        let val: serde_json::Map<_, _> = self.valuation.iter().map(|(x, v)| (x.to_string(), json!(v.to_wire()))).collect();
        json!({
            "formula": self.formula,
            "interval": self.interval.to_string(),
            "valuation": val,
            "truth": self.truth.to_string(),
        })
    }
}

pub struct Monitor {
    graph: Graph,
    obs: Observation,
    emitted: VerdictSet,
    config: MonitorConfig,
    stats: Stats,
    /// History pruning is sound for this formula and enabled.
    prune: bool,
    /// Current nonsingleton letters; never pruned, as they may still split.
    gaps: BTreeSet<Interval>,
}

impl Monitor {
    pub fn new(f: Compiled) -> Self {
        Monitor::with_config(f, MonitorConfig::default())
    }

    pub fn with_config(f: Compiled, config: MonitorConfig) -> Self {
        let past = f.subs.iter().any(|s| matches!(s.kind, crate::formula::Kind::Since(..) | crate::formula::Kind::Prev(..)));
        let prune = config.prune_history && !config.check_invariants && !past;
        let obs = Observation::initial();
        let mut graph = Graph::new(Arc::new(f), config.gc);
        graph.ensure_root(&obs, &Interval::all());
        let mut m = Monitor { graph, obs, emitted: VerdictSet::new(), config, stats: Stats::default(), prune, gaps: BTreeSet::from([Interval::all()]) };
        m.drain().expect("no verdicts before the first time point");
        m.refresh_stats();
        m
    }

    pub fn formula(&self) -> &Compiled {
        &self.graph.f
    }

    pub fn observation(&self) -> &Observation {
        &self.obs
    }

    pub fn config(&self) -> MonitorConfig {
        self.config
    }

    /// Every verdict emitted so far.
    pub fn verdicts(&self) -> &VerdictSet {
        &self.emitted
    }

    pub fn stats(&self) -> Stats {
        Stats { edges: self.graph.edge_count(), ..self.stats.clone() }
    }

    /// Applies one refinement step and returns the verdicts it settled.
    pub fn apply(&mut self, t: &Transformation) -> Result<Vec<Verdict>, MonitorError> {
        let split = self.obs.apply_mut(t)?;
        match t {
            Transformation::Split(_) => {
                let split = split.expect("split result");
                self.gaps.remove(&split.parent);
                self.gaps.extend(split.left.iter().chain(&split.right).cloned());
                self.graph.on_split(&self.obs, &split);
            }
            Transformation::Remove(k) => {
                self.gaps.remove(k);
                self.graph.on_remove(&self.obs, k);
            }
            Transformation::SetFacts { ts, pred, .. } => {
                self.graph.on_facts(&self.obs, &Interval::singleton(*ts), pred);
            }
            Transformation::SetRegister { ts, reg, value } => {
                self.graph.on_register(&self.obs, &Interval::singleton(*ts), reg, value);
            }
        }
        self.stats.transformations += 1;
        let out = self.drain()?;
        self.refresh_stats();
        if self.config.check_invariants {
            self.check().map_err(MonitorError::Invariant)?;
        }
        Ok(out)
    }

    /// Applies a sequence of steps and returns the verdicts they settled.
    ///
    /// A split followed directly by facts and register values for the same
    /// time point is handled as one update, so the graph at the new point
    /// is built once from complete data. The result equals applying the
    /// steps one at a time.
    pub fn apply_all(&mut self, steps: &[Transformation]) -> Result<Vec<Verdict>, MonitorError> {
        let mut out = Vec::new();
        let mut rest = steps;
        while let Some((first, tail)) = rest.split_first() {
            let data = match first {
                Transformation::Split(ts) => tail
                    .iter()
                    .take_while(|t| match t {
                        Transformation::SetFacts { ts: u, .. } | Transformation::SetRegister { ts: u, .. } => u == ts,
                        _ => false,
                    })
                    .count(),
                _ => 0,
            };
            if data == 0 {
                out.extend(self.apply(first)?);
            } else {
                out.extend(self.apply_point(first, &tail[..data])?);
            }
            rest = &tail[data..];
        }
        out.sort();
        Ok(out)
    }

    fn apply_point(&mut self, split: &Transformation, data: &[Transformation]) -> Result<Vec<Verdict>, MonitorError> {
        let split = self.obs.apply_mut(split)?.expect("split result");
        for t in data {
            self.obs.apply_mut(t)?;
        }
        self.gaps.remove(&split.parent);
        self.gaps.extend(split.left.iter().chain(&split.right).cloned());
        self.graph.on_split(&self.obs, &split);
        self.stats.transformations += 1 + data.len() as u64;
        let out = self.drain()?;
        self.refresh_stats();
        if self.config.check_invariants {
            self.check().map_err(MonitorError::Invariant)?;
        }
        Ok(out)
    }

    /// T1: a time point at `ts` inside a gap.
    pub fn add_time_point(&mut self, ts: Rational) -> Result<Vec<Verdict>, MonitorError> {
        self.apply(&Transformation::Split(ts))
    }

    /// T2: the bounded gap `k` contains no time point.
    pub fn remove_interval(&mut self, k: &Interval) -> Result<Vec<Verdict>, MonitorError> {
        self.apply(&Transformation::Remove(k.clone()))
    }

    /// T3.1: the interpretation of `pred` at time point `ts`.
    pub fn set_facts(&mut self, ts: Rational, pred: &str, rel: BTreeSet<Tuple>) -> Result<Vec<Verdict>, MonitorError> {
        self.apply(&Transformation::SetFacts { ts, pred: pred.to_string(), rel })
    }

    /// T3.2: the value of register `reg` at time point `ts`.
    pub fn set_register(&mut self, ts: Rational, reg: &str, value: Value) -> Result<Vec<Verdict>, MonitorError> {
        self.apply(&Transformation::SetRegister { ts, reg: reg.to_string(), value })
    }

    /// Releases observation history that no node can reach any more. Call
    /// between messages; a no-op unless pruning is in effect.
    pub fn prune(&mut self) {
        if !self.prune {
            return;
        }
        let gap = self.gaps.first();
        // Without past operators every gate reads only its own letter and
        // later ones, so the earliest node bounds everything still read.
        let keep = [self.graph.at.keys().next(), gap].into_iter().flatten().min().cloned();
        if let Some(k) = keep {
            self.obs.prune_before(&k);
        }
    }

    fn drain(&mut self) -> Result<Vec<Verdict>, MonitorError> {
        let mut out = Vec::new();
        for (ts, b) in std::mem::take(&mut self.graph.out) {
            match self.emitted.get(&ts) {
                Some(&prev) if prev == b => {}
                Some(_) => return Err(MonitorError::Conflict(format_rational(&ts))),
                None => {
                    self.emitted.insert(ts, b);
                    out.push(Verdict { ts, value: b });
                }
            }
        }
        out.sort();
        Ok(out)
    }

    fn refresh_stats(&mut self) {
        self.stats.nodes = self.graph.nodes.len();
        self.stats.peak_nodes = self.stats.peak_nodes.max(self.stats.nodes);
    }

    /// Live nodes, sorted.
    pub fn nodes(&self) -> Vec<NodeView> {
        let mut v: Vec<NodeView> = self.graph.nodes.values().map(|n| self.view(n)).collect();
        v.sort();
        v
    }

    /// Edges as (child, parent) pairs, sorted.
    pub fn edges(&self) -> Vec<(NodeView, NodeView)> {
        let mut v: Vec<(NodeView, NodeView)> = self
            .graph
            .nodes
            .values()
            .flat_map(|c| c.parents.iter().map(move |p| (self.view(c), self.view(&self.graph.nodes[p]))))
            .collect();
        v.sort();
        v
    }

    fn view(&self, n: &graph::Node) -> NodeView {
        NodeView {
            sub: n.sub,
            formula: self.graph.f.formula_of(n.sub).to_string(),
            interval: n.iv.clone(),
            valuation: n.val.clone(),
            truth: n.gate.truth(),
        }
    }

    /// Compares every node and gate input against the reference evaluator.
    pub fn check(&self) -> Result<(), String> {
        check::check(&self.graph, &self.obs)
    }
}
