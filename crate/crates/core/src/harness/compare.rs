//! Differential check of monitor verdicts against the reference evaluator.

use std::fmt;

use crate::formula::Compiled;
use crate::monitor::{Monitor, MonitorConfig};
use crate::observation::Transformation;
use crate::oracle::{verdict_set, VerdictSet};
use crate::time::format_rational;
use crate::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MismatchKind {
    /// An emitted verdict the evaluator does not confirm.
    Soundness,
    /// A Boolean value the monitor has not reported.
    Completeness,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mismatch {
    /// Number of transformations applied when the mismatch was seen.
    pub step: usize,
    pub ts: Rational,
    pub kind: MismatchKind,
    pub expected: Option<bool>,
    pub emitted: Option<bool>,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "step {}: {:?} at {}: expected {:?}, emitted {:?}",
            self.step,
            self.kind,
            format_rational(&self.ts),
            self.expected,
            self.emitted
        )
    }
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub steps: usize,
    pub mismatches: Vec<Mismatch>,
    /// Monitor errors, including invariant violations when checks are on.
    pub errors: Vec<String>,
}

impl Report {
    pub fn is_clean(&self) -> bool {
        self.mismatches.is_empty() && self.errors.is_empty()
    }

    pub fn count(&self, kind: MismatchKind) -> usize {
        self.mismatches.iter().filter(|m| m.kind == kind).count()
    }

    pub fn merge(&mut self, other: Report) {
        self.steps += other.steps;
        self.mismatches.extend(other.mismatches);
        self.errors.extend(other.errors);
    }
}

/// Compares an emitted verdict set with the evaluator's Boolean verdicts.
pub fn diff(step: usize, emitted: &VerdictSet, expected: &VerdictSet) -> Vec<Mismatch> {
    let mut out = Vec::new();
    for (ts, b) in emitted {
        if expected.get(ts) != Some(b) {
            out.push(Mismatch {
                step,
                ts: *ts,
                kind: MismatchKind::Soundness,
                expected: expected.get(ts).copied(),
                emitted: Some(*b),
            });
        }
    }
    for (ts, b) in expected {
        if !emitted.contains_key(ts) {
            out.push(Mismatch { step, ts: *ts, kind: MismatchKind::Completeness, expected: Some(*b), emitted: None });
        }
    }
    out
}

/// Replays `steps` through a fresh monitor and checks its cumulative
/// verdicts against the evaluator after every transformation.
pub fn compare_steps(f: &Compiled, steps: &[Transformation], config: MonitorConfig) -> Report {
    let mut report = Report::default();
    let mut m = Monitor::with_config(f.clone(), MonitorConfig { prune_history: false, ..config });
    if config.check_invariants {
        if let Err(e) = m.check() {
            report.errors.push(format!("initial state: {e}"));
            return report;
        }
    }
    report.mismatches.extend(diff(0, m.verdicts(), &verdict_set(m.observation(), f)));
    for (i, t) in steps.iter().enumerate() {
        if let Err(e) = m.apply(t) {
            report.errors.push(format!("step {}: {e}", i + 1));
            return report;
        }
        report.steps += 1;
        report.mismatches.extend(diff(i + 1, m.verdicts(), &verdict_set(m.observation(), f)));
    }
    report
}
