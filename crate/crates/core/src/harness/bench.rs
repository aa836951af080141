//! Running-time tables over profiles, event rates and delay deviations.

use std::time::Duration;

use super::generate::{event_count, generate, GenSpec, Profile};
use super::run::{run_messages, RunError};
use super::shuffle::{shuffle, ShuffleSpec};
use crate::formula::Compiled;
use crate::monitor::MonitorConfig;

#[derive(Clone, Debug)]
pub struct BenchRow {
    pub profile: Profile,
    pub rate: u32,
    pub sigma: f64,
    pub events: usize,
    pub wall: Duration,
    pub peak_nodes: usize,
    pub verdicts: usize,
    pub violations: usize,
}

impl BenchRow {
    pub const CSV_HEADER: &'static str = "profile,rate,sigma,events,seconds,events_per_second,peak_nodes,verdicts,violations";

    pub fn csv(&self) -> String {
        let secs = self.wall.as_secs_f64();
        format!(
            "{},{},{},{},{:.3},{:.1},{},{},{}",
            self.profile,
            self.rate,
            self.sigma,
            self.events,
            secs,
            self.events as f64 / secs.max(1e-9),
            self.peak_nodes,
            self.verdicts,
            self.violations
        )
    }
}

#[derive(Clone, Debug)]
pub struct BenchSpec {
    pub duration: u32,
    pub mu: f64,
    pub seed: u64,
    pub outer_always: bool,
}

impl Default for BenchSpec {
    fn default() -> Self {
        BenchSpec { duration: 60, mu: 10.0, seed: 1, outer_always: false }
    }
}

/// Generates, reorders and monitors one log.
pub fn bench_one(profile: Profile, rate: u32, sigma: f64, spec: &BenchSpec) -> Result<BenchRow, RunError> {
    let f = Compiled::parse(&profile.formula(spec.outer_always)).expect("profile formulas parse");
    let log = generate(&GenSpec::new(profile, rate, spec.duration, spec.seed));
    let log = shuffle(&log, &ShuffleSpec { mu: spec.mu, sigma, seed: spec.seed.wrapping_add(1) });
    let summary = run_messages(&f, &log, MonitorConfig::default())?;
    Ok(BenchRow {
        profile,
        rate,
        sigma,
        events: event_count(&log),
        wall: summary.wall,
        peak_nodes: summary.stats.peak_nodes,
        verdicts: summary.verdicts.len(),
        violations: summary.verdicts.values().filter(|b| !**b).count(),
    })
}
