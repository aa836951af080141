//! Out-of-order delivery: each message arrives at its timestamp plus a
//! normally distributed delay.

use super::rng::SplitMix64;
use crate::ingestion::Message;
use crate::time::rational_to_f64;

#[derive(Clone, Debug)]
pub struct ShuffleSpec {
    /// Mean delay in seconds.
    pub mu: f64,
    /// Standard deviation of the delay in seconds.
    pub sigma: f64,
    pub seed: u64,
}

/// Reorders `log` by arrival time. Delays may be negative; ties keep the
/// original order. With `sigma = 0` the order is unchanged.
pub fn shuffle(log: &[Message], spec: &ShuffleSpec) -> Vec<Message> {
    assert!(spec.sigma >= 0.0, "negative standard deviation");
    let mut rng = SplitMix64::new(spec.seed);
    let mut keyed: Vec<(f64, usize)> = log
        .iter()
        .enumerate()
        .map(|(i, m)| (rational_to_f64(&m.ts()) + rng.normal(spec.mu, spec.sigma), i))
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    keyed.into_iter().map(|(_, i)| log[i].clone()).collect()
}

/// Pairs of messages delivered in the opposite order of their timestamps.
pub fn inversions(log: &[Message]) -> usize {
    let ts: Vec<_> = log.iter().map(Message::ts).collect();
    let mut n = 0;
    for i in 0..ts.len() {
        for j in i + 1..ts.len() {
            if ts[i] > ts[j] {
                n += 1;
            }
        }
    }
    n
}
