//! Synthetic banking logs for the benchmark formulas.
//!
//! A log spans `duration` seconds. Second `i` holds a uniformly chosen
//! number of events in `[ceil(0.9 rate), floor(1.1 rate)]`, at distinct
//! timestamps on a fixed grid inside `[i, i + 1)`, one event per time point.
//! Events come from a single component `C1` with consecutive sequence
//! numbers. The log opens with `alive` at time 0 (sequence number 0) and
//! closes with `alive` at `duration`, so both ends of the log are complete.
//!
//! Each profile knows which obligations a suspicious transaction creates.
//! Every obligation is broken independently with probability
//! `violation_fraction`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use super::rng::SplitMix64;
use crate::ingestion::Message;
use crate::value::Value;
use crate::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Profile {
    P1,
    P2,
    P3,
    P4,
    P1Prop,
    P2Prop,
    P3Prop,
    P4Prop,
}

impl Profile {
    pub const ALL: [Profile; 8] = [
        Profile::P1,
        Profile::P2,
        Profile::P3,
        Profile::P4,
        Profile::P1Prop,
        Profile::P2Prop,
        Profile::P3Prop,
        Profile::P4Prop,
    ];

    pub fn is_propositional(self) -> bool {
        matches!(self, Profile::P1Prop | Profile::P2Prop | Profile::P3Prop | Profile::P4Prop)
    }

    /// The policy checked at every time point.
    pub fn body(self) -> &'static str {
        macro_rules! trigger {
            ($rest:literal) => {
                concat!("FREEZE c <- cid . FREEZE t <- tid . FREEZE a <- sum . trans(c, t, a) AND a > 2000 IMPLIES ", $rest)
            };
        }
        match self {
            Profile::P1 => trigger!("EVENTUALLY[0,3] report(t)"),
            Profile::P2 => trigger!("ALWAYS(0,5] FREEZE t' <- tid . FREEZE a' <- sum . trans(c, t', a') IMPLIES a' <= 2000"),
            Profile::P3 => trigger!("((FREEZE t' <- tid . FREEZE a' <- sum . trans(c, t', a') IMPLIES t = t') WEAKUNTIL report(t))"),
            Profile::P4 => trigger!("ALWAYS[0,6] FREEZE t' <- tid . FREEZE a' <- sum . trans(c, t', a') IMPLIES EVENTUALLY[0,3] report(t')"),
            Profile::P1Prop => "transaction AND suspicious IMPLIES EVENTUALLY[0,3] report",
            Profile::P2Prop => "transaction AND suspicious IMPLIES ALWAYS(0,5] (transaction IMPLIES NOT suspicious)",
            Profile::P3Prop => {
                "transaction AND suspicious IMPLIES ((transaction IMPLIES EVENTUALLY[0,3] report) WEAKUNTIL unflag)"
            }
            Profile::P4Prop => {
                "transaction AND suspicious IMPLIES ALWAYS[0,6] (transaction IMPLIES EVENTUALLY[0,3] report)"
            }
        }
    }

    /// The policy, optionally under an outer unbounded `ALWAYS`.
    pub fn formula(self, outer_always: bool) -> String {
        if outer_always {
            format!("ALWAYS ({})", self.body())
        } else {
            self.body().to_string()
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Profile::P1 => "P1",
            Profile::P2 => "P2",
            Profile::P3 => "P3",
            Profile::P4 => "P4",
            Profile::P1Prop => "P1'",
            Profile::P2Prop => "P2'",
            Profile::P3Prop => "P3'",
            Profile::P4Prop => "P4'",
        };
        f.write_str(s)
    }
}

impl FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Profile::ALL
            .into_iter()
            .find(|p| {
                let name = p.to_string();
                name.eq_ignore_ascii_case(s) || name.replace('\'', "p").eq_ignore_ascii_case(s)
            })
            .ok_or_else(|| format!("unknown profile {s:?} (expected P1..P4 or P1'..P4')"))
    }
}

#[derive(Clone, Debug)]
pub struct GenSpec {
    pub profile: Profile,
    /// Approximate events per second.
    pub rate: u32,
    /// Seconds.
    pub duration: u32,
    pub seed: u64,
    pub violation_fraction: f64,
}

impl GenSpec {
    pub fn new(profile: Profile, rate: u32, duration: u32, seed: u64) -> Self {
        GenSpec { profile, rate, duration, seed, violation_fraction: 0.05 }
    }
}

pub const COMPONENT: &str = "C1";
/// Probability that a transaction exceeds the threshold.
const SUSPICIOUS: f64 = 0.1;
const CUSTOMERS: u64 = 20;
/// Deadline of a report obligation, in seconds.
const REPORT_WINDOW: i64 = 3;

/// Grid denominator: milliseconds, refined tenfold while a second could
/// hold more than half as many events as grid slots.
pub fn grid_for(rate: u32) -> i64 {
    let most = (1.1 * rate as f64).floor() as i64;
    let mut d = 1000;
    while 2 * most > d {
        d *= 10;
    }
    d
}

#[derive(Clone, Debug)]
enum Event {
    Trans { customer: u64, tid: i64, amount: i64 },
    Report { tid: i64 },
    Unflag,
}

/// Pending events keyed by (earliest emission time, insertion order).
#[derive(Default)]
struct Agenda {
    queue: BTreeMap<(Rational, u64), Event>,
    counter: u64,
}

impl Agenda {
    fn push(&mut self, at: Rational, e: Event) {
        self.counter += 1;
        self.queue.insert((at, self.counter), e);
    }

    /// The earliest due event that `allowed` accepts.
    fn pop_due(&mut self, now: Rational, allowed: impl Fn(&Event) -> bool) -> Option<Event> {
        let key = *self.queue.iter().take_while(|(k, _)| k.0 <= now).find(|(_, e)| allowed(e))?.0;
        self.queue.remove(&key)
    }
}

struct Generator {
    spec: GenSpec,
    rng: SplitMix64,
    agenda: Agenda,
    next_tid: i64,
    /// Customer (0 in propositional profiles) to the end of the window a
    /// suspicious transaction opened.
    hot: BTreeMap<u64, Rational>,
    /// Customers waiting for a report (P3) or the global flag (P3').
    blocked: BTreeSet<u64>,
    /// Pending report to the customer it unblocks (P3).
    awaiting: BTreeMap<i64, u64>,
    /// Propositional reports carry no transaction id, so any report would
    /// discharge a broken obligation. None are emitted up to this time.
    quiet_until: Option<Rational>,
}

impl Generator {
    fn delay(&mut self, lo_ms: i64, hi_ms: i64) -> Rational {
        Rational::new(self.rng.range(lo_ms, hi_ms), 1000)
    }

    fn broken(&mut self) -> bool {
        self.rng.chance(self.spec.violation_fraction)
    }

    fn amount(&mut self, suspicious: bool) -> i64 {
        if suspicious {
            self.rng.range(2001, 10_000)
        } else {
            self.rng.range(1, 2000)
        }
    }

    fn quiet(&self, ts: Rational) -> bool {
        self.quiet_until.is_some_and(|end| ts <= end)
    }

    fn schedule_report(&mut self, ts: Rational, tid: i64) {
        if self.broken() {
            if self.spec.profile.is_propositional() {
                let end = ts + REPORT_WINDOW;
                self.quiet_until = Some(self.quiet_until.map_or(end, |q| q.max(end)));
            }
            return;
        }
        let mut at = ts + self.delay(50, 2500);
        if let Some(end) = self.quiet_until.filter(|_| self.quiet(at)) {
            at = end + self.delay(1, 50);
        }
        self.agenda.push(at, Event::Report { tid });
    }

    fn transaction(&mut self, ts: Rational) -> Event {
        let prop = self.spec.profile.is_propositional();
        let mut customer = if prop { 0 } else { self.rng.below(CUSTOMERS) };
        let tid = self.next_tid;
        self.next_tid += 1;
        let hot = self.hot.get(&customer).is_some_and(|end| ts <= *end);
        let mut suspicious = self.rng.chance(SUSPICIOUS);
        match self.spec.profile {
            Profile::P1 | Profile::P1Prop => {
                if suspicious {
                    self.schedule_report(ts, tid);
                }
            }
            Profile::P2 | Profile::P2Prop => {
                if hot && suspicious && !self.broken() {
                    suspicious = false;
                }
                if suspicious {
                    self.hot.insert(customer, ts + 5);
                }
            }
            Profile::P3 => {
                if self.blocked.contains(&customer) && !self.broken() {
                    let free: Vec<u64> = (0..CUSTOMERS).filter(|c| !self.blocked.contains(c)).collect();
                    if free.is_empty() {
                        // Everyone waits for a report; emit one now instead.
                        return self.release_any();
                    }
                    customer = *self.rng.pick(&free);
                }
                if suspicious && !self.blocked.contains(&customer) {
                    self.blocked.insert(customer);
                    self.awaiting.insert(tid, customer);
                    let at = ts + self.delay(50, 2500);
                    self.agenda.push(at, Event::Report { tid });
                }
            }
            Profile::P3Prop => {
                if suspicious && self.blocked.is_empty() {
                    self.blocked.insert(0);
                    let at = ts + self.delay(1000, 4000);
                    self.agenda.push(at, Event::Unflag);
                }
                if !self.blocked.is_empty() {
                    self.schedule_report(ts, tid);
                }
            }
            Profile::P4 | Profile::P4Prop => {
                if suspicious {
                    self.hot.insert(customer, ts + 6);
                }
                if hot || suspicious {
                    self.schedule_report(ts, tid);
                }
            }
        }
        Event::Trans { customer, tid, amount: self.amount(suspicious) }
    }

    /// Emits the earliest pending report regardless of its schedule.
    fn release_any(&mut self) -> Event {
        let key = *self
            .agenda
            .queue
            .iter()
            .find(|(_, e)| matches!(e, Event::Report { .. }))
            .map(|(k, _)| k)
            .expect("blocked customers have pending reports");
        self.agenda.queue.remove(&key).expect("present")
    }

    fn event_at(&mut self, ts: Rational) -> Event {
        let quiet = self.quiet(ts);
        match self.agenda.pop_due(ts, |e| !(quiet && matches!(e, Event::Report { .. }))) {
            Some(e) => e,
            None => self.transaction(ts),
        }
    }

    fn message(&self, ts: Rational, seq: u64, e: &Event) -> Message {
        let prop = self.spec.profile.is_propositional();
        let (pred, args, props, regs) = match (e, prop) {
            (Event::Trans { customer, tid, amount }, false) => (
                "trans",
                vec![Value::str(&format!("c{customer}")), Value::Int(*tid), Value::Int(*amount)],
                Vec::new(),
                vec![
                    ("cid".to_string(), Value::str(&format!("c{customer}"))),
                    ("tid".to_string(), Value::Int(*tid)),
                    ("sum".to_string(), Value::Int(*amount)),
                ],
            ),
            (Event::Trans { amount, .. }, true) => {
                let props = if *amount > 2000 { vec!["suspicious".to_string()] } else { Vec::new() };
                ("transaction", Vec::new(), props, Vec::new())
            }
            (Event::Report { tid }, false) => {
                ("report", vec![Value::Int(*tid)], Vec::new(), vec![("tid".to_string(), Value::Int(*tid))])
            }
            (Event::Report { .. }, true) => ("report", Vec::new(), Vec::new(), Vec::new()),
            (Event::Unflag, _) => ("unflag", Vec::new(), Vec::new(), Vec::new()),
        };
        Message::Action { component: COMPONENT.to_string(), ts, seq, pred: pred.to_string(), args, props, regs }
    }

    fn after_emit(&mut self, e: &Event) {
        match e {
            Event::Report { tid } => {
                if let Some(c) = self.awaiting.remove(tid) {
                    self.blocked.remove(&c);
                }
            }
            Event::Unflag => {
                self.blocked.clear();
            }
            _ => {}
        }
    }
}

/// The log described by `spec`. A pure function of `spec`.
pub fn generate(spec: &GenSpec) -> Vec<Message> {
    assert!(spec.rate >= 1 && spec.duration >= 1, "rate and duration must be positive");
    let mut g = Generator {
        spec: spec.clone(),
        rng: SplitMix64::new(spec.seed),
        agenda: Agenda::default(),
        next_tid: 1,
        hot: BTreeMap::new(),
        blocked: BTreeSet::new(),
        awaiting: BTreeMap::new(),
        quiet_until: None,
    };
    let grid = grid_for(spec.rate);
    let lo = (0.9 * spec.rate as f64).ceil() as i64;
    let hi = (1.1 * spec.rate as f64).floor() as i64;
    let mut out = vec![Message::Alive { component: COMPONENT.to_string(), ts: Rational::from_integer(0), seq: 0 }];
    let mut seq = 1;
    for second in 0..spec.duration as i64 {
        let n = g.rng.range(lo, hi.max(lo)) as usize;
        let mut offsets = BTreeSet::new();
        // Offset 0 of the first second is taken by the opening alive.
        let first = if second == 0 { 1 } else { 0 };
        while offsets.len() < n {
            offsets.insert(g.rng.range(first, grid - 1));
        }
        for off in offsets {
            let ts = Rational::from_integer(second) + Rational::new(off, grid);
            let e = g.event_at(ts);
            out.push(g.message(ts, seq, &e));
            g.after_emit(&e);
            seq += 1;
        }
    }
    out.push(Message::Alive { component: COMPONENT.to_string(), ts: Rational::from_integer(spec.duration as i64), seq });
    out
}

/// Number of action messages in a log.
pub fn event_count(log: &[Message]) -> usize {
    log.iter().filter(|m| matches!(m, Message::Action { .. })).count()
}
