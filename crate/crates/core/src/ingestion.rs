//! From component messages to observation transformations.
//!
//! Every component numbers its messages consecutively. For each component
//! the ingestor keeps triples `(s, I, s')`: all messages numbered `s..=s'`
//! have arrived and their timestamps span the closed interval `I`. Since
//! timestamps grow with sequence numbers, no other message of that
//! component can carry a timestamp inside `I`. A gap of the observation is
//! removed once every component has a triple covering it.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::json;

use crate::formula::{register_base, Compiled};
use crate::observation::Transformation;
use crate::time::{format_rational, parse_rational, Interval};
use crate::value::Value;
use crate::Rational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Message {
    Action {
        component: String,
        ts: Rational,
        seq: u64,
        pred: String,
        args: Vec<Value>,
        /// Further nullary predicates that hold at the same time point.
        props: Vec<String>,
        /// Register values in message order.
        regs: Vec<(String, Value)>,
    },
    Alive {
        component: String,
        ts: Rational,
        seq: u64,
    },
}

impl Message {
    pub fn component(&self) -> &str {
        match self {
            Message::Action { component, .. } | Message::Alive { component, .. } => component,
        }
    }

    pub fn ts(&self) -> Rational {
        match self {
            Message::Action { ts, .. } | Message::Alive { ts, .. } => *ts,
        }
    }

    pub fn seq(&self) -> u64 {
        match self {
            Message::Action { seq, .. } | Message::Alive { seq, .. } => *seq,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Message::Action { component, ts, seq, pred, args, props, regs } => {
                let regs: serde_json::Map<String, serde_json::Value> =
                    regs.iter().map(|(r, v)| (r.clone(), json!(v.to_wire()))).collect();
                let mut v = json!({
                    "type": "action",
                    "component": component,
                    "ts": format_rational(ts),
                    "seq": seq,
                    "pred": pred,
                    "args": args.iter().map(Value::to_wire).collect::<Vec<_>>(),
                    "regs": regs,
                });
                if !props.is_empty() {
                    v["props"] = json!(props);
                }
                v
            }
            Message::Alive { component, ts, seq } => json!({
                "type": "alive",
                "component": component,
                "ts": format_rational(ts),
                "seq": seq,
            }),
        }
    }
}

/// One decoded input line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Line {
    Config { components: Vec<String> },
    Message(Message),
}

impl Line {
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Line::Config { components } => json!({ "type": "config", "components": components }),
            Line::Message(m) => m.to_json(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecodeError {
    #[error("malformed JSON: {0}")]
    Json(String),
    #[error("missing or ill-typed field {0:?}")]
    Field(&'static str),
    #[error("unknown message type {0:?}")]
    UnknownType(String),
    #[error("bad timestamp: {0}")]
    Timestamp(#[from] crate::time::RationalError),
}

fn field<'a>(obj: &'a serde_json::Map<String, serde_json::Value>, name: &'static str) -> Result<&'a serde_json::Value, DecodeError> {
    obj.get(name).ok_or(DecodeError::Field(name))
}

fn string(obj: &serde_json::Map<String, serde_json::Value>, name: &'static str) -> Result<String, DecodeError> {
    field(obj, name)?.as_str().map(str::to_string).ok_or(DecodeError::Field(name))
}

fn wire_value(v: &serde_json::Value, name: &'static str) -> Result<Value, DecodeError> {
    match v {
        serde_json::Value::String(s) => Ok(Value::coerce(s)),
        serde_json::Value::Number(n) => n.as_i64().map(Value::Int).ok_or(DecodeError::Field(name)),
        _ => Err(DecodeError::Field(name)),
    }
}

/// Decodes one JSON line: a configuration header or a message.
pub fn decode_line(line: &str) -> Result<Line, DecodeError> {
    let v: serde_json::Value = serde_json::from_str(line).map_err(|e| DecodeError::Json(e.to_string()))?;
    let obj = v.as_object().ok_or_else(|| DecodeError::Json("expected an object".into()))?;
    let kind = string(obj, "type")?;
    if kind == "config" {
        let comps = field(obj, "components")?.as_array().ok_or(DecodeError::Field("components"))?;
        let components =
            comps.iter().map(|c| c.as_str().map(str::to_string).ok_or(DecodeError::Field("components"))).collect::<Result<_, _>>()?;
        return Ok(Line::Config { components });
    }
    let component = string(obj, "component")?;
    let ts = match field(obj, "ts")? {
        serde_json::Value::String(s) if !s.contains('/') => parse_rational(s)?,
        serde_json::Value::String(s) => return Err(crate::time::RationalError::Syntax(s.clone()).into()),
        _ => return Err(DecodeError::Field("ts")),
    };
    let seq = field(obj, "seq")?.as_u64().ok_or(DecodeError::Field("seq"))?;
    let msg = match kind.as_str() {
        "alive" => Message::Alive { component, ts, seq },
        "action" => {
            let pred = string(obj, "pred")?;
            let args = match obj.get("args") {
                None => Vec::new(),
                Some(a) => a
                    .as_array()
                    .ok_or(DecodeError::Field("args"))?
                    .iter()
                    .map(|x| wire_value(x, "args"))
                    .collect::<Result<_, _>>()?,
            };
            let regs = match obj.get("regs") {
                None => Vec::new(),
                Some(r) => r
                    .as_object()
                    .ok_or(DecodeError::Field("regs"))?
                    .iter()
                    .map(|(k, x)| Ok((k.clone(), wire_value(x, "regs")?)))
                    .collect::<Result<_, DecodeError>>()?,
            };
            let props = match obj.get("props") {
                None => Vec::new(),
                Some(p) => p
                    .as_array()
                    .ok_or(DecodeError::Field("props"))?
                    .iter()
                    .map(|x| x.as_str().map(str::to_string).ok_or(DecodeError::Field("props")))
                    .collect::<Result<_, _>>()?,
            };
            Message::Action { component, ts, seq, pred, args, props, regs }
        }
        other => return Err(DecodeError::UnknownType(other.to_string())),
    };
    Ok(Line::Message(msg))
}

/// Decodes one message line.
pub fn decode(line: &str) -> Result<Message, DecodeError> {
    match decode_line(line)? {
        Line::Message(m) => Ok(m),
        Line::Config { .. } => Err(DecodeError::UnknownType("config".into())),
    }
}

/// `(s, I, s')`: messages `s..=s'` received, timestamps spanning `I`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeqTriple {
    pub first: u64,
    pub interval: Interval,
    pub last: u64,
}

impl SeqTriple {
    pub fn point(seq: u64, ts: Rational) -> Self {
        SeqTriple { first: seq, interval: Interval::singleton(ts), last: seq }
    }

    fn lo(&self) -> Rational {
        *self.interval.lo()
    }

    fn hi(&self) -> Rational {
        *self.interval.hi().finite().expect("triples are bounded")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IngestError {
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("component {component:?} sent two different messages numbered {seq}")]
    Conflict { component: String, seq: u64 },
    #[error("timestamp {0} already belongs to another message")]
    Collision(String),
    #[error("component {component:?}: timestamps do not increase with sequence numbers at {seq}")]
    Disorder { component: String, seq: u64 },
    #[error("timestamp {0} lies in an interval already known to be empty")]
    Completed(String),
    #[error("unknown component {0:?}")]
    UnknownComponent(String),
    #[error("predicate {pred:?} expects {expected} arguments, got {got}")]
    Arity { pred: String, expected: usize, got: usize },
}

/// The triples of one component, keyed by first sequence number. Triples
/// are disjoint and ordered the same way by sequence number and interval.
#[derive(Clone, Debug, Default)]
pub struct Ledger {
    triples: BTreeMap<u64, SeqTriple>,
    /// Lower interval endpoint to first sequence number.
    by_time: BTreeMap<Rational, u64>,
}

impl Ledger {
    pub fn triples(&self) -> impl Iterator<Item = &SeqTriple> {
        self.triples.values()
    }

    fn below(&self, seq: u64) -> Option<&SeqTriple> {
        self.triples.range(..=seq).next_back().map(|(_, t)| t)
    }

    fn above(&self, seq: u64) -> Option<&SeqTriple> {
        self.triples.range(seq + 1..).next().map(|(_, t)| t)
    }

    /// True if some triple's interval contains `iv`.
    pub fn covers(&self, iv: &Interval) -> bool {
        self.by_time
            .range(..=*iv.lo())
            .next_back()
            .is_some_and(|(_, s)| iv.is_subset(&self.triples[s].interval))
    }

    fn take(&mut self, first: u64) -> SeqTriple {
        let t = self.triples.remove(&first).expect("triple present");
        self.by_time.remove(&t.lo());
        t
    }

    fn put(&mut self, t: SeqTriple) {
        self.by_time.insert(t.lo(), t.first);
        self.triples.insert(t.first, t);
    }
}

fn hull(a: &Interval, b: &Interval) -> Interval {
    let lo = (*a.lo()).min(*b.lo());
    let hi = (*a.hi().finite().expect("bounded")).max(*b.hi().finite().expect("bounded"));
    Interval::closed(lo, hi).expect("lo <= hi")
}

/// Adds `new` to `ledger`, merging it with triples whose sequence ranges
/// are adjacent. Returns the merged triple.
pub fn merge_triples(ledger: &mut Ledger, component: &str, new: SeqTriple) -> Result<SeqTriple, IngestError> {
    let disorder = || IngestError::Disorder { component: component.to_string(), seq: new.first };
    if let Some(b) = ledger.below(new.last) {
        if b.last >= new.first {
            return Err(disorder());
        }
        if b.hi() >= new.lo() {
            return Err(disorder());
        }
    }
    if let Some(a) = ledger.above(new.last) {
        if a.lo() <= new.hi() {
            return Err(disorder());
        }
    }
    let mut merged = new;
    if let Some(b) = ledger.below(merged.first).filter(|b| b.last + 1 == merged.first).map(|b| b.first) {
        let b = ledger.take(b);
        merged = SeqTriple { first: b.first, interval: hull(&b.interval, &merged.interval), last: merged.last };
    }
    if let Some(a) = ledger.above(merged.last).filter(|a| a.first == merged.last + 1).map(|a| a.first) {
        let a = ledger.take(a);
        merged = SeqTriple { first: merged.first, interval: hull(&merged.interval, &a.interval), last: a.last };
    }
    ledger.put(merged.clone());
    Ok(merged)
}

/// Drops components from the pending sets of the gaps their ledgers cover
/// and returns the bounded gaps left with no pending component.
pub fn completed_gaps<'a>(
    labels: &mut BTreeMap<Interval, BTreeSet<String>>,
    ledgers: &BTreeMap<String, Ledger>,
    gaps: impl IntoIterator<Item = &'a Interval>,
) -> Vec<Interval> {
    let mut done = Vec::new();
    for g in gaps {
        let Some(pending) = labels.get_mut(g) else { continue };
        pending.retain(|c| !ledgers.get(c).is_some_and(|l| l.covers(g)));
        if pending.is_empty() && g.is_bounded() {
            labels.remove(g);
            done.push(g.clone());
        }
    }
    done.sort();
    done
}

/// Turns messages into transformations for one formula.
#[derive(Clone, Debug)]
pub struct Ingestor {
    preds: BTreeMap<String, usize>,
    /// Registers the formula reads, grouped by the register they alias.
    regs: BTreeMap<String, Vec<String>>,
    /// Fixed component set, or `None` to register components on sight.
    fixed: Option<BTreeSet<String>>,
    received: BTreeMap<(String, u64), Message>,
    ledgers: BTreeMap<String, Ledger>,
    gaps: BTreeMap<Interval, BTreeSet<String>>,
    points: BTreeSet<Rational>,
}

impl Ingestor {
    /// `components` is the static component set from the configuration
    /// header; without one, components join when first heard from.
    pub fn new(f: &Compiled, components: Option<Vec<String>>) -> Self {
        let mut regs: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for r in f.registers() {
            regs.entry(register_base(r).to_string()).or_default().push(r.to_string());
        }
        let fixed: Option<BTreeSet<String>> = components.map(|c| c.into_iter().collect());
        let mut gaps = BTreeMap::new();
        gaps.insert(Interval::all(), fixed.clone().unwrap_or_default());
        Ingestor {
            preds: f.preds.clone(),
            regs,
            fixed,
            received: BTreeMap::new(),
            ledgers: BTreeMap::new(),
            gaps,
            points: BTreeSet::new(),
        }
    }

    pub fn ledger(&self, component: &str) -> Option<&Ledger> {
        self.ledgers.get(component)
    }

    /// Current gaps with the components that may still report into them.
    pub fn gaps(&self) -> &BTreeMap<Interval, BTreeSet<String>> {
        &self.gaps
    }

    fn admit(&mut self, component: &str) -> Result<(), IngestError> {
        match &self.fixed {
            Some(set) if !set.contains(component) => Err(IngestError::UnknownComponent(component.to_string())),
            Some(_) => Ok(()),
            None => {
                if !self.ledgers.contains_key(component) {
                    for pending in self.gaps.values_mut() {
                        pending.insert(component.to_string());
                    }
                }
                Ok(())
            }
        }
    }

    /// The transformations for `msg`: for an action, the new time point, its
    /// facts and register values; then every gap the message completes.
    pub fn ingest(&mut self, msg: &Message) -> Result<Vec<Transformation>, IngestError> {
        let (component, seq, ts) = (msg.component().to_string(), msg.seq(), msg.ts());
        let key = (component.clone(), seq);
        if let Some(prev) = self.received.get(&key) {
            return if prev == msg { Ok(Vec::new()) } else { Err(IngestError::Conflict { component, seq }) };
        }
        self.admit(&component)?;
        let mut out = Vec::new();
        let mut touched: Vec<Interval> = Vec::new();
        if let Message::Action { pred, args, props, regs, .. } = msg {
            if self.points.contains(&ts) {
                return Err(IngestError::Collision(format_rational(&ts)));
            }
            let claims = std::iter::once((pred, args.len())).chain(props.iter().map(|p| (p, 0)));
            for (p, got) in claims {
                match self.preds.get(p) {
                    Some(&expected) if expected != got => {
                        return Err(IngestError::Arity { pred: p.clone(), expected, got });
                    }
                    _ => {}
                }
            }
            let gap = self
                .gaps
                .range(..=Interval::from(ts).expect("nonnegative"))
                .next_back()
                .map(|(g, _)| g.clone())
                .filter(|g| g.contains(&ts))
                .ok_or_else(|| IngestError::Completed(format_rational(&ts)))?;
            self.check_order(&component, seq, ts)?;
            let pending = self.gaps.remove(&gap).expect("gap present");
            let (left, _, right) = gap.split_at(&ts);
            for piece in [left, right].into_iter().flatten() {
                self.gaps.insert(piece.clone(), pending.clone());
                touched.push(piece);
            }
            self.points.insert(ts);
            out.push(Transformation::Split(ts));
            out.extend(self.facts(ts, pred, args, props));
            out.extend(self.registers(ts, regs));
        } else {
            self.check_order(&component, seq, ts)?;
        }
        self.received.insert(key, msg.clone());
        let ledger = self.ledgers.entry(component.clone()).or_default();
        let merged = merge_triples(ledger, &component, SeqTriple::point(seq, ts))?;
        touched.extend(
            self.gaps
                .range(Interval::singleton(merged.lo())..)
                .take_while(|(g, _)| *g.lo() <= merged.hi())
                .map(|(g, _)| g.clone()),
        );
        touched.sort();
        touched.dedup();
        out.extend(completed_gaps(&mut self.gaps, &self.ledgers, &touched).into_iter().map(Transformation::Remove));
        Ok(out)
    }

    /// Rejects a message whose timestamp is out of line with the
    /// component's sequence numbers, before any state changes.
    fn check_order(&self, component: &str, seq: u64, ts: Rational) -> Result<(), IngestError> {
        let Some(ledger) = self.ledgers.get(component) else { return Ok(()) };
        let bad = ledger.below(seq).is_some_and(|b| b.last >= seq || b.hi() >= ts)
            || ledger.above(seq).is_some_and(|a| a.lo() <= ts);
        if bad {
            Err(IngestError::Disorder { component: component.to_string(), seq })
        } else {
            Ok(())
        }
    }

    /// Closed world at the new time point: every predicate of the formula is
    /// defined, holding only for the reported tuple and propositions.
    fn facts(&self, ts: Rational, pred: &str, args: &[Value], props: &[String]) -> Vec<Transformation> {
        self.preds
            .keys()
            .map(|p| {
                let mut rel = BTreeSet::new();
                if p == pred {
                    rel.insert(args.to_vec());
                }
                if props.contains(p) {
                    rel.insert(Vec::new());
                }
                Transformation::SetFacts { ts, pred: p.clone(), rel }
            })
            .collect()
    }

    /// Reported registers in message order, each followed by its aliases;
    /// then `0` for every register the formula reads but the message lacks.
    fn registers(&self, ts: Rational, regs: &[(String, Value)]) -> Vec<Transformation> {
        let mut out = Vec::new();
        let set = |reg: &str, value: &Value| Transformation::SetRegister { ts, reg: reg.to_string(), value: value.clone() };
        for (r, v) in regs {
            out.push(set(r, v));
            for alias in self.regs.get(r).into_iter().flatten().filter(|a| *a != r) {
                out.push(set(alias, v));
            }
        }
        for (base, names) in &self.regs {
            if !regs.iter().any(|(r, _)| r == base) {
                for n in names {
                    out.push(set(n, &Value::Int(0)));
                }
            }
        }
        out
    }
}
