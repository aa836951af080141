use std::collections::{BTreeMap, BTreeSet};

use mtlo::ingestion::{completed_gaps, decode, merge_triples, IngestError, Ingestor, Ledger, Message, SeqTriple};
use mtlo::time::parse_rational;
use mtlo::{Compiled, Interval, Observation, Rational, Transformation, Value};
use proptest::prelude::*;

fn r(s: &str) -> Rational {
    parse_rational(s).unwrap()
}

fn open(a: &str, b: &str) -> Interval {
    Interval::new(r(a), false, mtlo::Bound::Finite(r(b)), false).unwrap()
}

fn closed(a: &str, b: &str) -> Interval {
    Interval::closed(r(a), r(b)).unwrap()
}

fn p1() -> Compiled {
    Compiled::parse("FREEZE c <- cid . FREEZE t <- tid . FREEZE a <- sum . trans(c, t, a) AND a > 2000 IMPLIES EVENTUALLY[0,3] report(t)")
        .unwrap()
}

fn action(component: &str, ts: &str, seq: u64) -> Message {
    Message::Action {
        component: component.into(),
        ts: r(ts),
        seq,
        pred: "p".into(),
        args: Vec::new(),
        props: Vec::new(),
        regs: Vec::new(),
    }
}

fn alive(component: &str, ts: &str, seq: u64) -> Message {
    Message::Alive { component: component.into(), ts: r(ts), seq }
}

#[test]
fn first_action_splits_and_defines_its_time_point() {
    let f = p1();
    let mut ing = Ingestor::new(&f, None);
    let msg = decode(
        r#"{"type":"action","component":"C","ts":"3.0","seq":1,"pred":"trans","args":["Alice","42","99"],"regs":{"cid":"Alice","tid":"42","sum":"99"}}"#,
    )
    .unwrap();
    let steps = ing.ingest(&msg).unwrap();
    let ts = r("3");
    let fact = |pred: &str, tuples: Vec<Vec<Value>>| Transformation::SetFacts { ts, pred: pred.into(), rel: tuples.into_iter().collect() };
    let reg = |reg: &str, value: Value| Transformation::SetRegister { ts, reg: reg.into(), value };
    assert_eq!(
        steps,
        vec![
            Transformation::Split(ts),
            fact("report", vec![]),
            fact("trans", vec![vec![Value::str("Alice"), Value::Int(42), Value::Int(99)]]),
            reg("cid", Value::str("Alice")),
            reg("tid", Value::Int(42)),
            reg("sum", Value::Int(99)),
        ]
    );
}

#[test]
fn consecutive_sequence_numbers_close_the_gap_between_them() {
    let f = Compiled::parse("p").unwrap();
    let mut ing = Ingestor::new(&f, None);
    let first = ing.ingest(&action("C", "3.0", 1)).unwrap();
    assert!(!first.iter().any(|t| matches!(t, Transformation::Remove(_))));
    let second = ing.ingest(&action("C", "4.2", 2)).unwrap();
    assert_eq!(second.last(), Some(&Transformation::Remove(open("3.0", "4.2"))));
}

#[test]
fn alive_extends_the_triple_and_only_removes() {
    let f = Compiled::parse("p").unwrap();
    let mut ing = Ingestor::new(&f, None);
    ing.ingest(&action("C", "9.0", 6)).unwrap();
    // An alive message claims nothing beyond its own timestamp.
    assert_eq!(ing.ingest(&alive("C", "10.0", 7)).unwrap(), Vec::new());
    let triples: Vec<_> = ing.ledger("C").unwrap().triples().cloned().collect();
    assert_eq!(triples, vec![SeqTriple { first: 6, interval: closed("9.0", "10.0"), last: 7 }]);
    let steps = ing.ingest(&action("C", "11.0", 8)).unwrap();
    assert_eq!(steps.first(), Some(&Transformation::Split(r("11"))));
    assert_eq!(steps.last(), Some(&Transformation::Remove(open("9.0", "11.0"))));

    // Filling a seq hole with an alive message closes the gap around it.
    let mut ing = Ingestor::new(&f, None);
    ing.ingest(&action("C", "9.0", 6)).unwrap();
    ing.ingest(&action("C", "10.0", 8)).unwrap();
    assert_eq!(ing.ingest(&alive("C", "9.5", 7)).unwrap(), vec![Transformation::Remove(open("9.0", "10.0"))]);
}

#[test]
fn alive_at_zero_completes_the_prefix() {
    let f = Compiled::parse("p").unwrap();
    let mut ing = Ingestor::new(&f, Some(vec!["C".into()]));
    let steps = ing.ingest(&action("C", "1.0", 1)).unwrap();
    assert!(!steps.iter().any(|t| matches!(t, Transformation::Remove(_))));
    let steps = ing.ingest(&alive("C", "0.0", 0)).unwrap();
    assert_eq!(steps, vec![Transformation::Remove(Interval::new(r("0"), true, mtlo::Bound::Finite(r("1")), false).unwrap())]);
}

#[test]
fn merge_examples() {
    let mut ledger = Ledger::default();
    merge_triples(&mut ledger, "C", SeqTriple::point(5, r("3.0"))).unwrap();
    let merged = merge_triples(&mut ledger, "C", SeqTriple::point(6, r("4.2"))).unwrap();
    assert_eq!(merged, SeqTriple { first: 5, interval: closed("3.0", "4.2"), last: 6 });
    let merged = merge_triples(&mut ledger, "C", SeqTriple::point(4, r("1.0"))).unwrap();
    assert_eq!(merged, SeqTriple { first: 4, interval: closed("1.0", "4.2"), last: 6 });
    assert_eq!(ledger.triples().count(), 1);

    let mut ledger = Ledger::default();
    merge_triples(&mut ledger, "C", SeqTriple::point(5, r("3.0"))).unwrap();
    merge_triples(&mut ledger, "C", SeqTriple::point(9, r("8.0"))).unwrap();
    assert_eq!(ledger.triples().count(), 2);
}

#[test]
fn merge_rejects_out_of_order_timestamps() {
    let mut ledger = Ledger::default();
    merge_triples(&mut ledger, "C", SeqTriple::point(5, r("3.0"))).unwrap();
    let err = merge_triples(&mut ledger, "C", SeqTriple::point(7, r("2.0"))).unwrap_err();
    assert!(matches!(err, IngestError::Disorder { .. }));
}

#[test]
fn completed_gap_examples() {
    let gap = open("3.0", "4.2");
    let mut ledgers = BTreeMap::new();
    let mut ledger = Ledger::default();
    merge_triples(&mut ledger, "C", SeqTriple::point(5, r("3.0"))).unwrap();
    merge_triples(&mut ledger, "C", SeqTriple::point(6, r("4.2"))).unwrap();
    ledgers.insert("C".to_string(), ledger);

    let mut labels = BTreeMap::from([(gap.clone(), BTreeSet::from(["C".to_string()]))]);
    assert_eq!(completed_gaps(&mut labels, &ledgers, [&gap]), vec![gap.clone()]);
    assert!(labels.is_empty());

    let mut labels = BTreeMap::from([(gap.clone(), BTreeSet::from(["C".to_string(), "D".to_string()]))]);
    assert!(completed_gaps(&mut labels, &ledgers, [&gap]).is_empty());
    assert_eq!(labels[&gap], BTreeSet::from(["D".to_string()]));
}

#[test]
fn decode_examples() {
    let a = decode(r#"{"type":"action","component":"C1","ts":"3.0","seq":1,"pred":"trans","args":["Alice","42","99"],"regs":{"cid":"Alice","tid":"42","sum":"99"}}"#)
        .unwrap();
    assert_eq!(
        a,
        Message::Action {
            component: "C1".into(),
            ts: r("3"),
            seq: 1,
            pred: "trans".into(),
            args: vec![Value::str("Alice"), Value::Int(42), Value::Int(99)],
            props: Vec::new(),
            regs: vec![("cid".into(), Value::str("Alice")), ("tid".into(), Value::Int(42)), ("sum".into(), Value::Int(99))],
        }
    );
    assert_eq!(decode(r#"{"type":"alive","component":"C1","ts":"10.0","seq":7}"#).unwrap(), alive("C1", "10", 7));
    let a = decode(r#"{"type":"alive","component":"C1","ts":"3.00","seq":7}"#).unwrap();
    let b = decode(r#"{"type":"alive","component":"C1","ts":"3.0","seq":7}"#).unwrap();
    assert_eq!(a, b);
}

#[test]
fn decode_rejects_bad_input() {
    for line in [
        "not json",
        r#"{"type":"ping","component":"C1","ts":"1.0","seq":1}"#,
        r#"{"type":"alive","component":"C1","ts":"-1.0","seq":1}"#,
        r#"{"type":"alive","component":"C1","ts":"1/3","seq":1}"#,
        r#"{"type":"alive","component":"C1","ts":1.0,"seq":1}"#,
        r#"{"type":"action","component":"C1","ts":"1.0","seq":1}"#,
    ] {
        assert!(decode(line).is_err(), "{line}");
    }
}

#[test]
fn consistency_errors() {
    let f = Compiled::parse("p").unwrap();
    let mut ing = Ingestor::new(&f, Some(vec!["C".into(), "D".into()]));
    ing.ingest(&action("C", "3.0", 1)).unwrap();
    // Exact replay is ignored.
    assert_eq!(ing.ingest(&action("C", "3.0", 1)).unwrap(), Vec::new());
    assert!(matches!(ing.ingest(&action("C", "3.5", 1)), Err(IngestError::Conflict { .. })));
    assert!(matches!(ing.ingest(&action("D", "3.0", 1)), Err(IngestError::Collision(_))));
    assert!(matches!(ing.ingest(&action("C", "2.0", 2)), Err(IngestError::Disorder { .. })));
    assert!(matches!(ing.ingest(&action("E", "5.0", 1)), Err(IngestError::UnknownComponent(_))));
}

#[test]
fn missing_registers_default_to_zero() {
    let f = Compiled::parse("FREEZE x <- r . x = 0").unwrap();
    let mut ing = Ingestor::new(&f, None);
    let steps = ing.ingest(&action("C", "1.0", 1)).unwrap();
    assert!(steps.contains(&Transformation::SetRegister { ts: r("1"), reg: "r".into(), value: Value::Int(0) }));
}

/// Per-component logs over a shared grid: timestamps increase with
/// sequence numbers, no two components share a timestamp, and each
/// component may close with an alive message.
fn multi_component_log() -> impl Strategy<Value = Vec<Message>> {
    (prop::collection::vec((0usize..3, any::<bool>()), 1..24), prop::collection::vec(any::<bool>(), 3)).prop_map(|(events, closing)| {
        let names = ["A", "B", "C"];
        let mut seq = [0u64; 3];
        let mut out = Vec::new();
        let mut tick = 0i64;
        for (c, is_alive) in events {
            tick += 1;
            seq[c] += 1;
            let ts = Rational::new(tick, 4);
            out.push(if is_alive {
                Message::Alive { component: names[c].into(), ts, seq: seq[c] }
            } else {
                Message::Action {
                    component: names[c].into(),
                    ts,
                    seq: seq[c],
                    pred: "p".into(),
                    args: Vec::new(),
                    props: Vec::new(),
                    regs: Vec::new(),
                }
            });
        }
        for (c, close) in closing.into_iter().enumerate() {
            tick += 1;
            if close {
                seq[c] += 1;
                out.push(Message::Alive { component: names[c].into(), ts: Rational::new(tick, 4), seq: seq[c] });
            }
        }
        out
    })
}

fn final_observation(f: &Compiled, log: &[Message]) -> Observation {
    let mut ing = Ingestor::new(f, Some(vec!["A".into(), "B".into(), "C".into()]));
    let mut w = Observation::initial();
    for m in log {
        for t in ing.ingest(m).expect("valid log ingests in any order") {
            w.apply_mut(&t).expect("ingestion emits valid steps");
        }
    }
    w
}

proptest! {
    /// No removal is ever contradicted by a later message, and the final
    /// observation does not depend on delivery order.
    #[test]
    fn delivery_order_does_not_matter(log in multi_component_log(), keys in prop::collection::vec(any::<u32>(), 40)) {
        let f = Compiled::parse("p").unwrap();
        let expected = final_observation(&f, &log);
        let mut shuffled: Vec<(u32, Message)> = log.iter().cloned().enumerate().map(|(i, m)| (keys[i % keys.len()] ^ i as u32, m)).collect();
        shuffled.sort_by_key(|(k, _)| *k);
        let shuffled: Vec<Message> = shuffled.into_iter().map(|(_, m)| m).collect();
        prop_assert_eq!(final_observation(&f, &shuffled), expected);
    }

    /// Triples stay disjoint and ordered alike by sequence number and time.
    #[test]
    fn ledger_triples_are_disjoint_and_ordered(log in multi_component_log(), seed in any::<u64>()) {
        let f = Compiled::parse("p").unwrap();
        let mut ing = Ingestor::new(&f, Some(vec!["A".into(), "B".into(), "C".into()]));
        let mut order: Vec<usize> = (0..log.len()).collect();
        let mut rng = mtlo::harness::SplitMix64::new(seed);
        for i in (1..order.len()).rev() {
            order.swap(i, rng.below(i as u64 + 1) as usize);
        }
        for i in order {
            ing.ingest(&log[i]).unwrap();
            for c in ["A", "B", "C"] {
                let Some(ledger) = ing.ledger(c) else { continue };
                let triples: Vec<&SeqTriple> = ledger.triples().collect();
                for w in triples.windows(2) {
                    prop_assert!(w[0].last < w[1].first);
                    prop_assert!(w[0].interval.precedes(&w[1].interval));
                }
            }
        }
    }
}
