use std::collections::{BTreeMap, BTreeSet};

use mtlo::formula::{normalize, CmpOp, Term};
use mtlo::harness::FuzzConfig;
use mtlo::observation::Tuple;
use mtlo::oracle::{eval, eval_at, verdict_set, Oracle};
use mtlo::time::parse_rational;
use mtlo::{Bound, Compiled, Formula, Interval, Letter, Observation, Rational, Transformation, Truth3, Valuation, Value};
use proptest::prelude::*;

fn r(s: &str) -> Rational {
    parse_rational(s).unwrap()
}

fn unit() -> BTreeSet<Tuple> {
    BTreeSet::from([Vec::new()])
}

/// Splits at each timestamp and defines the given facts there.
fn observe(points: &[(&str, &[(&str, bool)])]) -> Observation {
    let mut w = Observation::initial();
    for (ts, facts) in points {
        w.apply_mut(&Transformation::Split(r(ts))).unwrap();
        for (pred, holds) in *facts {
            let rel = if *holds { unit() } else { BTreeSet::new() };
            w.apply_mut(&Transformation::SetFacts { ts: r(ts), pred: pred.to_string(), rel }).unwrap();
        }
    }
    w
}

#[test]
fn always_on_initial_is_unknown() {
    let f = Compiled::parse("ALWAYS (p AND EVENTUALLY NOT p)").unwrap();
    assert_eq!(eval(&Observation::initial(), 0, &Valuation::empty(), &f), Truth3::Unknown);
}

#[test]
fn true_holds_everywhere_on_time_points() {
    let f = Compiled::parse("TRUE").unwrap();
    let w = observe(&[("1", &[]), ("2", &[])]);
    for i in 0..w.len() {
        assert_eq!(eval(&w, i, &Valuation::empty(), &f), Truth3::True);
    }
    assert_eq!(eval_at(&Observation::initial(), &r("5"), &Valuation::empty(), &f), Truth3::Unknown);
    assert_eq!(eval_at(&w, &r("1.5"), &Valuation::empty(), &f), Truth3::Unknown);
    assert_eq!(eval_at(&w, &r("2"), &Valuation::empty(), &f), Truth3::True);
}

#[test]
fn once_sees_an_earlier_time_point() {
    let f = Compiled::parse("ONCE p").unwrap();
    let w = Observation::from_letters(vec![
        Letter { interval: Interval::singleton(r("1")), facts: BTreeMap::from([("p".into(), unit())]), regs: BTreeMap::new() },
        Letter::empty(Interval::new(r("1"), false, Bound::Infinity, false).unwrap()),
    ])
    .unwrap();
    assert_eq!(eval(&w, 1, &Valuation::empty(), &f), Truth3::True);
}

#[test]
fn report_within_three_seconds() {
    let f = Compiled::parse("transaction AND suspicious IMPLIES EVENTUALLY[0,3] report").unwrap();
    let w = observe(&[("1.0", &[("transaction", true), ("suspicious", true), ("report", false)]), ("2.0", &[("report", true)])]);
    assert_eq!(eval_at(&w, &r("1.0"), &Valuation::empty(), &f), Truth3::True);
}

#[test]
fn suspicious_transactions_five_seconds_apart() {
    let f = Compiled::parse("transaction AND suspicious IMPLIES ALWAYS(0,5] (transaction IMPLIES NOT suspicious)").unwrap();
    let sus: &[(&str, bool)] = &[("transaction", true), ("suspicious", true)];
    let quiet: &[(&str, bool)] = &[("transaction", false), ("suspicious", false)];
    let mut w = observe(&[("1.0", sus), ("4.0", sus), ("6.0", quiet)]);
    let gaps: Vec<Interval> = w.bounded_gaps().cloned().collect();
    for g in gaps {
        w.apply_mut(&Transformation::Remove(g)).unwrap();
    }
    let v = verdict_set(&w, &f);
    assert_eq!(v.get(&r("1.0")), Some(&false));
    assert_eq!(v.get(&r("4.0")), None);
    assert_eq!(v.get(&r("6.0")), Some(&true));
}

#[test]
fn verdicts_need_time_points() {
    assert!(verdict_set(&Observation::initial(), &Compiled::parse("NOT p").unwrap()).is_empty());
    let w = Observation::initial()
        .split(&r("3.0"))
        .and_then(|w| w.remove(&Interval::new(r("0"), true, Bound::Finite(r("3.0")), false).unwrap()))
        .unwrap();
    assert_eq!(verdict_set(&w, &Compiled::parse("TRUE").unwrap()), BTreeMap::from([(r("3.0"), true)]));
}

/// One time point of a gap-free trace.
#[derive(Clone, Debug)]
struct Point {
    ts: Rational,
    p: bool,
    q: BTreeSet<i64>,
    reg: i64,
}

fn trace() -> impl Strategy<Value = Vec<Point>> {
    prop::collection::vec((1i64..4, any::<bool>(), prop::collection::btree_set(0i64..3, 0..3), 0i64..3), 1..8).prop_map(|raw| {
        let mut ts = 0;
        raw.into_iter()
            .map(|(step, p, q, reg)| {
                ts += step;
                Point { ts: Rational::new(ts, 2), p, q, reg }
            })
            .collect()
    })
}

fn metric() -> impl Strategy<Value = Interval> {
    prop_oneof![
        Just(Interval::all()),
        Just(Interval::singleton(Rational::from_integer(0))),
        Just(Interval::closed(Rational::from_integer(0), Rational::from_integer(1)).unwrap()),
        Just(Interval::new(Rational::from_integer(0), false, Bound::Finite(Rational::from_integer(2)), true).unwrap()),
        Just(Interval::closed(Rational::from_integer(1), Rational::from_integer(3)).unwrap()),
        Just(Interval::new(Rational::new(1, 2), true, Bound::Infinity, false).unwrap()),
    ]
}

/// Past-only formulas over `p`, `q(x)` and `x = 1`, where `x` is frozen
/// from register `r` at the top and possibly again further down.
fn past_formula() -> impl Strategy<Value = Formula> {
    let x = || Term::Var("x".into());
    let leaf = prop_oneof![
        Just(Formula::True),
        Just(Formula::prop("p")),
        Just(Formula::pred("q", vec![x()])),
        Just(Formula::Cmp { op: CmpOp::Eq, lhs: x(), rhs: Term::Const(Value::Int(1)) }),
    ];
    let body = leaf.prop_recursive(4, 24, 2, move |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
            (metric(), inner.clone()).prop_map(|(i, a)| Formula::prev(i, a)),
            (metric(), inner.clone(), inner.clone()).prop_map(|(i, a, b)| Formula::since(i, a, b)),
            inner.prop_map(|a| Formula::freeze("r", "x", a)),
        ]
    });
    body.prop_map(|b| Formula::freeze("r", "x", b))
}

/// Two-valued semantics on a complete trace.
fn classical(f: &Formula, trace: &[Point], i: usize, env: &BTreeMap<String, Value>) -> bool {
    let value = |t: &Term| match t {
        Term::Var(v) => env[v].clone(),
        Term::Const(c) => c.clone(),
    };
    match f {
        Formula::True => true,
        Formula::Pred { name, args } if name == "p" && args.is_empty() => trace[i].p,
        Formula::Pred { name, args } if name == "q" => match value(&args[0]) {
            Value::Int(n) => trace[i].q.contains(&n),
            Value::Str(_) => false,
        },
        Formula::Pred { .. } => unreachable!(),
        Formula::Cmp { op, lhs, rhs } => op.holds(&value(lhs), &value(rhs)),
        Formula::Freeze { var, body, .. } => {
            let mut env = env.clone();
            env.insert(var.clone(), Value::Int(trace[i].reg));
            classical(body, trace, i, &env)
        }
        Formula::Not(a) => !classical(a, trace, i, env),
        Formula::Or(a, b) => classical(a, trace, i, env) || classical(b, trace, i, env),
        Formula::Prev(iv, a) => i > 0 && iv.contains(&(trace[i].ts - trace[i - 1].ts)) && classical(a, trace, i - 1, env),
        Formula::Since(iv, a, b) => (0..=i).any(|j| {
            iv.contains(&(trace[i].ts - trace[j].ts)) && classical(b, trace, j, env) && (j + 1..=i).all(|k| classical(a, trace, k, env))
        }),
        Formula::Next(..) | Formula::Until(..) => unreachable!("past-only"),
    }
}

fn complete(trace: &[Point], f: &Compiled) -> Observation {
    let mut w = Observation::initial();
    for pt in trace {
        w.apply_mut(&Transformation::Split(pt.ts)).unwrap();
        let p = if pt.p { unit() } else { BTreeSet::new() };
        w.apply_mut(&Transformation::SetFacts { ts: pt.ts, pred: "p".into(), rel: p }).unwrap();
        let q = pt.q.iter().map(|&n| vec![Value::Int(n)]).collect();
        w.apply_mut(&Transformation::SetFacts { ts: pt.ts, pred: "q".into(), rel: q }).unwrap();
        for reg in f.registers() {
            w.apply_mut(&Transformation::SetRegister { ts: pt.ts, reg: reg.into(), value: Value::Int(pt.reg) }).unwrap();
        }
    }
    let gaps: Vec<Interval> = w.bounded_gaps().cloned().collect();
    for g in gaps {
        w.apply_mut(&Transformation::Remove(g)).unwrap();
    }
    w
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn complete_past_agrees_with_boolean_semantics(f in past_formula(), trace in trace()) {
        let f = normalize(&f).unwrap();
        let compiled = Compiled::new(&f);
        let w = complete(&trace, &compiled);
        for (i, pt) in trace.iter().enumerate() {
            let expected = Truth3::from_bool(classical(&f, &trace, i, &BTreeMap::new()));
            prop_assert_eq!(eval_at(&w, &pt.ts, &Valuation::empty(), &compiled), expected, "{} at {}", f, pt.ts);
        }
    }

    #[test]
    fn memoization_is_transparent(seed in any::<u64>()) {
        let (f, steps) = FuzzConfig::default().case(seed);
        let mut w = Observation::initial();
        for t in &steps {
            w.apply_mut(t).unwrap();
            let mut fast = Oracle::new(&f, &w);
            let mut slow = Oracle::unmemoized(&f, &w);
            for i in 0..w.len() {
                prop_assert_eq!(fast.eval(i, f.root(), &Valuation::empty()), slow.eval(i, f.root(), &Valuation::empty()));
            }
        }
    }

    #[test]
    fn evaluation_is_monotone(seed in any::<u64>()) {
        let fuzz = FuzzConfig::default();
        let (f, steps) = fuzz.case(seed);
        let grid: Vec<Rational> = (0..=fuzz.horizon * fuzz.grid).map(|k| Rational::new(k, fuzz.grid)).collect();
        let mut w = Observation::initial();
        let mut before: Vec<Truth3> = vec![Truth3::Unknown; grid.len()];
        for t in &steps {
            w.apply_mut(t).unwrap();
            let mut oracle = Oracle::new(&f, &w);
            let now: Vec<Truth3> = grid.iter().map(|ts| oracle.eval_at(ts, f.root(), &Valuation::empty())).collect();
            for (k, (a, b)) in before.iter().zip(&now).enumerate() {
                prop_assert!(a.below(*b), "{} at {}: {a} then {b}", f.formula, grid[k]);
            }
            before = now;
        }
    }

    #[test]
    fn gaps_are_unknown(seed in any::<u64>(), probe in 0i64..80) {
        let (f, steps) = FuzzConfig::default().case(seed);
        let mut w = Observation::initial();
        for t in &steps {
            w.apply_mut(t).unwrap();
        }
        let ts = Rational::new(probe, 4);
        if w.time_point(&ts).is_none() {
            prop_assert_eq!(eval_at(&w, &ts, &Valuation::empty(), &f), Truth3::Unknown);
            prop_assert_eq!(eval_at(&w, &ts, &Valuation::empty(), &Compiled::parse("TRUE").unwrap()), Truth3::Unknown);
        }
    }
}
