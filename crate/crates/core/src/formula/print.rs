//! Fully parenthesized rendering in the text grammar. The output parses back
//! to the same formula.

use std::fmt;

use super::{Formula, Term};
use crate::time::{Bound, Interval};
use crate::value::Value;

struct Bounds<'a>(&'a Interval);

impl fmt::Display for Bounds<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let i = self.0;
        let open = if i.lo_closed() { '[' } else { '(' };
        let close = if i.hi_closed() { ']' } else { ')' };
        write!(f, "{open}{},", i.lo())?;
        match i.hi() {
            Bound::Finite(h) => write!(f, "{h}")?,
            Bound::Infinity => f.write_str("*")?,
        }
        write!(f, "{close}")
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(x) => f.write_str(x),
            Term::Const(Value::Int(n)) => write!(f, "{n}"),
            Term::Const(Value::Str(s)) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    if c == '"' || c == '\\' {
                        f.write_str("\\")?;
                    }
                    write!(f, "{c}")?;
                }
                f.write_str("\"")
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("TRUE"),
            Formula::Pred { name, args } if args.is_empty() => f.write_str(name),
            Formula::Pred { name, args } => {
                write!(f, "{name}(")?;
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            Formula::Cmp { op, lhs, rhs } => write!(f, "({lhs} {} {rhs})", op.symbol()),
            Formula::Freeze { register, var, body } => write!(f, "(FREEZE {var} <- {register} . {body})"),
            Formula::Not(a) => write!(f, "(NOT {a})"),
            Formula::Or(a, b) => write!(f, "({a} OR {b})"),
            Formula::Prev(i, a) => write!(f, "(PREV{} {a})", Bounds(i)),
            Formula::Next(i, a) => write!(f, "(NEXT{} {a})", Bounds(i)),
            Formula::Since(i, a, b) => write!(f, "({a} SINCE{} {b})", Bounds(i)),
            Formula::Until(i, a, b) => write!(f, "({a} UNTIL{} {b})", Bounds(i)),
        }
    }
}
