//! Data values and partial valuations.

use std::fmt;
use std::sync::Arc;

/// A data value carried by events and registers.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Int(i64),
    Str(Arc<str>),
}

impl Value {
    pub fn str(s: &str) -> Self {
        Value::Str(Arc::from(s))
    }

    /// Wire coercion: decimal integers become `Int`, anything else `Str`.
    pub fn coerce(s: &str) -> Self {
        let digits = s.strip_prefix('-').unwrap_or(s);
        if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
            if let Ok(n) = s.parse() {
                return Value::Int(n);
            }
        }
        Value::str(s)
    }

    /// The wire form (inverse of [`Value::coerce`] for coerced values).
    pub fn to_wire(&self) -> String {
        match self {
            Value::Int(n) => n.to_string(),
            Value::Str(s) => s.to_string(),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Str(s) => f.write_str(s),
        }
    }
}

/// Index of a variable within a compiled formula.
pub type VarId = u16;

/// A finite partial map from variables to values, kept sorted by variable.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Valuation(Vec<(VarId, Value)>);

impl Valuation {
    pub fn empty() -> Self {
        Valuation(Vec::new())
    }

    pub fn get(&self, x: VarId) -> Option<&Value> {
        self.0.binary_search_by_key(&x, |(v, _)| *v).ok().map(|i| &self.0[i].1)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// `self[x ↦ d]`
    pub fn with(&self, x: VarId, d: Value) -> Self {
        let mut out = self.0.clone();
        match out.binary_search_by_key(&x, |(v, _)| *v) {
            Ok(i) => out[i].1 = d,
            Err(i) => out.insert(i, (x, d)),
        }
        Valuation(out)
    }

    /// `self[x ↦ ⊥]`
    pub fn without(&self, x: VarId) -> Self {
        Valuation(self.0.iter().filter(|(v, _)| *v != x).cloned().collect())
    }

    /// Restriction to a sorted set of variables.
    pub fn restrict(&self, vars: &[VarId]) -> Self {
        if self.0.iter().all(|(v, _)| vars.binary_search(v).is_ok()) {
            return self.clone();
        }
        Valuation(self.0.iter().filter(|(v, _)| vars.binary_search(v).is_ok()).cloned().collect())
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, &Value)> {
        self.0.iter().map(|(v, d)| (*v, d))
    }
}
