//! Strong Kleene three-valued logic.

use std::fmt;

/// A truth value in `{t, f, ⊥}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Truth3 {
    True,
    False,
    Unknown,
}

/// The connectives of the truth tables.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KleeneOp {
    Not,
    Or,
    And,
    Implies,
}

impl Truth3 {
    pub const ALL: [Truth3; 3] = [Truth3::True, Truth3::False, Truth3::Unknown];

    pub fn from_bool(b: bool) -> Self {
        if b {
            Truth3::True
        } else {
            Truth3::False
        }
    }

    pub fn to_bool(self) -> Option<bool> {
        match self {
            Truth3::True => Some(true),
            Truth3::False => Some(false),
            Truth3::Unknown => None,
        }
    }

    pub fn is_bool(self) -> bool {
        self != Truth3::Unknown
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        match self {
            Truth3::True => Truth3::False,
            Truth3::False => Truth3::True,
            Truth3::Unknown => Truth3::Unknown,
        }
    }

    pub fn or(self, other: Self) -> Self {
        match (self, other) {
            (Truth3::True, _) | (_, Truth3::True) => Truth3::True,
            (Truth3::False, Truth3::False) => Truth3::False,
            _ => Truth3::Unknown,
        }
    }

    pub fn and(self, other: Self) -> Self {
        match (self, other) {
            (Truth3::False, _) | (_, Truth3::False) => Truth3::False,
            (Truth3::True, Truth3::True) => Truth3::True,
            _ => Truth3::Unknown,
        }
    }

    pub fn implies(self, other: Self) -> Self {
        self.not().or(other)
    }

    /// Greatest lower bound in the knowledge order.
    pub fn meet(self, other: Self) -> Self {
        if self == other {
            self
        } else {
            Truth3::Unknown
        }
    }

    /// Knowledge order: `⊥ ≼ x` and `x ≼ x`.
    pub fn below(self, other: Self) -> bool {
        self == Truth3::Unknown || self == other
    }
}

/// Applies a connective; `b` must be present exactly for binary ones.
pub fn kleene_apply(op: KleeneOp, a: Truth3, b: Option<Truth3>) -> Truth3 {
    match (op, b) {
        (KleeneOp::Not, None) => a.not(),
        (KleeneOp::Or, Some(b)) => a.or(b),
        (KleeneOp::And, Some(b)) => a.and(b),
        (KleeneOp::Implies, Some(b)) => a.implies(b),
        _ => panic!("arity mismatch for {op:?}"),
    }
}

pub fn meet3(a: Truth3, b: Truth3) -> Truth3 {
    a.meet(b)
}

impl fmt::Display for Truth3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Truth3::True => "t",
            Truth3::False => "f",
            Truth3::Unknown => "⊥",
        })
    }
}
