//! MTL↓ formulas: abstract syntax, text grammar, normalization and the
//! compiled subformula arena used by the evaluators.

mod compiled;
mod parse;
mod print;

use crate::time::Interval;
use crate::value::Value;

pub use compiled::{CTerm, Compiled, Kind, Sub, SubId};
pub use parse::parse_formula;

/// A term inside an atom.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Var(String),
    Const(Value),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
}

impl CmpOp {
    pub fn holds(self, a: &Value, b: &Value) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Ge => a >= b,
            CmpOp::Gt => a > b,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }
}

/// Core syntax. Derived connectives are expanded by the smart constructors
/// below, so a `Formula` only ever contains these variants.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    Pred { name: String, args: Vec<Term> },
    Cmp { op: CmpOp, lhs: Term, rhs: Term },
    Freeze { register: String, var: String, body: Box<Formula> },
    Not(Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Prev(Interval, Box<Formula>),
    Next(Interval, Box<Formula>),
    Since(Interval, Box<Formula>, Box<Formula>),
    Until(Interval, Box<Formula>, Box<Formula>),
}

#[allow(clippy::should_implement_trait)]
impl Formula {
    pub fn pred(name: &str, args: Vec<Term>) -> Self {
        Formula::Pred { name: name.to_string(), args }
    }

    pub fn prop(name: &str) -> Self {
        Formula::pred(name, Vec::new())
    }

    pub fn falsum() -> Self {
        Formula::not(Formula::True)
    }

    pub fn freeze(register: &str, var: &str, body: Formula) -> Self {
        Formula::Freeze { register: register.to_string(), var: var.to_string(), body: Box::new(body) }
    }

    pub fn not(a: Formula) -> Self {
        Formula::Not(Box::new(a))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    /// `¬(¬a ∨ ¬b)`
    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::not(Formula::or(Formula::not(a), Formula::not(b)))
    }

    /// `¬a ∨ b`
    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::or(Formula::not(a), b)
    }

    pub fn prev(i: Interval, a: Formula) -> Self {
        Formula::Prev(i, Box::new(a))
    }

    pub fn next(i: Interval, a: Formula) -> Self {
        Formula::Next(i, Box::new(a))
    }

    pub fn since(i: Interval, a: Formula, b: Formula) -> Self {
        Formula::Since(i, Box::new(a), Box::new(b))
    }

    pub fn until(i: Interval, a: Formula, b: Formula) -> Self {
        Formula::Until(i, Box::new(a), Box::new(b))
    }

    /// `t U_I a`
    pub fn eventually(i: Interval, a: Formula) -> Self {
        Formula::until(i, Formula::True, a)
    }

    /// `¬◇_I ¬a`
    pub fn always(i: Interval, a: Formula) -> Self {
        Formula::not(Formula::eventually(i, Formula::not(a)))
    }

    /// `t S_I a`
    pub fn once(i: Interval, a: Formula) -> Self {
        Formula::since(i, Formula::True, a)
    }

    /// `¬⧫_I ¬a`
    pub fn historically(i: Interval, a: Formula) -> Self {
        Formula::not(Formula::once(i, Formula::not(a)))
    }

    /// `(a U b) ∨ ¬(t U ¬a)`
    pub fn weak_until(a: Formula, b: Formula) -> Self {
        let all = Interval::all();
        Formula::or(
            Formula::until(all.clone(), a.clone(), b),
            Formula::not(Formula::until(all, Formula::True, Formula::not(a))),
        )
    }

    /// Direct children, left to right.
    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::True | Formula::Pred { .. } | Formula::Cmp { .. } => Vec::new(),
            Formula::Freeze { body, .. } | Formula::Not(body) => vec![body],
            Formula::Prev(_, a) | Formula::Next(_, a) => vec![a],
            Formula::Or(a, b) | Formula::Since(_, a, b) | Formula::Until(_, a, b) => vec![a, b],
        }
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, Formula::True | Formula::Pred { .. } | Formula::Cmp { .. })
    }
}

/// All subformula occurrences in preorder (parents before children).
pub fn subformulas(f: &Formula) -> Vec<&Formula> {
    let mut out = Vec::new();
    let mut stack = vec![f];
    while let Some(g) = stack.pop() {
        out.push(g);
        for c in g.children().into_iter().rev() {
            stack.push(c);
        }
    }
    out
}

/// The register a (possibly aliased) register name reads from. Aliases
/// introduced by normalization have the form `base#k`.
pub fn register_base(name: &str) -> &str {
    name.split_once('#').map_or(name, |(b, _)| b)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FormulaError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unbound variable {0:?}")]
    Unbound(String),
    #[error("empty interval at byte {0}")]
    EmptyInterval(usize),
    #[error("predicate {0:?} used with different arities")]
    Arity(String),
}

/// Renames bound variables apart, gives every `Freeze` its own register
/// (repeated registers become aliases `r#1`, `r#2`, ...), and checks that the
/// formula is closed with consistent predicate arities.
pub fn normalize(f: &Formula) -> Result<Formula, FormulaError> {
    let mut st = NormState::default();
    for g in subformulas(f) {
        if let Formula::Freeze { var, register, .. } = g {
            st.used_vars.insert(var.clone());
            st.used_regs.insert(register.clone());
        }
    }
    st.go(f, &mut Vec::new())
}

#[derive(Default)]
struct NormState {
    used_vars: std::collections::HashSet<String>,
    used_regs: std::collections::HashSet<String>,
    bound_vars: std::collections::HashSet<String>,
    bound_regs: std::collections::HashSet<String>,
    arity: std::collections::HashMap<String, usize>,
}

impl NormState {
    fn fresh(used: &std::collections::HashSet<String>, taken: &std::collections::HashSet<String>, base: &str) -> String {
        if !taken.contains(base) {
            return base.to_string();
        }
        let root = register_base(base);
        (1..)
            .map(|k| format!("{root}#{k}"))
            .find(|n| !taken.contains(n) && !used.contains(n))
            .expect("unbounded supply of names")
    }

    fn term(&self, t: &Term, scope: &[(String, String)]) -> Result<Term, FormulaError> {
        match t {
            Term::Const(_) => Ok(t.clone()),
            Term::Var(x) => scope
                .iter()
                .rev()
                .find(|(orig, _)| orig == x)
                .map(|(_, new)| Term::Var(new.clone()))
                .ok_or_else(|| FormulaError::Unbound(x.clone())),
        }
    }

    fn go(&mut self, f: &Formula, scope: &mut Vec<(String, String)>) -> Result<Formula, FormulaError> {
        Ok(match f {
            Formula::True => Formula::True,
            Formula::Pred { name, args } => {
                let n = *self.arity.entry(name.clone()).or_insert(args.len());
                if n != args.len() {
                    return Err(FormulaError::Arity(name.clone()));
                }
                let args = args.iter().map(|a| self.term(a, scope)).collect::<Result<_, _>>()?;
                Formula::Pred { name: name.clone(), args }
            }
            Formula::Cmp { op, lhs, rhs } => {
                Formula::Cmp { op: *op, lhs: self.term(lhs, scope)?, rhs: self.term(rhs, scope)? }
            }
            Formula::Freeze { register, var, body } => {
                let new_var = Self::fresh(&self.used_vars, &self.bound_vars, var);
                self.bound_vars.insert(new_var.clone());
                let new_reg = Self::fresh(&self.used_regs, &self.bound_regs, register);
                self.bound_regs.insert(new_reg.clone());
                scope.push((var.clone(), new_var.clone()));
                let body = self.go(body, scope);
                scope.pop();
                Formula::Freeze { register: new_reg, var: new_var, body: Box::new(body?) }
            }
            Formula::Not(a) => Formula::not(self.go(a, scope)?),
            Formula::Or(a, b) => Formula::or(self.go(a, scope)?, self.go(b, scope)?),
            Formula::Prev(i, a) => Formula::prev(i.clone(), self.go(a, scope)?),
            Formula::Next(i, a) => Formula::next(i.clone(), self.go(a, scope)?),
            Formula::Since(i, a, b) => Formula::since(i.clone(), self.go(a, scope)?, self.go(b, scope)?),
            Formula::Until(i, a, b) => Formula::until(i.clone(), self.go(a, scope)?, self.go(b, scope)?),
        })
    }
}
