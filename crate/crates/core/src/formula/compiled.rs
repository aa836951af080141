use std::collections::BTreeMap;

use super::{subformulas, CmpOp, Formula, Term};
use crate::time::Interval;
use crate::value::{Valuation, Value, VarId};

/// Index of a subformula occurrence; `0` is the whole formula.
pub type SubId = u32;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CTerm {
    Var(VarId),
    Const(Value),
}

impl CTerm {
    pub fn resolve<'a>(&'a self, val: &'a Valuation) -> Option<&'a Value> {
        match self {
            CTerm::Var(x) => val.get(*x),
            CTerm::Const(v) => Some(v),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Kind {
    True,
    Pred { name: String, args: Vec<CTerm> },
    Cmp { op: CmpOp, lhs: CTerm, rhs: CTerm },
    Freeze { register: String, var: VarId, body: SubId },
    Not(SubId),
    Or(SubId, SubId),
    Prev(Interval, SubId),
    Next(Interval, SubId),
    Since(Interval, SubId, SubId),
    Until(Interval, SubId, SubId),
}

#[derive(Clone, Debug)]
pub struct Sub {
    pub kind: Kind,
    /// Free variables, sorted.
    pub fv: Vec<VarId>,
    pub parent: Option<SubId>,
}

impl Sub {
    pub fn is_atom(&self) -> bool {
        matches!(self.kind, Kind::True | Kind::Pred { .. } | Kind::Cmp { .. })
    }

    pub fn children(&self) -> Vec<SubId> {
        match &self.kind {
            Kind::True | Kind::Pred { .. } | Kind::Cmp { .. } => Vec::new(),
            Kind::Freeze { body, .. } => vec![*body],
            Kind::Not(a) | Kind::Prev(_, a) | Kind::Next(_, a) => vec![*a],
            Kind::Or(a, b) | Kind::Since(_, a, b) | Kind::Until(_, a, b) => vec![*a, *b],
        }
    }
}

/// A normalized formula laid out as an arena in preorder, so every parent
/// has a smaller id than its children.
#[derive(Clone, Debug)]
pub struct Compiled {
    pub formula: Formula,
    pub subs: Vec<Sub>,
    pub vars: Vec<String>,
    /// Register name to the freeze subformula reading it.
    pub freezes: BTreeMap<String, SubId>,
    /// Predicate name to arity.
    pub preds: BTreeMap<String, usize>,
}

impl Compiled {
    /// Compiles a normalized formula (see [`super::normalize`]).
    pub fn new(formula: &Formula) -> Self {
        let occurrences = subformulas(formula);
        let mut vars: Vec<String> = Vec::new();
        for g in &occurrences {
            if let Formula::Freeze { var, .. } = g {
                if !vars.contains(var) {
                    vars.push(var.clone());
                }
            }
        }
        let var_id = |x: &str| vars.iter().position(|v| v == x).expect("normalized formula is closed") as VarId;
        let term = |t: &Term| match t {
            Term::Var(x) => CTerm::Var(var_id(x)),
            Term::Const(v) => CTerm::Const(v.clone()),
        };
        // Preorder ids: a node's first child directly follows it; the second
        // child follows the whole first subtree.
        let mut subs: Vec<Sub> = Vec::with_capacity(occurrences.len());
        let mut freezes = BTreeMap::new();
        let mut preds = BTreeMap::new();
        fn size(f: &Formula) -> usize {
            1 + f.children().iter().map(|c| size(c)).sum::<usize>()
        }
        for (k, g) in occurrences.iter().enumerate() {
            let id = k as SubId;
            let first = id + 1;
            let second = |a: &Formula| first + size(a) as SubId;
            let kind = match g {
                Formula::True => Kind::True,
                Formula::Pred { name, args } => {
                    preds.insert(name.clone(), args.len());
                    Kind::Pred { name: name.clone(), args: args.iter().map(term).collect() }
                }
                Formula::Cmp { op, lhs, rhs } => Kind::Cmp { op: *op, lhs: term(lhs), rhs: term(rhs) },
                Formula::Freeze { register, var, .. } => {
                    freezes.insert(register.clone(), id);
                    Kind::Freeze { register: register.clone(), var: var_id(var), body: first }
                }
                Formula::Not(_) => Kind::Not(first),
                Formula::Or(a, _) => Kind::Or(first, second(a)),
                Formula::Prev(i, _) => Kind::Prev(i.clone(), first),
                Formula::Next(i, _) => Kind::Next(i.clone(), first),
                Formula::Since(i, a, _) => Kind::Since(i.clone(), first, second(a)),
                Formula::Until(i, a, _) => Kind::Until(i.clone(), first, second(a)),
            };
            subs.push(Sub { kind, fv: Vec::new(), parent: None });
        }
        for id in 0..subs.len() {
            for c in subs[id].children() {
                subs[c as usize].parent = Some(id as SubId);
            }
        }
        // Free variables, children first.
        for id in (0..subs.len()).rev() {
            let mut fv: Vec<VarId> = match &subs[id].kind {
                Kind::Pred { args, .. } => args
                    .iter()
                    .filter_map(|t| if let CTerm::Var(x) = t { Some(*x) } else { None })
                    .collect(),
                Kind::Cmp { lhs, rhs, .. } => [lhs, rhs]
                    .into_iter()
                    .filter_map(|t| if let CTerm::Var(x) = t { Some(*x) } else { None })
                    .collect(),
                Kind::Freeze { var, body, .. } => {
                    subs[*body as usize].fv.iter().copied().filter(|v| v != var).collect()
                }
                _ => subs[id].children().iter().flat_map(|c| subs[*c as usize].fv.clone()).collect(),
            };
            fv.sort_unstable();
            fv.dedup();
            subs[id].fv = fv;
        }
        Compiled { formula: formula.clone(), subs, vars, freezes, preds }
    }

    /// Parses, normalizes and compiles formula text.
    pub fn parse(text: &str) -> Result<Self, super::FormulaError> {
        Ok(Compiled::new(&super::normalize(&super::parse_formula(text)?)?))
    }

    /// The subformula occurrence `id` as a formula tree.
    pub fn formula_of(&self, id: SubId) -> &Formula {
        subformulas(&self.formula)[id as usize]
    }

    pub fn root(&self) -> SubId {
        0
    }

    pub fn sub(&self, id: SubId) -> &Sub {
        &self.subs[id as usize]
    }

    pub fn len(&self) -> usize {
        self.subs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subs.is_empty()
    }

    /// Registers read by the formula, including aliases.
    pub fn registers(&self) -> impl Iterator<Item = &str> {
        self.freezes.keys().map(String::as_str)
    }
}
