//! Out-of-order runtime verification for MTL with freeze quantifiers.
//!
//! The crate is organized bottom-up: exact time arithmetic and Kleene
//! logic ([`time`], [`truth`], [`value`]), formulas ([`formula`]), partial
//! observations ([`observation`]), a reference evaluator ([`oracle`]), the
//! incremental monitor ([`monitor`]), message ingestion ([`ingestion`]) and
//! log generation and replay ([`harness`]).

pub mod formula;
pub mod harness;
pub mod ingestion;
pub mod monitor;
pub mod observation;
pub mod oracle;
pub mod time;
pub mod truth;
pub mod value;

/// Exact nonnegative timestamps and interval bounds.
pub type Rational = num_rational::Ratio<i64>;

pub use formula::{parse_formula, Compiled, Formula, FormulaError};
pub use monitor::{Monitor, MonitorConfig, MonitorError, Verdict};
pub use observation::{Letter, Observation, ObservationError, Transformation};
pub use time::{interval_mc, Bound, Interval};
pub use truth::{kleene_apply, meet3, KleeneOp, Truth3};
pub use value::{Valuation, Value};
