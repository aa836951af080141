//! Log generation, reordering, replay and differential checking.

pub mod bench;
pub mod compare;
pub mod fuzz;
pub mod generate;
pub mod rng;
pub mod run;
pub mod shuffle;

pub use compare::{compare_steps, Mismatch, MismatchKind, Report};
pub use fuzz::FuzzConfig;
pub use generate::{generate, GenSpec, Profile};
pub use rng::SplitMix64;
pub use run::{run_messages, run_stream, RunError, RunSummary, Session};
pub use shuffle::{shuffle, ShuffleSpec};
