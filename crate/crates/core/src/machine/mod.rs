//! Probabilistic Moore machines with high/low channel partitions.

pub mod catalog;
mod check;
mod file;
mod model;
mod trace;

pub(crate) use file::{AlphabetsDoc, NullTokens};

pub use check::{enumeration_size, CheckOptions, NiVerdict, Witness, DEFAULT_BUDGET};
pub use model::{Alphabet, Channels, InputPair, MooreMachine, OutputPair, StateId};
pub use trace::{low_of, project_low, IoSequence, LowProjection, LowSeq, TraceDistribution};
