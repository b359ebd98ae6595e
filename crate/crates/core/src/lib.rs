pub mod adversary;
pub mod cli;
pub mod error;
pub mod experiment;
pub mod machine;
pub mod prob;
pub mod sem;
pub mod stats;

pub use error::{Error, Result};
