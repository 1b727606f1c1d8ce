//! Compositional explanations of neurons over clustered activation ranges.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod fsutil;
pub mod heuristics;
pub mod interchange;
pub mod maskops;
pub mod metrics;
pub mod ratio;
pub mod report;
pub mod search;
pub mod synth;
pub mod thresholds;

pub use error::{Error, Result};
pub use ratio::Ratio;
