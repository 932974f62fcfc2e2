//! Golden Rank evaluation for extractive question answering.
//!
//! Start with [`rank::score_experiment`] for a single run, or
//! [`report::consolidated_report`] for a fleet of runs.

pub mod corpus;
pub mod ensemble;
pub mod error;
pub mod fleet;
pub mod rank;
pub mod report;
pub mod spanex;
pub mod synth;
pub mod textnorm;

pub use error::{Error, Result};
