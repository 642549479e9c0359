//! Experiment orchestration: configuration, channel CSV exchange, and the
//! end-to-end with/without-mixing comparison runner.

pub mod config;
pub mod csvio;
pub mod runner;
