//! Experiment plumbing behind the `swipt` binary: scenario files, sweeps,
//! leakage histograms and JSON reports.

pub mod config;
pub mod error;
pub mod histogram;
pub mod report;
pub mod seeds;
pub mod sweep;

pub use config::ScenarioFile;
pub use error::CliError;
pub use sweep::SweepSpec;
