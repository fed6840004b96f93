//! Command-line driver for the quadgrad experiments.
//!
//! `quadgrad <scenario> --config <path> [--out <dir>] [--seed <int>]` runs one
//! of the scenarios in [`scenarios`] and writes CSV/JSON artifacts. Exit
//! codes: 0 success, 1 usage, 2 validation, 3 solver, 4 assertion.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod scenarios;
pub mod suite;

pub use config::{parse_config, RunConfig, Scenario};
pub use error::{CliError, Result};
pub use scenarios::{run, RunReport};
