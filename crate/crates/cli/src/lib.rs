//! Command-line front end of the contact solver.

pub mod args;
pub mod config;
pub mod run;

pub use args::Cli;
pub use config::{ConfigError, RunConfig};
pub use run::{run, RunError, RunSummary};
