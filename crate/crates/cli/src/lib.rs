//! Command-line front end for `orthant-enet`.

pub mod config;
pub mod emit;
pub mod error;
pub mod ingest;
pub mod run;

pub use config::{build_config, Cli, RunConfig};
pub use error::{CliError, CliResult};
pub use run::execute;
