//! File formats, configuration and the command-line pipeline around
//! `posl-core`: `simulate`, `tune`, `run` and `report`.
//!
//! Every output carries a `# posl config_sha256=<hex> seeds=<...>` header
//! line (or a `provenance` field in JSON) and is written atomically.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod panel_csv;
pub mod report;
pub mod schema;

pub use config::{LoadedConfig, Overrides, RunConfig};
pub use error::{CliError, CliResult};
