//! Command-line front end: TOML configs, named presets, and the writers for
//! metrics, snapshots and characteristic paths.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod presets;

pub use config::Config;
pub use error::CliError;
