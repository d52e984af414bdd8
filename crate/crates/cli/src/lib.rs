//! Command-line front end for `eigenkit`.
//!
//! Reads a JSON document, dispatches to one algorithm, and writes CSV tables
//! or JSON summaries. Every file this crate writes can be read back with the
//! readers in [`output`].

pub mod config;
pub mod output;
pub mod run;

pub use config::{parse_config, ConfigError, Document, StateSpec, UnitarySpec};
pub use run::{run, Command, RunConfig, RunOutcome, DEFAULT_SEED};
