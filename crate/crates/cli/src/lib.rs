//! Experiment runner for text/graph alignment: configuration handling and
//! the commands behind the `taga` binary.

pub mod commands;
pub mod config;

pub use config::{Mode, Overrides, RunConfig};
