//! Configuration, reports, trace files, figures and the command workflows
//! behind the `l1rg` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod plots;
pub mod report;
pub mod trace_csv;

pub use config::ExperimentConfig;
pub use error::CliError;
