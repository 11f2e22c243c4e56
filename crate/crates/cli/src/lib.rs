//! Library side of the `mfcomp` command-line tool.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod commands;
pub mod error;
pub mod output;

pub use commands::run;
pub use error::{CliError, CliResult};
