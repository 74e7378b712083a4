// SPDX-License-Identifier: Apache-2.0

//! Configuration loading and the `simulate`, `analyze` and `sweep` commands
//! behind the `fluorsim` binary.

pub mod commands;
pub mod config;
pub mod error;

pub use commands::{cmd_analyze, cmd_simulate, cmd_sweep, Overrides};
pub use config::Config;
pub use error::{CliError, CliResult};
