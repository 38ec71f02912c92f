//! Configuration-driven experiment runner for Fourier Learning Machines.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod manifest;
pub mod output;
pub mod runner;

pub use config::{parse_seeds, Experiment, RunConfig};
pub use error::{CliError, Result};
pub use manifest::{RunManifest, SeedRecord, Status};
pub use runner::execute;
