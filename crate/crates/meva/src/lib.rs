//! File formats, experiment runners, plots and the command line around
//! `meva-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod svg;
pub mod table;

pub use config::{Experiment, RunConfig};
pub use error::{CliError, Result};
