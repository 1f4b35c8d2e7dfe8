//! Experiment runner, file formats and command line for `fracpinn-core`.

pub mod checkpoint;
pub mod compare;
pub mod error;
pub mod experiment;
pub mod format;
pub mod manifest;
pub mod output;
pub mod run;
pub mod selftest;
pub mod svg;

pub use error::{AppError, Result};
pub use experiment::{ExperimentConfig, Forcing, Layout, Overrides};
pub use run::{replay, run, RunOptions, RunOutput};
