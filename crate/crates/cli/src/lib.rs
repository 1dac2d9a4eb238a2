//! Library half of the `bohm` experiment runner: the experiment-config file
//! schema, job execution, and provenance-tracked output writing. The binary
//! in `main.rs` is a thin argument parser over [`runner::run`].

pub mod experiment;
pub mod output;
pub mod runner;

pub use experiment::{Command, ExperimentConfig, ValidationError};
pub use runner::{run, RunOptions, RunRecord};
