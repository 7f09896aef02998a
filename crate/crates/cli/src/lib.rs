//! Experiment harness over the verification stack: named experiments with
//! JSON configs, deterministic CSV/JSON artifacts, and run manifests.

pub mod checks;
pub mod config;
pub mod experiments;
pub mod io;
pub mod reftopo;

pub use config::ExperimentConfig;
pub use experiments::{run, ExperimentOutcome, EXPERIMENTS};
