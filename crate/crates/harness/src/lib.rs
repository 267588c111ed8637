//! Synthetic catalogs, ablation runs, metrics and reports for the outfit
//! engine.

pub mod ablation;
pub mod experiment;
pub mod report;
pub mod run;
pub mod synth;

pub use ablation::AblationConfig;
pub use experiment::{run_experiment, Experiment, ExperimentOptions};
