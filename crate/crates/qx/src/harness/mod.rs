//! Experiment orchestration: configuration, dataset I/O, judgement
//! subsampling, synthetic collection generation, the seed-by-K sweep, and
//! report emission.

pub mod config;
pub mod dataset;
pub mod report;
pub mod subsample;
pub mod sweep;
pub mod synth;

pub use config::ExperimentConfig;
pub use report::emit_report;
pub use subsample::subsample_qrels;
pub use sweep::{run_experiment, SweepResult, SweepRow};
pub use synth::{generate_synthetic, SyntheticData, SyntheticSpec};
