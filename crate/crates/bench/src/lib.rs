//! Benchmark harness for the `matsketch` sketches: sweeps sketch sizes over a
//! dataset, repeats randomized algorithms across seeded trials, and reports
//! covariance error, projection error and sketching time.

pub mod algo;
pub mod config;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod report;

pub use algo::{AlgoSpec, Algorithm, PassModel};
pub use config::{ConfigFile, ExperimentConfig, Metrics, OutputFormat};
pub use dataset::DatasetSpec;
pub use error::BenchError;
pub use experiment::{run_experiment, summarize, RunOutput, Summary};
pub use report::emit_report;
