//! Benchmark harness: datasets, synthetic data, model runs and reports.

pub mod annotations;
pub mod bench;
pub mod clock;
pub mod dataset;
pub mod models;
pub mod optimize;
pub mod synth;
pub mod trace;

pub use bench::{run_benchmark, write_reports, BenchReport, RunOptions};
pub use dataset::{load_dataset, save_dataset, Dataset, DatasetError};
pub use models::{parse_models, Model};
pub use synth::{gen_synthetic, SynthConfig};
