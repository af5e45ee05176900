//! Workload generators and the experiment runner.

pub mod config;
pub mod exp8;
pub mod fixtures;
pub mod gen;
pub mod run;
pub mod viewdir;

pub use config::{ConfigError, Experiment, ExperimentConfig, Params};
pub use run::{linear_fit, plan, run_experiment, CsvRow, Mode, Point, Report, CSV_HEADER};
pub use viewdir::{answer, QueryOutcome, ViewDir, ViewDirError};
