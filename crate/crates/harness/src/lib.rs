//! Seeded experiment runner for the POGD comparisons: configuration,
//! training loops, metrics CSV and comparison reports.

pub mod config;
pub mod error;
pub mod metrics;
pub mod report;
pub mod run;
pub mod schedule;
pub mod seeds;

pub use config::{parse_config, DatasetConfig, ExperimentConfig, ModelConfig, OptimizerConfig};
pub use error::{Abort, ConfigError, HarnessError, Result};
pub use schedule::LrSchedule;
pub use metrics::{read_metrics, write_metrics, MetricsRecord};
pub use run::{run_experiment, run_testfn, Evaluation, Experiment, RunOutput, Split, TestfnOutput};
pub use report::{compare_report, Report, ReportOptions};
