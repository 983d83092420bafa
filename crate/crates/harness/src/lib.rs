//! Experiment orchestration: configs, t-ladder runs, reports and the
//! acceptance suite behind the `shc` binary.

pub mod config;
pub mod error;
pub mod moments;
pub mod oracle;
pub mod properties;
pub mod report;
pub mod runner;
pub mod suite;

pub use config::{ExperimentConfig, SuiteConfig};
pub use error::{HarnessError, Result};
pub use report::{ExperimentReport, Row, Verdict};
pub use runner::{run_experiment, RunOptions};
pub use suite::{load_suite, run_acceptance_suite, SuiteOptions, SuiteSummary};
