//! Command-line driver for the oddindex verification experiments.
//!
//! [`run_experiment`] turns an [`ExperimentConfig`] into a list of
//! [`VerificationRecord`]s and [`emit_report`] serializes them as JSON, CSV
//! or a text table.

pub mod config;
pub mod experiments;
pub mod report;

pub use config::{Experiment, ExperimentConfig, Format, GeometryKind, UsageError};
pub use experiments::run_experiment;
pub use report::{emit_report, exit_code, parse_json_report, Quantity, VerificationRecord};
