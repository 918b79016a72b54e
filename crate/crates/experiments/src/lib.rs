//! Benchmark drivers and reports.

pub mod common;
pub mod block;
pub mod cli;
pub mod coupling;
pub mod error;
pub mod fields;
pub mod hertz;
pub mod kirchhoff;
pub mod patch;
pub mod report;
pub mod rod;

pub use error::{ExperimentError, Result};
pub use report::{fit_rate, Cell, CsvTable, ExperimentReport};
