//! Seeded Monte-Carlo sweeps, result output and the validation suite.

pub mod config;
pub mod output;
pub mod sweep;
pub mod validate;

pub use config::{ExponentMode, Strategy1Length, SweepConfig};
pub use output::{csv_string, summary_json, write_csv, CSV_HEADER};
pub use sweep::{run_sweep, run_sweep_with, Execution, SweepResult, SweepRow};
pub use validate::{validate, Check, ValidationLevel, ValidationOptions, ValidationReport};
