//! Batch front end for the epi-lab toolkit: run specs, dispatch and reports.

pub mod report;
pub mod run;
pub mod spec;

pub use run::{execute, Report, RunError};
pub use spec::{Cli, Command, Format, Param, RunSpec, UsageError};
