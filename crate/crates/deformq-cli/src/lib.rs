//! Scenario runner and report emitter for the deformq checks.

pub mod report;
pub mod run;

pub use report::{emit_report, Check, Format, Report};
pub use run::{run_scenario, CliError, Kind, Scenario};
