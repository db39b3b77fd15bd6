//! Scenario files, presets and the run dispatcher behind the command line.

pub mod cases;
pub mod config;
pub mod report;
pub mod runner;

pub use cases::{run_case, CaseReport};
pub use config::{load_config, parse_config, CaseName, Format, RunKind, ScenarioConfig};
pub use report::{emit, Outcome, Report, Table};
pub use runner::run_scenario;

use crate::error::Error;

/// Process exit status for an error: 1 for bad input, 2 for numerical or I/O failure.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidConfig(_)
        | Error::InvalidArgument(_)
        | Error::ZeroSurfaceTension
        | Error::Json(_) => 1,
        _ => 2,
    }
}
