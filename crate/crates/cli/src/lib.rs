//! Batch front end: reads a TOML run configuration, solves the problem it
//! describes, runs the requested checks and produces a JSON or text report.

pub mod config;
pub mod report;
pub mod run;

pub use config::{build_problem, load_config, parse_config, Check, RunConfig, SCHEMA_VERSION};
pub use report::{emit_report, ErrorReport, Format, RunReport, Status};
pub use run::{run_config, run_parsed, Mode, Overrides};

#[derive(Debug, Clone, PartialEq)]
pub enum RunError {
    /// The configuration could not be read, parsed or interpreted.
    Config(String),
    Solver(elliptic_core::Error),
}

impl RunError {
    pub fn code(&self) -> &'static str {
        match self {
            RunError::Config(_) => "config_error",
            RunError::Solver(e) => e.code(),
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "config: {m}"),
            RunError::Solver(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<elliptic_core::Error> for RunError {
    fn from(e: elliptic_core::Error) -> Self {
        RunError::Solver(e)
    }
}
