//! Scenario drivers and report rendering behind the `dilution` binary.

pub mod report;
pub mod scenarios;

pub use report::{Format, ScenarioReport};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("input: {0}")]
    Input(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Input(_) => EXIT_INPUT,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<dilution_core::Error> for CliError {
    fn from(e: dilution_core::Error) -> Self {
        use dilution_core::Error;
        match e {
            Error::InvalidArgument(_) | Error::ResourceLimit(_) => CliError::Usage(e.to_string()),
            Error::Format(_) => CliError::Input(e.to_string()),
            Error::Numerical(_) => CliError::Numerical(e.to_string()),
        }
    }
}

pub const EXIT_PASS: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;
