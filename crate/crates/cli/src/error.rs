use std::fmt;

use nonlocal_core::Error;

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_INVALID_OBJECT: u8 = 3;
pub const EXIT_UNDEFINED_CONDITIONAL: u8 = 4;

/// An error with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::VanishingDenominator { .. } => EXIT_UNDEFINED_CONDITIONAL,
            Error::NegativeProbability { .. }
            | Error::NotNormalized { .. }
            | Error::Signalling { .. }
            | Error::InvalidWeights { .. }
            | Error::NotNormalizedState { .. }
            | Error::NotHermitian { .. }
            | Error::NotUnitary { .. }
            | Error::NotDensity { .. }
            | Error::NotBinaryObservable
            | Error::BasisNotOrthonormal { .. }
            | Error::IncompleteBasis { .. } => EXIT_INVALID_OBJECT,
            _ => EXIT_USAGE,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::usage(format!("i/o error: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::usage(format!("json: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::usage(format!("csv: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
