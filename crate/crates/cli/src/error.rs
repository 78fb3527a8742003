use std::fmt;

use scalesteer::Error;

/// Failure of a subcommand, split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad input or usage: missing or malformed files, invalid settings.
    Input(String),
    /// Anything else.
    Internal(String),
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        CliError::Internal(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::Internal(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Io { .. } | Error::Image { .. } | Error::Json(_) | Error::Parse(_) => {
                CliError::Input(msg)
            }
            Error::InvalidParameter(_)
            | Error::DimensionMismatch { .. }
            | Error::TooManyScales { .. }
            | Error::NotNormalized(_)
            | Error::TooFewChannels { .. }
            | Error::NoChannelInInterval { .. }
            | Error::PackingInfeasible { .. } => CliError::Input(msg),
            _ => CliError::Internal(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
