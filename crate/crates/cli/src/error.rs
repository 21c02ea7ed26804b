use std::fmt;

use decoupling_core::Error as CoreError;

/// Process exit statuses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ExitClass {
    Success = 0,
    Io = 1,
    Validation = 2,
    Resource = 3,
    NonConvergence = 4,
}

impl ExitClass {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ExitClass::Success => "ok",
            ExitClass::Io => "io",
            ExitClass::Validation => "invalid",
            ExitClass::Resource => "budget",
            ExitClass::NonConvergence => "not-converged",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CliError {
    pub class: ExitClass,
    pub message: String,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        CliError {
            class: ExitClass::Validation,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        CliError {
            class: ExitClass::Io,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.class.as_str(), self.message)
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        let class = match err {
            CoreError::Invalid(_) => ExitClass::Validation,
            CoreError::Budget { .. } => ExitClass::Resource,
        };
        CliError {
            class,
            message: err.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::io(err.to_string())
    }
}
