use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Failure classes shared by every module.
///
/// `Budget` is a first-class outcome rather than a panic so that sweeps can
/// record an infeasible cell and move on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Error {
    /// An argument violated an operation's precondition.
    Invalid(String),
    /// The computation would exceed a configured resource cap.
    Budget {
        resource: &'static str,
        attempted: u128,
        limit: u128,
        hint: &'static str,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Invalid(msg) => write!(f, "invalid input: {msg}"),
            Error::Budget {
                resource,
                attempted,
                limit,
                hint,
            } => {
                write!(f, "{resource} of {attempted} exceeds the budget of {limit}")?;
                if !hint.is_empty() {
                    write!(f, "; {hint}")?;
                }
                Ok(())
            }
        }
    }
}

impl core::error::Error for Error {}
