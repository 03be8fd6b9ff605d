use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Errors raised by the core operations.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument is malformed or outside the operation's domain.
    InvalidArgument(String),
    /// A precondition that callers are expected to uphold was broken.
    ContractViolation(String),
    /// A configuration is internally inconsistent.
    Config(String),
    /// A normalising norm was zero.
    DivisionGuard { what: &'static str, index: usize },
    /// A built-in diagnostic check failed.
    Diagnostic {
        message: String,
        indices: Vec<usize>,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::ContractViolation(msg) => write!(f, "contract violation: {msg}"),
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::DivisionGuard { what, index } => {
                write!(f, "zero {what} at index {index}")
            }
            Error::Diagnostic { message, indices } => {
                write!(f, "diagnostic failed: {message} (indices {indices:?})")
            }
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::error::Error::InvalidArgument(alloc::format!($($arg)*))
    };
}

macro_rules! contract {
    ($($arg:tt)*) => {
        $crate::error::Error::ContractViolation(alloc::format!($($arg)*))
    };
}

macro_rules! config_err {
    ($($arg:tt)*) => {
        $crate::error::Error::Config(alloc::format!($($arg)*))
    };
}

pub(crate) use {config_err, contract, invalid};
