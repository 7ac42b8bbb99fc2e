use std::fmt;
use whitham_core::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Validation,
    Numerical,
    Check,
    Io,
}

/// An error with the exit status it maps to.
#[derive(Debug)]
pub struct Failure {
    pub kind: Kind,
    pub message: String,
}

impl Failure {
    pub fn validation(message: impl Into<String>) -> Self {
        Failure { kind: Kind::Validation, message: message.into() }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Failure { kind: Kind::Numerical, message: message.into() }
    }

    pub fn check(message: impl Into<String>) -> Self {
        Failure { kind: Kind::Check, message: message.into() }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Failure { kind: Kind::Io, message: message.into() }
    }

    /// Classifies a core error raised while running `context`.
    pub fn core(context: &str, e: Error) -> Self {
        let message = format!("{context}: {e}");
        match e {
            Error::NonFinite(_) | Error::ZeroSet(..) | Error::GridMismatch | Error::OutsideRegion { .. } => {
                Failure::numerical(message)
            }
            _ => Failure::validation(message),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            Kind::Io => 1,
            Kind::Validation => 2,
            Kind::Numerical => 3,
            Kind::Check => 4,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label = match self.kind {
            Kind::Validation => "invalid configuration",
            Kind::Numerical => "numerical failure",
            Kind::Check => "check failed",
            Kind::Io => "i/o error",
        };
        write!(f, "{label}: {}", self.message)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::io(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::io(e.to_string())
    }
}
