use std::fmt;

/// Failure class, mapped onto the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Usage,
    Data,
    Internal,
}

impl Kind {
    pub fn exit_code(self) -> i32 {
        match self {
            Kind::Usage => 1,
            Kind::Data => 2,
            Kind::Internal => 3,
        }
    }
}

#[derive(Debug)]
pub struct Failure {
    pub kind: Kind,
    pub error: anyhow::Error,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

pub type CliResult<T> = Result<T, Failure>;

/// Attach a failure class (and optionally a context line) to any error.
pub trait Classify<T> {
    fn or_fail(self, kind: Kind) -> CliResult<T>;
    fn or_fail_with(self, kind: Kind, context: impl FnOnce() -> String) -> CliResult<T>;
}

impl<T, E> Classify<T> for Result<T, E>
where
    E: Into<anyhow::Error>,
{
    fn or_fail(self, kind: Kind) -> CliResult<T> {
        self.map_err(|e| Failure { kind, error: e.into() })
    }

    fn or_fail_with(self, kind: Kind, context: impl FnOnce() -> String) -> CliResult<T> {
        self.map_err(|e| Failure { kind, error: e.into().context(context()) })
    }
}

pub fn usage(message: impl fmt::Display) -> Failure {
    Failure { kind: Kind::Usage, error: anyhow::anyhow!("{message}") }
}
