use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch in {what}: expected {expected}, found {found}")]
    Shape {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("sequencing error in {what}: expected timestamp {expected}, found {found}")]
    Sequencing {
        what: &'static str,
        expected: i64,
        found: i64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid value: {0}")]
    Invalid(String),

    #[error("validation failed with {} violation(s):\n  - {}", .0.len(), .0.join("\n  - "))]
    Validation(Vec<String>),

    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("parse error at line {line}: {message}")]
    Parse {
        kind: ParseKind,
        line: usize,
        message: String,
    },

    #[error(
        "infeasible row {row} ({name}): all relationship strengths are zero but target is {target}"
    )]
    InfeasibleRow {
        row: usize,
        name: String,
        target: f64,
    },

    #[error("degenerate ranking: observation matrix has zero variance, all subsystems tied")]
    DegenerateRanking,

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("io error: {0}")]
    Io(String),
}

/// Distinguishes table parse failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseKind {
    MissingHeader,
    NonNumeric,
    NonMonotone,
    Shape,
    Range,
}

impl Error {
    /// Numerical failures as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::InfeasibleRow { .. } | Error::DegenerateRanking | Error::NoConvergence(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
