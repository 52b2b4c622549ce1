//! Crate-wide error type.

use std::fmt;

/// Convenience alias used by every fallible operation in the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the optimization stack and the reservoir proxy.
#[derive(Debug)]
pub enum Error {
    /// A vector's length does not match the expected dimensionality.
    DimensionMismatch { expected: usize, got: usize },
    /// A parameter or argument violates a documented precondition.
    InvalidArgument(String),
    /// An operation needed more data than the caller supplied.
    InsufficientData { needed: usize, got: usize },
    /// The objective evaluation budget is exhausted.
    BudgetExhausted { budget: usize },
    /// An attempt to insert a duplicate of an existing database entry.
    DuplicateEntry,
    /// Repeated attempts to generate a unique candidate all collided with the
    /// database (the feasible set is effectively exhausted).
    DuplicatesExhausted,
    /// A linear system (RBF Gram matrix) was numerically singular.
    IllConditioned(String),
    /// Leave-one-out deletion emptied a class (PNN cross-validation).
    DegenerateFold,
    /// A least-squares design matrix was rank deficient (repeated sigmas).
    RankDeficient,
    /// The pressure solve failed; carries the achieved relative residual.
    SolverFailure { residual: f64, message: String },
    /// CFL sub-stepping would exceed the hard cap.
    CflOverflow { required: usize, cap: usize },
    /// A simulation problem is structurally unsolvable (e.g. all wells one type).
    IllPosed(String),
    /// An unknown benchmark or case name was requested.
    UnknownName(String),
    /// Filesystem failure while reading or writing artifacts.
    Io(std::io::Error),
    /// Malformed serialized data (CSV / config files).
    Parse(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::InsufficientData { needed, got } => {
                write!(f, "insufficient data: needed {needed}, got {got}")
            }
            Error::BudgetExhausted { budget } => {
                write!(f, "evaluation budget of {budget} is exhausted")
            }
            Error::DuplicateEntry => write!(f, "duplicate of an existing database entry"),
            Error::DuplicatesExhausted => {
                write!(f, "could not generate a point distinct from the database")
            }
            Error::IllConditioned(msg) => write!(f, "ill-conditioned system: {msg}"),
            Error::DegenerateFold => {
                write!(f, "leave-one-out deletion emptied a class")
            }
            Error::RankDeficient => write!(f, "rank-deficient least-squares design"),
            Error::SolverFailure { residual, message } => {
                write!(
                    f,
                    "pressure solve failed ({message}); relative residual {residual:e}"
                )
            }
            Error::CflOverflow { required, cap } => {
                write!(f, "CFL sub-stepping needs {required} steps, cap is {cap}")
            }
            Error::IllPosed(msg) => write!(f, "ill-posed simulation: {msg}"),
            Error::UnknownName(name) => write!(f, "unknown name: {name:?}"),
            Error::Io(err) => write!(f, "i/o error: {err}"),
            Error::Parse(msg) => write!(f, "parse error: {msg}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(err) => Some(err),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err)
    }
}
