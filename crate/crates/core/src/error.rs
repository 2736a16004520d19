use thiserror::Error;

/// Errors produced anywhere in the crate.
///
/// Variants fall into three groups: usage errors (bad arguments, shape or
/// variable mismatches), verification failures (an identity that should hold
/// exactly does not), and numerical trouble from the floating-point layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("polynomials are defined over different variable tables")]
    VarTableMismatch,
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("no value assigned to variable `{0}`")]
    MissingAssignment(String),
    #[error("matrix is {rows}x{cols}, expected a square matrix")]
    NotSquare { rows: usize, cols: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("cannot parse polynomial: {0}")]
    Parse(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unsupported family for this operation: {0}")]
    Unsupported(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("degenerate sample variance: m2 - m1^2 = {0}")]
    DegenerateVariance(f64),
    #[error("non-finite power sum at order {0}")]
    Overflow(usize),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by the caller's input rather than by a failed check.
    pub fn is_usage(&self) -> bool {
        !matches!(self, Error::Verification(_) | Error::Numerical(_) | Error::Io(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
