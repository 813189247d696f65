use thiserror::Error;

/// Structural errors: malformed inputs and violated preconditions.
///
/// Numerical non-convergence is not an error; it is reported through the
/// solver status and the certificate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("NaN encountered in {0}")]
    NotANumber(&'static str),

    #[error("support mismatch: {0}")]
    SupportMismatch(String),

    #[error("empty box: lower bound exceeds upper bound at coordinate {0}")]
    EmptyBox(usize),

    #[error("marginal masses differ: {0}")]
    MarginalMismatch(String),

    #[error("diagnostic unavailable: {0}")]
    DiagnosticUnavailable(String),

    #[error("degenerate gauge: {0}")]
    DegenerateNorm(String),

    #[error("problem too large for {what}: {size} exceeds limit {limit}")]
    TooLarge {
        what: &'static str,
        size: usize,
        limit: usize,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}
