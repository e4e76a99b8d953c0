use thiserror::Error;

/// Errors raised by the library. Every variant carries enough context to be
/// turned into a structured report entry by the CLI.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// A vector that must lie in a subspace has a component outside of it.
    #[error("{what} is outside the admissible subspace (off-subspace norm {residual:.3e})")]
    Domain { what: &'static str, residual: f64 },

    #[error("construction failed: {0}")]
    Construction(String),

    #[error("no convergence after {iterations} iterations (last residual {residual:.3e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("unsupported: {0}")]
    Capability(String),

    #[error("oracle failure: {0}")]
    Oracle(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    /// Stable machine-readable code used in reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Input(_) => "invalid_input",
            Error::Dimension { .. } => "dimension_mismatch",
            Error::Domain { what, .. } if *what == "right-hand side" => "rhs_not_in_H_minus_1",
            Error::Domain { .. } => "domain_error",
            Error::Construction(_) => "construction_error",
            Error::Convergence { .. } => "convergence_failure",
            Error::Capability(_) => "unsupported",
            Error::Oracle(_) => "oracle_failure",
            Error::Io(_) => "io_error",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension {
            context,
            expected,
            got,
        })
    }
}
