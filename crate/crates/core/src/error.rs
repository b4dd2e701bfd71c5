use thiserror::Error;

/// Failure modes shared by every computation in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// A quadrature or tail bound missed its tolerance. `partial` is the best
    /// estimate available when the computation gave up.
    #[error("numeric failure in {context}: partial {partial:e}, error bound {error_bound:e}")]
    NumericFailure {
        context: String,
        partial: f64,
        error_bound: f64,
    },

    #[error("Luxemburg norm is unbounded: modular still above one at scale {last_scale:e}")]
    UnboundedNorm { last_scale: f64 },

    #[error("companion construction failed: {0}")]
    ConstructionFailure(String),

    #[error("limit study failed: {0}")]
    StudyFailure(String),
}

impl Error {
    /// Short machine-readable tag used by the command-line front end.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::DegenerateInput(_) => "degenerate-input",
            Error::NumericFailure { .. } => "numeric-failure",
            Error::UnboundedNorm { .. } => "unbounded-norm",
            Error::ConstructionFailure(_) => "construction-failure",
            Error::StudyFailure(_) => "study-failure",
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn numeric(context: impl Into<String>, partial: f64, error_bound: f64) -> Self {
        Error::NumericFailure {
            context: context.into(),
            partial,
            error_bound,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
