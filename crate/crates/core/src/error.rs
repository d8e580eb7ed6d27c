use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the domain of the function or operator.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter or configuration value failed validation.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Quadrature or iteration did not reach the requested accuracy.
    #[error("numerical failure in {what}: achieved estimate {estimate:e}")]
    Numerical { what: String, estimate: f64 },

    /// Grid or step too coarse/fine for the requested computation.
    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A theorem hypothesis required by a check does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Lattice enumeration exceeded its node budget.
    #[error("enumeration budget of {budget} nodes exceeded ({partial} eigenvalues collected)")]
    Budget { budget: usize, partial: usize },

    /// Assembled matrices violate a structural requirement (symmetry, definiteness).
    #[error("assembly integrity: {0}")]
    Integrity(String),

    /// The coercivity condition failed; the solve was still carried out.
    #[error("coercivity not certified: min V = {min_v} < required {required}")]
    Uncertified {
        min_v: f64,
        required: f64,
        solution: Box<crate::dirichlet::PoissonSolution>,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// True for errors caused by bad user input rather than numerical trouble.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::Config(_)
                | Error::Unsupported(_)
                | Error::Precondition(_)
                | Error::Degenerate(_)
        )
    }
}
