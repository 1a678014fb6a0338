use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("model is not quadratic in fermions: {0}")]
    NotQuadratic(String),

    #[error("coupling matrix is not antisymmetric (max |A + A^T| = {0:e})")]
    NotAntisymmetric(f64),

    #[error("{sites} sites exceeds the cap of {cap}")]
    SizeCap { sites: usize, cap: usize },

    #[error("invalid excitation: {0}")]
    InvalidExcitation(String),

    #[error("unphysical correlation matrix: eigenvalue {value} outside [-1, 1]")]
    Unphysical { value: f64 },

    #[error("eigensolver did not converge after {iterations} iterations (residuals {residuals:?})")]
    NonConvergence {
        iterations: usize,
        residuals: Vec<f64>,
    },

    #[error("transfer map is not injective (relative gap {gap:e})")]
    NonInjective { gap: f64 },

    #[error("matrix is not positive definite (smallest eigenvalue {0:e})")]
    NotPositiveDefinite(f64),

    #[error("excitation tensor lies in the gauge orbit of the ground-state tensor")]
    DegenerateExcitation,

    #[error("excitation tensor violates the left-gauge condition (residual {0:e})")]
    GaugeViolation(f64),

    #[error("correlation length undefined for a gapless chain (bulk gap {gap:e})")]
    Gapless { gap: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// Configuration-type errors: the request itself was malformed.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidModel(_)
                | Error::NotQuadratic(_)
                | Error::InvalidExcitation(_)
                | Error::InvalidInput(_)
        )
    }

    pub fn is_size_cap(&self) -> bool {
        matches!(self, Error::SizeCap { .. })
    }
}
