use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quadrature did not reach tolerance: {0}")]
    AccuracyFailure(String),

    #[error("no sign change of the knee-field mismatch over h in [{lo:e}, {hi:e}]")]
    NoRoot { lo: f64, hi: f64 },

    #[error("knee-field mismatch changes sign in {} brackets: {brackets:?}", brackets.len())]
    AmbiguousRoot { brackets: Vec<(f64, f64)> },

    #[error("domain too small: front reaches {front:e} cm at t_end, need x_max >= {required_x_max:e} cm")]
    DomainTooSmall { front: f64, required_x_max: f64 },

    #[error("non-finite value at step {step}")]
    NumericalFailure { step: u64 },

    #[error("no e = e_c crossing in profile")]
    FrontNotFound,

    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
