use thiserror::Error;

pub type Result<T> = std::result::Result<T, QhdError>;

#[derive(Debug, Error)]
pub enum QhdError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("field length {got} does not match grid size {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("non-finite value produced in {stage}")]
    NonFinite { stage: String },

    #[error("density has vacuum points (min rho = {min_rho:e}) where a strictly positive density is required")]
    Vacuum { min_rho: f64 },

    #[error("diagnostic unavailable: {0}")]
    Unavailable(String),

    #[error("malformed field dump: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl QhdError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        QhdError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
