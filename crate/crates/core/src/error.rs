use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A scalar parameter is outside its admissible domain.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Intermediate moments overflowed to a non-finite value.
    #[error("non-finite {quantity} for lognormal parameters (mu={mu}, sigma2={sigma2})")]
    NonFiniteMoment {
        quantity: &'static str,
        mu: f64,
        sigma2: f64,
    },

    /// The instance breaks one of its structural invariants.
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    /// A schedule does not cover the instance it is evaluated against.
    #[error("schedule has no start time for patient `{patient}`")]
    MissingPatient { patient: String },

    #[error("schedule has {got} start times but the instance has {expected} patients")]
    ScheduleLength { expected: usize, got: usize },

    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),

    #[error("invalid solver config: {0}")]
    InvalidConfig(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
