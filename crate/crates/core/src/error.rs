use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Input data is malformed (non-finite samples, empty meshes, ...).
    #[error("invalid input: {0}")]
    Input(String),

    #[error("grid mismatch: {left} vs {right} points per axis")]
    GridMismatch { left: usize, right: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("step rejected at t = {t}: dt = {dt} exceeds the CFL limit {limit}")]
    Cfl { t: f64, dt: f64, limit: f64 },

    #[error("non-finite state detected at t = {t}")]
    NonFinite { t: f64 },

    #[error("spectral tail holds {fraction:.3e} of the enstrophy at t = {t} (limit {limit:.1e})")]
    SpectralTail { t: f64, fraction: f64, limit: f64 },

    #[error("certification failed: {0}")]
    Certification(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("trajectory for nu = {nu} failed: {source}")]
    Sweep {
        nu: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
