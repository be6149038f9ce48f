use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("linear algebra failure: {0}")]
    Linalg(String),
    #[error("quadrature failure: {0}")]
    Quadrature(String),
    #[error("integration aborted at step {step} (t = {time}): {reason}")]
    IntegrationAborted {
        step: usize,
        time: f64,
        reason: String,
    },
    #[error("singular restricted operator: {0}")]
    Singular(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("spectral analysis failed: {0}")]
    Spectral(String),
    #[error("scenario file error: {0}")]
    ScenarioFile(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
