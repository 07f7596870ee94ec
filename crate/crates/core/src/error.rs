use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("scenario placement failed: {0}")]
    Placement(String),
    #[error("free-state sampling exhausted after {0} attempts")]
    SamplingExhausted(usize),
    #[error("roadmap is disconnected between start and goal")]
    DisconnectedRoadmap,
    #[error("singular trajectory system: {0}")]
    Singular(String),
    #[error("value {value} outside open interval (-{limit}, {limit})")]
    Domain { value: f64, limit: f64 },
    #[error("whole-body initialization failed: {0}")]
    InitFailure(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
