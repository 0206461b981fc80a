use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("tape error: {0}")]
    Lifecycle(String),

    #[error("type error: {0}")]
    Kind(String),
}

pub type Result<T> = std::result::Result<T, Error>;
