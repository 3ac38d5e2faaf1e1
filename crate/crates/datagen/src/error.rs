use thiserror::Error;

use crate::backend::BackendError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] instrir_core::Error),

    #[error(transparent)]
    Backend(#[from] BackendError),

    #[error("malformed model response: {0}")]
    Response(String),

    #[error("query `{query_id}`: need {need} negatives but only {have} are available")]
    InsufficientNegatives {
        query_id: String,
        need: usize,
        have: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
