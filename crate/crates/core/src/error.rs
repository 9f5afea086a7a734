use thiserror::Error;

use crate::model::{EsrId, PartnerId};

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid assignment for {esr}: {reason}")]
    InvalidAssignment { esr: EsrId, reason: String },

    #[error("network is disconnected: no path between {0} and {1}")]
    Disconnected(PartnerId, PartnerId),

    #[error("missing visit lengths for {0}")]
    MissingData(EsrId),

    #[error("infeasible placement for {esr}: only {eligible} eligible host(s), need 2")]
    Infeasible { esr: EsrId, eligible: usize },

    #[error("search space of {size} candidates exceeds the limit of {limit}")]
    SpaceTooLarge { size: u128, limit: u128 },

    #[error("schema error at `{field}` (line {line}): {message}")]
    Schema {
        field: String,
        line: usize,
        message: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
