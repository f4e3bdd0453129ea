use thiserror::Error;

use crate::model::SubfileId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// `t = KM/N` is not an integer; the caller has to go through memory sharing.
    #[error("t = {numer}/{denom} is not integral, memory sharing required")]
    RequiresMemorySharing { numer: i128, denom: i128 },

    #[error("cache {cache} over budget: {used} > {budget} bytes")]
    BudgetExceeded {
        cache: usize,
        used: usize,
        budget: usize,
    },

    #[error("user {user} cannot decode: missing {missing}")]
    DecodeFailure { user: usize, missing: String },

    #[error("missing subfile {0:?}")]
    MissingSubfile(SubfileId),

    #[error("insufficient shares: have {have}, need {need}")]
    InsufficientShares { have: usize, need: usize },

    #[error("no valid level partition at M = {memory}")]
    NoValidPartition { memory: f64 },

    #[error("ambiguous level partition: {} candidates", .0.len())]
    AmbiguousPartition(Vec<crate::multilevel::LevelPartitionMu>),

    #[error("coloring degenerates to chi = 0; use PCD instead")]
    DegenerateColoring,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
