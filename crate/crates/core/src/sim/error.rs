use thiserror::Error;

use super::RankId;

/// A rank that was still blocked when the world stalled, with what it was
/// waiting for.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockedRank {
    pub rank: RankId,
    pub waiting_for: String,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("invalid transport config: {0}")]
    InvalidConfig(String),
    #[error("deadlock: all ranks blocked with no messages in flight ({})", describe(.blocked))]
    Deadlock { blocked: Vec<BlockedRank> },
    #[error("rank {rank} panicked: {message}")]
    RankPanicked { rank: RankId, message: String },
    #[error("scheduler step limit of {0} exceeded")]
    StepLimit(u64),
}

fn describe(blocked: &[BlockedRank]) -> String {
    blocked
        .iter()
        .map(|b| format!("rank {} waiting for {}", b.rank, b.waiting_for))
        .collect::<Vec<_>>()
        .join("; ")
}

impl SimError {
    pub fn deadlocked_ranks(&self) -> Vec<RankId> {
        match self {
            SimError::Deadlock { blocked } => blocked.iter().map(|b| b.rank).collect(),
            _ => Vec::new(),
        }
    }
}

/// Errors returned by rank-side communication calls.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CommError {
    #[error("rank {0} is outside the world")]
    RankOutOfRange(usize),
    #[error("request {0} was already consumed")]
    ConsumedHandle(u64),
    #[error("request {0} does not belong to this rank")]
    ForeignHandle(u64),
    #[error("RMA operation outside access epoch")]
    OutsideEpoch,
    #[error("RMA access of {len} bytes at offset {offset} exceeds window of {window_len} bytes")]
    OutOfBounds {
        offset: usize,
        len: usize,
        window_len: usize,
    },
    #[error("rank {0} is not in the window group")]
    NotInGroup(RankId),
    #[error("rank {0} is not in the access group of the current epoch")]
    NotInAccessGroup(RankId),
    #[error("epoch error: {0}")]
    Epoch(String),
    #[error("no lock held on window")]
    LockNotHeld,
    #[error("lock support is disabled")]
    LocksDisabled,
    #[error("unknown window handle")]
    UnknownWindow,
    #[error("unknown region handle")]
    UnknownRegion,
}
