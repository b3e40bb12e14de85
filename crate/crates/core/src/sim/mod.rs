//! In-process simulated multi-rank world.
//!
//! Each rank runs on its own worker thread, but the scheduler lets exactly
//! one of them execute at a time. Messages travel through an in-flight queue
//! whose delivery order is chosen by the configured [`Schedule`]; arrival
//! times follow a linear latency model in simulated nanoseconds. The result
//! is a reproducible run: the same config and seed yield the same
//! [`EventLog`].

mod config;
mod error;
mod log;
mod rank;
pub(crate) mod state;
mod world;

use std::fmt;

pub use config::{LatencyModel, MemoryModel, RmaConfig, Schedule, SimTime, TransportConfig, MICROSECOND, MILLISECOND};
pub use error::{BlockedRank, CommError, SimError};
pub use log::{Event, EventKind, EventLog};
pub use rank::{Rank, Request, Source, Status};
pub use state::TransportStats;
pub use world::{spawn_world, WorldOutput};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RankId(pub usize);

impl fmt::Display for RankId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<usize> for RankId {
    fn from(r: usize) -> Self {
        RankId(r)
    }
}
