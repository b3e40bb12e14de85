//! Coordinate-encoded test fields and the timestep driver.
//!
//! Every cell holds an integer encoding of its global coordinates and field
//! index, so a halo is correct exactly when its bits equal the encoding.

mod field;
mod run;

use thiserror::Error;

pub use field::{
    fields_digest, make_field, pack_halo, sentinel, unpack_halo, verify_halos, verify_interior, Encoding, Field,
    Mismatch, SENTINEL_BITS,
};
pub use run::{parse_duration, run_timesteps, simulate, ComputeDelay, RankRun, RunOutcome, StepStats, TimestepConfig};

use crate::halo::HaloError;
use crate::sim::{RankId, SimError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error(transparent)]
    Halo(#[from] HaloError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("buffer of {got} bytes where {expected} were expected")]
    Size { expected: usize, got: usize },
    #[error("plan has {plan} ranks but the world has {world}")]
    RankCount { plan: usize, world: usize },
    #[error(
        "rank {rank}: {count} halo mismatch(es); first in field {field} at ({}, {}, {}): expected {:?}, found {:?}",
        first.i, first.j, first.k, first.expected, first.found
    )]
    Mismatch {
        rank: RankId,
        count: usize,
        field: usize,
        first: Mismatch,
    },
}
