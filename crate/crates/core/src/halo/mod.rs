//! Halo swapping over the simulated transport.
//!
//! The API has four procedures: [`HaloSwapContext::init`],
//! [`HaloSwapContext::initiate`], [`HaloSwapContext::complete`] and
//! [`HaloSwapContext::finalise`]. A context picks one [`Backend`]; all of
//! them deliver the same bytes.

mod context;
mod neighbors;
mod options;
mod plan;
mod sizes;

pub use context::{ContextStats, HaloSwapContext, ReceiveView, SwapTiming};
pub use neighbors::{neighbor_table, Direction, Neighbor, NeighborTable, RegionKind};
pub use options::{Backend, Driving, EpochPlacement, HaloError, HaloOptions, PassiveVariant};
pub use plan::{
    plan_decomposition, plan_weak, plan_with_grid, rank_grid, split, DecompositionPlan, PlanError, DEFAULT_DEPTH,
    ELEMENT_SIZE,
};
pub use sizes::{halo_region_sizes, Accounting, FieldDescriptor};
