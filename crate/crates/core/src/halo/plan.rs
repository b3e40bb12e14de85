use std::fmt;

use thiserror::Error;

use crate::sim::RankId;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlanError {
    #[error("at least one rank is required")]
    NoRanks,
    #[error("stencil depth must be at least 1")]
    ZeroDepth,
    #[error("rank grid {px}x{py} does not hold {n_ranks} ranks")]
    GridMismatch { px: usize, py: usize, n_ranks: usize },
    #[error("rank {rank} gets local dims {lx}x{ly}x{lz}, narrower than depth {depth} or empty in z")]
    LocalTooSmall {
        rank: RankId,
        lx: usize,
        ly: usize,
        lz: usize,
        depth: usize,
    },
}

/// Split of a 3-D grid over a 2-D rank grid. The z dimension is never
/// decomposed. Ranks are numbered row-major: `rank = iy * px + ix`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecompositionPlan {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub px: usize,
    pub py: usize,
    pub periodic: bool,
    pub depth: usize,
    pub element_size: usize,
}

pub const DEFAULT_DEPTH: usize = 2;
pub const ELEMENT_SIZE: usize = 8;

/// Rank grid for `n` ranks: the factor pair closest to square, with the
/// larger factor along x.
pub fn rank_grid(n: usize) -> (usize, usize) {
    let mut py = 1;
    let mut d = 1;
    while d * d <= n {
        if n.is_multiple_of(d) {
            py = d;
        }
        d += 1;
    }
    (n / py.max(1), py.max(1))
}

/// Length and start of block `i` when `n` points are split over `p` blocks.
/// Remainder points go to the lowest blocks.
pub fn split(n: usize, p: usize, i: usize) -> (usize, usize) {
    let base = n / p;
    let rem = n % p;
    (base + usize::from(i < rem), i * base + i.min(rem))
}

pub fn plan_decomposition(
    global: (usize, usize, usize),
    n_ranks: usize,
    periodic: bool,
    depth: usize,
) -> Result<DecompositionPlan, PlanError> {
    if n_ranks == 0 {
        return Err(PlanError::NoRanks);
    }
    let (px, py) = rank_grid(n_ranks);
    plan_with_grid(global, (px, py), periodic, depth)
}

/// Plan over an explicit rank grid.
pub fn plan_with_grid(
    global: (usize, usize, usize),
    (px, py): (usize, usize),
    periodic: bool,
    depth: usize,
) -> Result<DecompositionPlan, PlanError> {
    if px == 0 || py == 0 {
        return Err(PlanError::NoRanks);
    }
    if depth == 0 {
        return Err(PlanError::ZeroDepth);
    }
    let plan = DecompositionPlan {
        nx: global.0,
        ny: global.1,
        nz: global.2,
        px,
        py,
        periodic,
        depth,
        element_size: ELEMENT_SIZE,
    };
    // The smallest blocks are the last ones along each axis.
    let last = RankId(plan.n_ranks() - 1);
    let (lx, ly, lz) = plan.local_dims(last);
    if lx < depth || ly < depth || lz == 0 {
        return Err(PlanError::LocalTooSmall {
            rank: last,
            lx,
            ly,
            lz,
            depth,
        });
    }
    Ok(plan)
}

/// Plan whose every rank owns exactly `local` points.
pub fn plan_weak(
    local: (usize, usize, usize),
    n_ranks: usize,
    periodic: bool,
    depth: usize,
) -> Result<DecompositionPlan, PlanError> {
    if n_ranks == 0 {
        return Err(PlanError::NoRanks);
    }
    let (px, py) = rank_grid(n_ranks);
    plan_with_grid((local.0 * px, local.1 * py, local.2), (px, py), periodic, depth)
}

impl DecompositionPlan {
    pub fn n_ranks(&self) -> usize {
        self.px * self.py
    }

    pub fn coords(&self, rank: RankId) -> (usize, usize) {
        (rank.0 % self.px, rank.0 / self.px)
    }

    pub fn rank_at(&self, ix: usize, iy: usize) -> RankId {
        RankId(iy * self.px + ix)
    }

    pub fn local_dims(&self, rank: RankId) -> (usize, usize, usize) {
        let (ix, iy) = self.coords(rank);
        (split(self.nx, self.px, ix).0, split(self.ny, self.py, iy).0, self.nz)
    }

    /// Global coordinates of the rank's first interior point.
    pub fn origin(&self, rank: RankId) -> (usize, usize) {
        let (ix, iy) = self.coords(rank);
        (split(self.nx, self.px, ix).1, split(self.ny, self.py, iy).1)
    }

    pub fn local_points(&self, rank: RankId) -> usize {
        let (lx, ly, lz) = self.local_dims(rank);
        lx * ly * lz
    }
}

impl fmt::Display for DecompositionPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}x{}x{} over {}x{} ranks, depth {}, {}",
            self.nx,
            self.ny,
            self.nz,
            self.px,
            self.py,
            self.depth,
            if self.periodic { "periodic" } else { "bounded" }
        )
    }
}
