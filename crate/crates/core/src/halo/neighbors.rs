use std::fmt;

use super::plan::DecompositionPlan;
use crate::sim::RankId;

/// Neighbor directions in canonical order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    XMinus,
    XPlus,
    YMinus,
    YPlus,
    XMinusYMinus,
    XMinusYPlus,
    XPlusYMinus,
    XPlusYPlus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RegionKind {
    FaceX,
    FaceY,
    Corner,
}

impl Direction {
    pub const ALL: [Direction; 8] = [
        Direction::XMinus,
        Direction::XPlus,
        Direction::YMinus,
        Direction::YPlus,
        Direction::XMinusYMinus,
        Direction::XMinusYPlus,
        Direction::XPlusYMinus,
        Direction::XPlusYPlus,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Unit step along x and y.
    pub fn step(self) -> (i64, i64) {
        match self {
            Direction::XMinus => (-1, 0),
            Direction::XPlus => (1, 0),
            Direction::YMinus => (0, -1),
            Direction::YPlus => (0, 1),
            Direction::XMinusYMinus => (-1, -1),
            Direction::XMinusYPlus => (-1, 1),
            Direction::XPlusYMinus => (1, -1),
            Direction::XPlusYPlus => (1, 1),
        }
    }

    pub fn from_step(step: (i64, i64)) -> Option<Direction> {
        Direction::ALL.into_iter().find(|d| d.step() == step)
    }

    pub fn opposite(self) -> Direction {
        let (sx, sy) = self.step();
        Direction::from_step((-sx, -sy)).expect("every direction has an opposite")
    }

    pub fn kind(self) -> RegionKind {
        match self.step() {
            (_, 0) => RegionKind::FaceX,
            (0, _) => RegionKind::FaceY,
            _ => RegionKind::Corner,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Direction::XMinus => "x-",
            Direction::XPlus => "x+",
            Direction::YMinus => "y-",
            Direction::YPlus => "y+",
            Direction::XMinusYMinus => "x-y-",
            Direction::XMinusYPlus => "x-y+",
            Direction::XPlusYMinus => "x+y-",
            Direction::XPlusYPlus => "x+y+",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Neighbor {
    pub direction: Direction,
    pub rank: RankId,
    pub kind: RegionKind,
}

/// A rank's neighbors in canonical order. Boundary ranks of bounded
/// domains have fewer than eight entries; periodic tables always have
/// eight, possibly repeating ranks or naming the owner itself.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NeighborTable {
    pub entries: Vec<Neighbor>,
}

impl NeighborTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, dir: Direction) -> Option<&Neighbor> {
        self.entries.iter().find(|n| n.direction == dir)
    }

    pub fn position(&self, dir: Direction) -> Option<usize> {
        self.entries.iter().position(|n| n.direction == dir)
    }

    /// Sorted distinct neighbor ranks.
    pub fn distinct_ranks(&self) -> Vec<RankId> {
        let mut r: Vec<RankId> = self.entries.iter().map(|n| n.rank).collect();
        r.sort_unstable();
        r.dedup();
        r
    }
}

pub fn neighbor_table(plan: &DecompositionPlan, rank: RankId) -> NeighborTable {
    let (ix, iy) = plan.coords(rank);
    let (px, py) = (plan.px as i64, plan.py as i64);
    let entries = Direction::ALL
        .into_iter()
        .filter_map(|d| {
            let (sx, sy) = d.step();
            let (mut nx, mut ny) = (ix as i64 + sx, iy as i64 + sy);
            if plan.periodic {
                nx = nx.rem_euclid(px);
                ny = ny.rem_euclid(py);
            } else if !(0..px).contains(&nx) || !(0..py).contains(&ny) {
                return None;
            }
            Some(Neighbor {
                direction: d,
                rank: plan.rank_at(nx as usize, ny as usize),
                kind: d.kind(),
            })
        })
        .collect();
    NeighborTable { entries }
}
