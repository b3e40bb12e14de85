use std::str::FromStr;

use super::neighbors::{neighbor_table, Direction, RegionKind};
use super::plan::DecompositionPlan;
use crate::sim::RankId;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldDescriptor {
    pub name: String,
    pub lx: usize,
    pub ly: usize,
    pub lz: usize,
    pub element_size: usize,
}

impl FieldDescriptor {
    pub fn for_rank(name: impl Into<String>, plan: &DecompositionPlan, rank: RankId) -> Self {
        let (lx, ly, lz) = plan.local_dims(rank);
        Self {
            name: name.into(),
            lx,
            ly,
            lz,
            element_size: plan.element_size,
        }
    }

    /// Bytes of one field's halo region of the given kind.
    pub fn region_bytes(&self, kind: RegionKind, depth: usize, accounting: Accounting) -> usize {
        let elems = match kind {
            RegionKind::FaceX => depth * self.ly * self.lz,
            RegionKind::FaceY => depth * self.lx * self.lz,
            RegionKind::Corner => match accounting {
                Accounting::Geometric => depth * depth * self.lz,
                Accounting::Column => depth * self.lz,
            },
        };
        elems * self.element_size
    }
}

/// How corner regions are sized. `Geometric` is what a swap moves;
/// `Column` counts one column of corner points per layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Accounting {
    #[default]
    Geometric,
    Column,
}

impl FromStr for Accounting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "geometric" => Ok(Accounting::Geometric),
            "column" => Ok(Accounting::Column),
            other => Err(format!("unknown accounting '{other}'")),
        }
    }
}

/// Bytes per neighbor of `rank`, summed over fields, in table order.
pub fn halo_region_sizes(
    fields: &[FieldDescriptor],
    plan: &DecompositionPlan,
    rank: RankId,
    accounting: Accounting,
) -> Vec<(Direction, usize)> {
    neighbor_table(plan, rank)
        .entries
        .iter()
        .map(|n| {
            let bytes = fields
                .iter()
                .map(|f| f.region_bytes(n.kind, plan.depth, accounting))
                .sum();
            (n.direction, bytes)
        })
        .collect()
}
