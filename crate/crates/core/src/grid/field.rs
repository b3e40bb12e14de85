use std::collections::hash_map::DefaultHasher;
use std::hash::Hasher;
use std::ops::Range;

use super::GridError;
use crate::halo::{DecompositionPlan, Direction, FieldDescriptor};
use crate::sim::RankId;

/// Coordinate encoding: every (field, gx, gy, gz) maps to a distinct
/// integer that an f64 holds exactly.
pub struct Encoding;

impl Encoding {
    pub const C1: u64 = 1 << 26;
    pub const C2: u64 = 1 << 13;
    pub const C3: u64 = 1 << 39;

    pub fn encode(field: usize, gx: usize, gy: usize, gz: usize) -> f64 {
        (field as u64 * Self::C3 + gx as u64 * Self::C1 + gy as u64 * Self::C2 + gz as u64) as f64
    }

    /// Whether every encoding over the grid and field set is distinct and
    /// exact.
    pub fn fits(nx: usize, ny: usize, nz: usize, fields: usize) -> bool {
        let span = 1usize << 13;
        nx <= span && ny <= span && nz <= span && (fields as u64) <= (1u64 << 53) / Self::C3
    }
}

/// Marker left in halo cells that nothing has written. A quiet NaN, so it
/// never equals any encoding; compare bit patterns.
pub const SENTINEL_BITS: u64 = 0x7FF8_DEAD_BEEF_0001;

pub fn sentinel() -> f64 {
    f64::from_bits(SENTINEL_BITS)
}

/// One field on one rank: the interior plus `depth` halo layers on each
/// side in x and y. z is fastest in memory, then y, then x.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    pub index: usize,
    pub rank: RankId,
    pub lx: usize,
    pub ly: usize,
    pub lz: usize,
    pub depth: usize,
    origin: (usize, usize),
    global: (usize, usize),
    periodic: bool,
    pub data: Vec<f64>,
}

/// A halo cell holding the wrong value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mismatch {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub expected: f64,
    pub found: f64,
}

pub fn make_field(plan: &DecompositionPlan, rank: RankId, field_index: usize) -> Field {
    let (lx, ly, lz) = plan.local_dims(rank);
    let d = plan.depth;
    let mut f = Field {
        index: field_index,
        rank,
        lx,
        ly,
        lz,
        depth: d,
        origin: plan.origin(rank),
        global: (plan.nx, plan.ny),
        periodic: plan.periodic,
        data: vec![sentinel(); (lx + 2 * d) * (ly + 2 * d) * lz],
    };
    for i in d..d + lx {
        for j in d..d + ly {
            for k in 0..lz {
                let v = f.expected(i, j, k).expect("interior cells are in the domain");
                let at = f.idx(i, j, k);
                f.data[at] = v;
            }
        }
    }
    f
}

impl Field {
    pub fn descriptor(&self, name: impl Into<String>) -> FieldDescriptor {
        FieldDescriptor {
            name: name.into(),
            lx: self.lx,
            ly: self.ly,
            lz: self.lz,
            element_size: 8,
        }
    }

    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (i * (self.ly + 2 * self.depth) + j) * self.lz + k
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.idx(i, j, k)]
    }

    pub fn is_interior(&self, i: usize, j: usize) -> bool {
        let d = self.depth;
        (d..d + self.lx).contains(&i) && (d..d + self.ly).contains(&j)
    }

    /// Encoding the cell must hold, or `None` for halo cells outside a
    /// bounded domain.
    pub fn expected(&self, i: usize, j: usize, k: usize) -> Option<f64> {
        let wrap = |local: usize, origin: usize, n: usize| -> Option<usize> {
            let g = origin as i64 + local as i64 - self.depth as i64;
            if self.periodic {
                Some(g.rem_euclid(n as i64) as usize)
            } else if (0..n as i64).contains(&g) {
                Some(g as usize)
            } else {
                None
            }
        };
        let gx = wrap(i, self.origin.0, self.global.0)?;
        let gy = wrap(j, self.origin.1, self.global.1)?;
        Some(Encoding::encode(self.index, gx, gy, k))
    }

    fn axis(&self, step: i64, len: usize, halo: bool) -> Range<usize> {
        let d = self.depth;
        match (step, halo) {
            (-1, false) => d..2 * d,
            (-1, true) => 0..d,
            (1, false) => len..len + d,
            (1, true) => len + d..len + 2 * d,
            _ => d..d + len,
        }
    }

    /// Interior cells sent to the neighbor in `dir`.
    pub fn pack_box(&self, dir: Direction) -> (Range<usize>, Range<usize>) {
        let (sx, sy) = dir.step();
        (self.axis(sx, self.lx, false), self.axis(sy, self.ly, false))
    }

    /// Halo cells filled from the neighbor in `dir`.
    pub fn halo_box(&self, dir: Direction) -> (Range<usize>, Range<usize>) {
        let (sx, sy) = dir.step();
        (self.axis(sx, self.lx, true), self.axis(sy, self.ly, true))
    }

    /// Cell indices of a box in wire order: the layer coordinate outermost
    /// (y for y-faces, x otherwise), then the row coordinate, then z.
    fn box_cells(&self, dir: Direction, (xr, yr): (Range<usize>, Range<usize>)) -> impl Iterator<Item = usize> {
        let y_major = dir.step().0 == 0;
        let (outer, inner) = if y_major { (yr, xr) } else { (xr, yr) };
        let (lz, row) = (self.lz, self.ly + 2 * self.depth);
        outer.flat_map(move |a| {
            inner.clone().flat_map(move |b| {
                let (i, j) = if y_major { (b, a) } else { (a, b) };
                let base = (i * row + j) * lz;
                base..base + lz
            })
        })
    }

    pub fn region_bytes(&self, dir: Direction) -> usize {
        let (xr, yr) = self.pack_box(dir);
        xr.len() * yr.len() * self.lz * 8
    }
}

/// Copies the cells adjacent to `dir` into `out`.
pub fn pack_halo(field: &Field, dir: Direction, out: &mut [u8]) -> Result<(), GridError> {
    let want = field.region_bytes(dir);
    if out.len() != want {
        return Err(GridError::Size {
            expected: want,
            got: out.len(),
        });
    }
    let cells = field.box_cells(dir, field.pack_box(dir));
    for (chunk, at) in out.chunks_exact_mut(8).zip(cells) {
        chunk.copy_from_slice(&field.data[at].to_le_bytes());
    }
    Ok(())
}

/// Writes the halo cells on the `dir` side from `bytes`, in pack order.
pub fn unpack_halo(field: &mut Field, dir: Direction, bytes: &[u8]) -> Result<(), GridError> {
    let want = field.region_bytes(dir);
    if bytes.len() != want {
        return Err(GridError::Size {
            expected: want,
            got: bytes.len(),
        });
    }
    let cells = field.box_cells(dir, field.halo_box(dir));
    for (chunk, at) in bytes.chunks_exact(8).zip(cells) {
        let mut b = [0u8; 8];
        b.copy_from_slice(chunk);
        field.data[at] = f64::from_le_bytes(b);
    }
    Ok(())
}

fn scan(field: &Field, halo: bool) -> Vec<Mismatch> {
    let (w, h) = (field.lx + 2 * field.depth, field.ly + 2 * field.depth);
    let mut out = Vec::new();
    for i in 0..w {
        for j in 0..h {
            if field.is_interior(i, j) == halo {
                continue;
            }
            for k in 0..field.lz {
                let Some(expected) = field.expected(i, j, k) else {
                    continue;
                };
                let found = field.get(i, j, k);
                if found.to_bits() != expected.to_bits() {
                    out.push(Mismatch {
                        i,
                        j,
                        k,
                        expected,
                        found,
                    });
                }
            }
        }
    }
    out
}

/// Every in-domain halo cell whose bits differ from its encoding.
pub fn verify_halos(field: &Field) -> Vec<Mismatch> {
    scan(field, true)
}

/// Every interior cell whose bits differ from its encoding.
pub fn verify_interior(field: &Field) -> Vec<Mismatch> {
    scan(field, false)
}

/// Hash over the bit patterns of a set of fields.
pub fn fields_digest(fields: &[Field]) -> u64 {
    let mut h = DefaultHasher::new();
    for f in fields {
        for v in &f.data {
            h.write_u64(v.to_bits());
        }
    }
    h.finish()
}
