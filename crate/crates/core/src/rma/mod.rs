//! One-sided communication over the simulated transport.
//!
//! Windows expose a rank's [`Region`] to a group of peers. Puts and gets
//! travel as envelopes and are applied at delivery without the target's
//! participation. Each window records who last wrote every byte range of
//! its public and private copies, and every ledger-checked read is tested
//! against that record; stale reads become [`Violation`]s.

mod interval;
mod ops;
pub(crate) mod state;

use std::fmt;
use std::io::{self, Write};

pub use ops::MemView;

use crate::sim::{MemoryModel, RankId};

/// Rank-local memory allocated through the transport.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Region {
    pub(crate) id: usize,
    pub(crate) len: usize,
}

impl Region {
    /// Allocation id, unique within a world.
    pub fn id(&self) -> usize {
        self.id
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

/// Handle to a window. Windows are created collectively, and the `n`-th
/// window a rank creates pairs with the `n`-th window of each group member.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Window {
    pub(crate) id: usize,
    pub(crate) ordinal: usize,
    pub(crate) owner: RankId,
    pub(crate) len: usize,
    pub(crate) model: MemoryModel,
    pub(crate) group: Vec<RankId>,
}

impl Window {
    pub fn ordinal(&self) -> usize {
        self.ordinal
    }

    pub fn owner(&self) -> RankId {
        self.owner
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn memory_model(&self) -> MemoryModel {
        self.model
    }

    /// Sorted group, including the owner.
    pub fn group(&self) -> &[RankId] {
        &self.group
    }
}

/// Epoch assertions. `nosucceed` and `nocheck` always apply; the fence
/// shortcut of `noprecede` is only taken when the transport honors
/// assertions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Assertions {
    pub noprecede: bool,
    pub nosucceed: bool,
    pub noput: bool,
    pub nocheck: bool,
}

impl Assertions {
    pub const NONE: Assertions = Assertions {
        noprecede: false,
        nosucceed: false,
        noput: false,
        nocheck: false,
    };
    pub const NOPRECEDE: Assertions = Assertions {
        noprecede: true,
        ..Assertions::NONE
    };
    pub const NOSUCCEED: Assertions = Assertions {
        nosucceed: true,
        ..Assertions::NONE
    };
    pub const NOCHECK: Assertions = Assertions {
        nocheck: true,
        ..Assertions::NONE
    };
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LockKind {
    Shared,
    Exclusive,
}

/// Epochs currently open on a window, from the caller's side.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EpochState {
    pub fence: bool,
    pub access: Option<Vec<RankId>>,
    pub exposure: Option<Vec<RankId>>,
    pub passive: Option<LockKind>,
}

impl EpochState {
    pub fn is_idle(&self) -> bool {
        !self.fence && self.access.is_none() && self.exposure.is_none() && self.passive.is_none()
    }
}

/// A read that observed data older than the reader required.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    /// Rank whose read was stale.
    pub rank: RankId,
    /// Window ordinal.
    pub window: usize,
    pub offset: usize,
    pub len: usize,
    /// Sequence number of the read event in the log.
    pub read_seq: u64,
    /// Synchronization that would have made the read current.
    pub missing_sync: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{},{},{}",
            self.rank, self.window, self.offset, self.len, self.read_seq, self.missing_sync
        )
    }
}

pub const VIOLATION_HEADER: &str = "rank,window,offset,len,read_seq,missing_sync";

pub fn write_violations<W: Write>(mut out: W, violations: &[Violation]) -> io::Result<()> {
    writeln!(out, "{VIOLATION_HEADER}")?;
    for v in violations {
        writeln!(out, "{v}")?;
    }
    Ok(())
}

/// Human-readable summary, one line per violation.
pub fn consistency_report(violations: &[Violation]) -> String {
    if violations.is_empty() {
        return "consistency: ok (0 violations)\n".to_string();
    }
    let mut s = format!("consistency: {} violation(s)\n", violations.len());
    for v in violations {
        s.push_str(&format!(
            "  rank {} window {} bytes [{}, {}) read #{} missing {}\n",
            v.rank,
            v.window,
            v.offset,
            v.offset + v.len,
            v.read_seq,
            v.missing_sync
        ));
    }
    s
}
