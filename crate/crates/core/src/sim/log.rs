use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::io::{self, Write};

use super::config::SimTime;
use super::RankId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EventKind {
    Send,
    Deliver,
    BarrierEnter,
    BarrierExit,
    WinCreateEnter,
    WinCreateExit,
    FenceEnter,
    FenceExit,
    Post,
    Start,
    Complete,
    WaitEnter,
    WaitExit,
    LockAll,
    UnlockAll,
    Flush,
    WinSync,
    Put,
    PutApply,
    Get,
    GetServe,
    GetReply,
    Read,
    Write,
    Compute,
    EpochOpen,
    EpochClose,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Send => "send",
            EventKind::Deliver => "deliver",
            EventKind::BarrierEnter => "barrier_enter",
            EventKind::BarrierExit => "barrier_exit",
            EventKind::WinCreateEnter => "win_create_enter",
            EventKind::WinCreateExit => "win_create_exit",
            EventKind::FenceEnter => "fence_enter",
            EventKind::FenceExit => "fence_exit",
            EventKind::Post => "post",
            EventKind::Start => "start",
            EventKind::Complete => "complete",
            EventKind::WaitEnter => "wait_enter",
            EventKind::WaitExit => "wait_exit",
            EventKind::LockAll => "lock_all",
            EventKind::UnlockAll => "unlock_all",
            EventKind::Flush => "flush",
            EventKind::WinSync => "win_sync",
            EventKind::Put => "put",
            EventKind::PutApply => "put_apply",
            EventKind::Get => "get",
            EventKind::GetServe => "get_serve",
            EventKind::GetReply => "get_reply",
            EventKind::Read => "read",
            EventKind::Write => "write",
            EventKind::Compute => "compute",
            EventKind::EpochOpen => "epoch_open",
            EventKind::EpochClose => "epoch_close",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Event {
    pub time: SimTime,
    pub rank: RankId,
    pub kind: EventKind,
    pub peer: Option<RankId>,
    pub bytes: usize,
    /// Global append sequence number.
    pub seq: u64,
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},", self.time, self.rank.0, self.kind)?;
        match self.peer {
            Some(p) => write!(f, "{}", p.0)?,
            None => f.write_str("-")?,
        }
        write!(f, ",{},{}", self.bytes, self.seq)
    }
}

/// Append-only record of everything that happened in a world, ordered by
/// simulated time with ties broken on (rank, seq).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EventLog {
    events: Vec<Event>,
}

impl EventLog {
    pub(crate) fn from_unsorted(mut events: Vec<Event>) -> Self {
        events.sort_by_key(|e| (e.time, e.rank, e.seq));
        Self { events }
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Event> {
        self.events.iter()
    }

    pub fn of_kind(&self, kind: EventKind) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    pub fn count(&self, kind: EventKind) -> usize {
        self.of_kind(kind).count()
    }

    /// Newline-delimited `time,rank,kind,peer,bytes,seq` records.
    pub fn write_to<W: Write>(&self, mut out: W) -> io::Result<()> {
        for e in &self.events {
            writeln!(out, "{e}")?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("log records are ASCII")
    }

    pub fn digest(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.events.hash(&mut h);
        h.finish()
    }
}
