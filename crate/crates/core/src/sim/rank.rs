use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::panic;

use parking_lot::{Condvar, Mutex, MutexGuard};

use super::config::{RmaConfig, SimTime, TransportConfig};
use super::error::CommError;
use super::log::EventKind;
use super::state::{Channel, Payload, ReqKind, SimState, SlotStatus, WaitFn};
use super::RankId;

pub(crate) struct Shared {
    pub state: Mutex<SimState>,
    pub rank_cv: Vec<Condvar>,
    pub sched_cv: Condvar,
}

impl Shared {
    pub fn new(cfg: TransportConfig) -> Self {
        let n = cfg.n_ranks;
        Self {
            state: Mutex::new(SimState::new(cfg)),
            rank_cv: (0..n).map(|_| Condvar::new()).collect(),
            sched_cv: Condvar::new(),
        }
    }
}

/// Unwind payload used to tear down rank workers when the world aborts.
pub(crate) struct AbortToken;

/// Source selector for receives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    Rank(RankId),
    Any,
}

impl From<RankId> for Source {
    fn from(r: RankId) -> Self {
        Source::Rank(r)
    }
}

/// Handle to a nonblocking operation. Complete is terminal: once a wait or a
/// successful test has observed it, the handle is consumed.
#[derive(Debug, PartialEq, Eq)]
pub struct Request {
    pub(crate) id: u64,
}

impl Request {
    pub fn id(&self) -> u64 {
        self.id
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Status {
    pub source: Option<RankId>,
    pub data: Vec<u8>,
}

impl Status {
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// A rank's view of the world. Every communication call goes through here.
pub struct Rank<'w> {
    idx: usize,
    shared: &'w Shared,
}

impl<'w> Rank<'w> {
    pub(crate) fn new(idx: usize, shared: &'w Shared) -> Self {
        Self { idx, shared }
    }

    pub fn id(&self) -> RankId {
        RankId(self.idx)
    }

    pub(crate) fn idx(&self) -> usize {
        self.idx
    }

    pub fn size(&self) -> usize {
        self.shared.state.lock().n_ranks()
    }

    /// Current simulated time of this rank.
    pub fn now(&self) -> SimTime {
        self.shared.state.lock().clock(self.idx)
    }

    pub fn rma_config(&self) -> RmaConfig {
        self.shared.state.lock().cfg.rma
    }

    pub fn seed(&self) -> u64 {
        self.shared.state.lock().cfg.seed
    }

    /// Number of contexts this rank has allocated so far, then bumps it.
    /// Collective callers allocating in the same order agree on the value.
    pub fn next_context_id(&self) -> u64 {
        let mut st = self.lock_state();
        let slot = &mut st.slots[self.idx];
        slot.contexts += 1;
        slot.contexts - 1
    }

    pub(crate) fn log_event(&self, kind: EventKind, bytes: usize) {
        let mut st = self.lock_state();
        let now = st.clock(self.idx);
        st.log(now, self.idx, kind, None, bytes);
    }

    pub(crate) fn lock_state(&self) -> MutexGuard<'w, SimState> {
        let mut st = self.shared.state.lock();
        st.slots[self.idx].polling = false;
        st
    }

    /// Hands control back to the scheduler and waits for the next turn.
    fn park(&self, mut st: MutexGuard<'w, SimState>) -> MutexGuard<'w, SimState> {
        st.running = None;
        self.shared.sched_cv.notify_one();
        while st.running != Some(self.idx) && !st.abort {
            self.shared.rank_cv[self.idx].wait(&mut st);
        }
        if st.abort {
            drop(st);
            panic::resume_unwind(Box::new(AbortToken));
        }
        st
    }

    pub(crate) fn wait_for_turn(&self) -> bool {
        let mut st = self.shared.state.lock();
        while st.running != Some(self.idx) && !st.abort {
            self.shared.rank_cv[self.idx].wait(&mut st);
        }
        !st.abort
    }

    /// Yields to the scheduler without blocking.
    pub(crate) fn yield_now(&self, mut st: MutexGuard<'w, SimState>) -> MutexGuard<'w, SimState> {
        st.slots[self.idx].status = SlotStatus::Runnable;
        self.park(st)
    }

    /// Blocks until `cond` holds, advancing the clock to the time it did.
    pub(crate) fn block_on(
        &self,
        mut st: MutexGuard<'w, SimState>,
        reason: impl FnOnce() -> String,
        cond: WaitFn,
    ) -> MutexGuard<'w, SimState> {
        if let Some(t) = cond(&st) {
            let slot = &mut st.slots[self.idx];
            slot.clock = slot.clock.max(t);
            return st;
        }
        let slot = &mut st.slots[self.idx];
        slot.status = SlotStatus::Blocked;
        slot.reason = reason();
        slot.wait = Some(cond);
        self.park(st)
    }

    /// Advances this rank's clock, modelling local computation.
    pub fn compute(&self, duration: SimTime) {
        let mut st = self.lock_state();
        let t = st.clock(self.idx) + duration;
        st.slots[self.idx].clock = t;
        st.log(t, self.idx, EventKind::Compute, None, 0);
        drop(self.yield_now(st));
    }

    fn check_rank(st: &SimState, r: usize) -> Result<(), CommError> {
        if r < st.n_ranks() {
            Ok(())
        } else {
            Err(CommError::RankOutOfRange(r))
        }
    }

    pub(crate) fn send_on(
        &self,
        st: &mut SimState,
        dst: usize,
        channel: Channel,
        data: Vec<u8>,
    ) -> Result<u64, CommError> {
        Self::check_rank(st, dst)?;
        let now = st.clock(self.idx);
        st.log(now, self.idx, EventKind::Send, Some(dst), data.len());
        st.enqueue(self.idx, dst, now, Payload::Msg { channel, data });
        let id = st.new_request(self.idx, ReqKind::Send);
        st.requests[id as usize].done_at = Some(now);
        Ok(id)
    }

    /// Nonblocking send; the payload is copied at call time.
    pub fn isend(&self, dst: RankId, tag: i64, payload: &[u8]) -> Result<Request, CommError> {
        let mut st = self.lock_state();
        let id = self.send_on(&mut st, dst.0, Channel::User(tag), payload.to_vec())?;
        Ok(Request { id })
    }

    pub fn irecv(&self, src: impl Into<Source>, tag: i64) -> Result<Request, CommError> {
        let mut st = self.lock_state();
        let src = match src.into() {
            Source::Any => None,
            Source::Rank(r) => {
                Self::check_rank(&st, r.0)?;
                Some(r.0)
            }
        };
        let id = st.post_recv(self.idx, src, Channel::User(tag));
        Ok(Request { id })
    }

    fn check_owned(&self, st: &SimState, id: u64) -> Result<(), CommError> {
        let rec = st.requests.get(id as usize).ok_or(CommError::ForeignHandle(id))?;
        if rec.owner != self.idx {
            return Err(CommError::ForeignHandle(id));
        }
        if rec.consumed {
            return Err(CommError::ConsumedHandle(id));
        }
        Ok(())
    }

    fn consume(&self, st: &mut SimState, id: u64) -> Status {
        let now = st.clock(self.idx);
        let rec = &mut st.requests[id as usize];
        rec.consumed = true;
        let status = Status {
            source: rec.source.map(RankId),
            data: std::mem::take(&mut rec.data),
        };
        if let ReqKind::Barrier { .. } = rec.kind {
            st.log(now, self.idx, EventKind::BarrierExit, None, 0);
        }
        status
    }

    pub(crate) fn wait_id(&self, id: u64) -> Result<Status, CommError> {
        let st = self.lock_state();
        self.check_owned(&st, id)?;
        let desc = describe_request(&st, id);
        let mut st = self.block_on(st, move || desc, Box::new(move |s| s.req_done(id)));
        Ok(self.consume(&mut st, id))
    }

    pub fn wait(&self, req: &Request) -> Result<Status, CommError> {
        self.wait_id(req.id)
    }

    pub fn wait_all(&self, reqs: &[Request]) -> Result<Vec<Status>, CommError> {
        reqs.iter().map(|r| self.wait(r)).collect()
    }

    /// Nonblocking completion check. A `true` result consumes the handle.
    pub fn test(&self, req: &Request) -> Result<bool, CommError> {
        Ok(self.test_any(std::slice::from_ref(req))?.is_some())
    }

    /// Returns the index and status of some completed, not yet consumed
    /// request. Consumed handles in the slice are skipped.
    pub fn test_any(&self, reqs: &[Request]) -> Result<Option<(usize, Status)>, CommError> {
        // Keeps the polling flag, so a rank spinning on this call is only
        // resumed once something is in flight towards it.
        let st = self.shared.state.lock();
        let mut st = self.yield_now(st);
        let mut live = 0;
        let mut best: Option<(SimTime, usize)> = None;
        for (i, r) in reqs.iter().enumerate() {
            match self.check_owned(&st, r.id) {
                Ok(()) => live += 1,
                Err(CommError::ConsumedHandle(_)) => continue,
                Err(e) => return Err(e),
            }
            if let Some(t) = st.req_done(r.id) {
                if best.is_none_or(|(bt, _)| t < bt) {
                    best = Some((t, i));
                }
            }
        }
        match best {
            Some((t, i)) => {
                let slot = &mut st.slots[self.idx];
                slot.polling = false;
                slot.clock = slot.clock.max(t);
                Ok(Some((i, self.consume(&mut st, reqs[i].id))))
            }
            None => {
                st.slots[self.idx].polling = live > 0;
                Ok(None)
            }
        }
    }

    fn barrier_key(group: &[usize]) -> u64 {
        let mut g = group.to_vec();
        g.sort_unstable();
        g.dedup();
        let mut h = DefaultHasher::new();
        g.hash(&mut h);
        h.finish()
    }

    /// Nonblocking barrier over `group` on an explicit matching key. Members
    /// exchange one token with every other member, so the handle completes
    /// only after every member has entered.
    pub fn ibarrier_with_key(&self, group: &[RankId], key: u64) -> Result<Request, CommError> {
        let mut st = self.lock_state();
        let mut members: Vec<usize> = group.iter().map(|r| r.0).collect();
        members.sort_unstable();
        members.dedup();
        for &m in &members {
            Self::check_rank(&st, m)?;
        }
        let now = st.clock(self.idx);
        st.log(now, self.idx, EventKind::BarrierEnter, None, 0);
        let mut parts = Vec::new();
        for &m in members.iter().filter(|&&m| m != self.idx) {
            self.send_on(&mut st, m, Channel::Barrier(key), Vec::new())?;
            parts.push(st.post_recv(self.idx, Some(m), Channel::Barrier(key)));
        }
        let id = st.new_request(self.idx, ReqKind::Barrier { parts });
        st.requests[id as usize].done_at = Some(now);
        Ok(Request { id })
    }

    pub fn ibarrier(&self, group: &[RankId]) -> Result<Request, CommError> {
        let members: Vec<usize> = group.iter().map(|r| r.0).collect();
        self.ibarrier_with_key(group, Self::barrier_key(&members))
    }

    pub fn barrier(&self, group: &[RankId]) -> Result<(), CommError> {
        let req = self.ibarrier(group)?;
        self.wait(&req).map(|_| ())
    }
}

fn describe_request(st: &SimState, id: u64) -> String {
    match &st.requests[id as usize].kind {
        ReqKind::Send => "send completion".to_string(),
        ReqKind::Recv { src, channel } => {
            let src = src.map_or("any".to_string(), |s| s.to_string());
            match channel {
                Channel::User(tag) => format!("recv(src={src}, tag={tag})"),
                other => format!("recv(src={src}, {other:?})"),
            }
        }
        ReqKind::Barrier { .. } => "barrier".to_string(),
    }
}
