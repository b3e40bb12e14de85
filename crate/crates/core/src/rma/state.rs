use std::collections::{BTreeMap, VecDeque};
use std::ops::Range;

use super::interval::IntervalMap;
use super::{LockKind, Violation};
use crate::sim::state::{Payload, SimState};
use crate::sim::{EventKind, MemoryModel, RankId, SimTime};

pub(crate) struct RegionStore {
    pub owner: usize,
    pub bytes: Vec<u8>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct WriteMeta {
    pub writer: usize,
    pub gen: u64,
}

pub(crate) struct WinState {
    pub owner: usize,
    pub ordinal: usize,
    pub region: usize,
    pub len: usize,
    pub group: Vec<usize>,
    pub model: MemoryModel,
    /// Public copy under the separate model; the region itself otherwise.
    pub public: Option<Vec<u8>>,
    pub pub_meta: IntervalMap<WriteMeta>,
    pub priv_meta: IntervalMap<WriteMeta>,
    /// Written remotely since the last merge.
    pub pub_dirty: IntervalMap<()>,
    /// Written locally since the last merge.
    pub priv_dirty: IntervalMap<()>,
    pub generation: u64,
    /// Name of the synchronization a private read depends on in the current
    /// mode; used in violation reports.
    pub sync_hint: &'static str,

    pub fence_active: bool,
    /// Fences this rank has entered on the window.
    pub fences: u64,
    /// Fence-epoch operations that arrived before this rank entered the
    /// fence opening their epoch: (epoch, origin, arrival, message).
    pub held: Vec<(u64, usize, SimTime, RmaMsg)>,
    pub access: Option<Vec<usize>>,
    pub exposure: Option<Vec<usize>>,
    pub passive: Option<(LockKind, bool)>,

    pub issued_to: BTreeMap<usize, u64>,
    pub applied_from: BTreeMap<usize, (u64, SimTime)>,
    pub acks_pending: u64,
    pub last_ack: SimTime,
    pub gets_pending: u64,
    pub last_get_reply: SimTime,
    pub grants_pending: u64,
    pub last_grant: SimTime,
    /// Start-side receives for post tokens, per target.
    pub post_reqs: Vec<(usize, u64)>,
    /// Post-side receives for done tokens, per origin.
    pub done_reqs: Vec<(usize, u64)>,
    /// Operations waiting for the target's post.
    pub deferred: Vec<(usize, RmaMsg)>,

    pub holders: BTreeMap<usize, LockKind>,
    pub lock_queue: VecDeque<(usize, LockKind)>,
}

impl WinState {
    pub fn new(owner: usize, ordinal: usize, region: usize, len: usize, group: Vec<usize>, model: MemoryModel) -> Self {
        Self {
            owner,
            ordinal,
            region,
            len,
            group,
            model,
            public: match model {
                MemoryModel::Separate => Some(vec![0; len]),
                MemoryModel::Unified => None,
            },
            pub_meta: IntervalMap::new(),
            priv_meta: IntervalMap::new(),
            pub_dirty: IntervalMap::new(),
            priv_dirty: IntervalMap::new(),
            generation: 0,
            sync_hint: "sync",
            fence_active: false,
            fences: 0,
            held: Vec::new(),
            access: None,
            exposure: None,
            passive: None,
            issued_to: BTreeMap::new(),
            applied_from: BTreeMap::new(),
            acks_pending: 0,
            last_ack: 0,
            gets_pending: 0,
            last_get_reply: 0,
            grants_pending: 0,
            last_grant: 0,
            post_reqs: Vec::new(),
            done_reqs: Vec::new(),
            deferred: Vec::new(),
            holders: BTreeMap::new(),
            lock_queue: VecDeque::new(),
        }
    }

    pub fn applied(&self, origin: usize) -> (u64, SimTime) {
        self.applied_from.get(&origin).copied().unwrap_or((0, 0))
    }

    pub fn issued(&self, target: usize) -> u64 {
        self.issued_to.get(&target).copied().unwrap_or(0)
    }

    fn private_meta(&self) -> &IntervalMap<WriteMeta> {
        match self.model {
            MemoryModel::Separate => &self.priv_meta,
            MemoryModel::Unified => &self.pub_meta,
        }
    }
}

pub(crate) enum RmaMsg {
    Put {
        win: usize,
        origin_win: usize,
        offset: usize,
        data: Vec<u8>,
        gen: u64,
        ack: bool,
        epoch: u64,
    },
    GetReq {
        win: usize,
        origin_win: usize,
        offset: usize,
        len: usize,
        gen: u64,
        dest_region: usize,
        dest_offset: usize,
        hint: &'static str,
        epoch: u64,
    },
    GetReply {
        origin_win: usize,
        dest_region: usize,
        dest_offset: usize,
        data: Vec<u8>,
    },
    Ack {
        origin_win: usize,
    },
    LockReq {
        win: usize,
        origin_win: usize,
        kind: LockKind,
    },
    Grant {
        origin_win: usize,
    },
    Unlock {
        win: usize,
    },
}

impl RmaMsg {
    pub fn lock_channel(&self) -> Option<usize> {
        match self {
            RmaMsg::LockReq { win, .. } | RmaMsg::Unlock { win } => Some(*win),
            _ => None,
        }
    }

    pub fn payload_len(&self) -> usize {
        match self {
            RmaMsg::Put { data, .. } | RmaMsg::GetReply { data, .. } => data.len(),
            _ => 0,
        }
    }

    /// Fence epoch the operation was issued in, zero outside fence epochs.
    fn fence_epoch(&self) -> u64 {
        match self {
            RmaMsg::Put { epoch, .. } | RmaMsg::GetReq { epoch, .. } => *epoch,
            _ => 0,
        }
    }

    fn target_window(&self) -> Option<usize> {
        match self {
            RmaMsg::Put { win, .. } | RmaMsg::GetReq { win, .. } => Some(*win),
            _ => None,
        }
    }

    pub fn is_sync(&self) -> bool {
        matches!(
            self,
            RmaMsg::LockReq { .. } | RmaMsg::Grant { .. } | RmaMsg::Unlock { .. }
        )
    }
}

pub(crate) struct RmaWorld {
    pub regions: Vec<RegionStore>,
    pub windows: Vec<WinState>,
    /// Per rank: window ordinal -> global window id.
    pub rank_windows: Vec<Vec<usize>>,
    pub violations: Vec<Violation>,
}

impl RmaWorld {
    pub fn new(n: usize) -> Self {
        Self {
            regions: Vec::new(),
            windows: Vec::new(),
            rank_windows: vec![Vec::new(); n],
            violations: Vec::new(),
        }
    }

    pub fn window_of(&self, rank: usize, ordinal: usize) -> usize {
        self.rank_windows[rank][ordinal]
    }

    /// Applies a remote write to the public copy.
    fn write_public(&mut self, wid: usize, range: Range<usize>, data: &[u8], meta: WriteMeta) {
        let RmaWorld { windows, regions, .. } = self;
        let win = &mut windows[wid];
        match win.public.as_mut() {
            Some(public) => {
                public[range.clone()].copy_from_slice(data);
                win.pub_dirty.insert(range.clone(), ());
            }
            None => regions[win.region].bytes[range.clone()].copy_from_slice(data),
        }
        win.pub_meta.insert(range, meta);
    }

    /// Applies a local store to the private copy.
    pub fn write_private(&mut self, wid: usize, range: Range<usize>, data: &[u8], meta: WriteMeta) {
        let RmaWorld { windows, regions, .. } = self;
        let win = &mut windows[wid];
        regions[win.region].bytes[range.clone()].copy_from_slice(data);
        match win.model {
            MemoryModel::Separate => {
                win.priv_meta.insert(range.clone(), meta);
                win.priv_dirty.insert(range, ());
            }
            MemoryModel::Unified => win.pub_meta.insert(range, meta),
        }
    }

    fn read_public(&self, wid: usize, range: Range<usize>) -> Vec<u8> {
        let win = &self.windows[wid];
        match &win.public {
            Some(public) => public[range].to_vec(),
            None => self.regions[win.region].bytes[range].to_vec(),
        }
    }

    /// Makes public and private copies agree. Remote writes are copied into
    /// the private copy, then local writes into the public copy.
    pub fn merge(&mut self, wid: usize) {
        let RmaWorld { windows, regions, .. } = self;
        let win = &mut windows[wid];
        let Some(public) = win.public.as_mut() else {
            return;
        };
        let private = &mut regions[win.region].bytes;
        let remote: Vec<Range<usize>> = win.pub_dirty.spans().map(|(r, _)| r).collect();
        for r in remote {
            private[r.clone()].copy_from_slice(&public[r.clone()]);
            for (piece, meta) in win.pub_meta.query(r) {
                if let Some(m) = meta {
                    win.priv_meta.insert(piece, m);
                }
            }
        }
        let local: Vec<Range<usize>> = win.priv_dirty.spans().map(|(r, _)| r).collect();
        for r in local {
            public[r.clone()].copy_from_slice(&private[r.clone()]);
            for (piece, meta) in win.priv_meta.query(r) {
                if let Some(m) = meta {
                    win.pub_meta.insert(piece, m);
                }
            }
        }
        win.pub_dirty.clear();
        win.priv_dirty.clear();
    }

    /// Ledger check for a private-copy read by the owner. Returns the missing
    /// synchronization, if the read is stale.
    pub fn check_private_read(&self, wid: usize, range: Range<usize>, expected_gen: u64) -> Option<&'static str> {
        let win = &self.windows[wid];
        if win.model == MemoryModel::Separate && win.pub_dirty.overlaps(range.clone()) {
            return Some(win.sync_hint);
        }
        stale_generation(win.private_meta(), range, expected_gen).then_some("generation")
    }

    /// Ledger check for a remote read of the public copy.
    fn check_public_read(&self, wid: usize, range: Range<usize>, expected_gen: u64) -> bool {
        let win = &self.windows[wid];
        (win.model == MemoryModel::Separate && win.priv_dirty.overlaps(range.clone()))
            || stale_generation(&win.pub_meta, range, expected_gen)
    }
}

/// Counts a fence entered on `wid` and applies the operations held for it.
pub(crate) fn enter_fence(st: &mut SimState, wid: usize, now: SimTime) {
    let w = &mut st.rma.windows[wid];
    w.fences += 1;
    let fences = w.fences;
    let owner = w.owner;
    let (ready, kept) = std::mem::take(&mut w.held)
        .into_iter()
        .partition::<Vec<_>, _>(|(e, ..)| *e <= fences);
    st.rma.windows[wid].held = kept;
    for (_, src, at, msg) in ready {
        deliver(st, src, owner, at.max(now), msg);
    }
}

fn stale_generation(meta: &IntervalMap<WriteMeta>, range: Range<usize>, expected: u64) -> bool {
    meta.query(range).iter().any(|(_, m)| m.map_or(0, |m| m.gen) < expected)
}

pub(crate) fn lock_compatible(holders: &BTreeMap<usize, LockKind>, kind: LockKind) -> bool {
    match kind {
        LockKind::Shared => !holders.values().any(|k| *k == LockKind::Exclusive),
        LockKind::Exclusive => holders.is_empty(),
    }
}

/// Handles an RMA envelope arriving at `dst`. Runs on the scheduler on
/// behalf of the target, which takes no explicit part.
pub(crate) fn deliver(st: &mut SimState, src: usize, dst: usize, at: SimTime, msg: RmaMsg) {
    if let Some(win) = msg.target_window() {
        let epoch = msg.fence_epoch();
        let wid = st.rma.window_of(dst, win);
        let w = &mut st.rma.windows[wid];
        if epoch > w.fences {
            w.held.push((epoch, src, at, msg));
            return;
        }
    }
    match msg {
        RmaMsg::Put {
            win,
            origin_win,
            offset,
            data,
            gen,
            ack,
            ..
        } => {
            let wid = st.rma.window_of(dst, win);
            let len = data.len();
            st.rma
                .write_public(wid, offset..offset + len, &data, WriteMeta { writer: src, gen });
            bump_applied(st, wid, src, at);
            st.log(at, dst, EventKind::PutApply, Some(src), len);
            if ack {
                st.enqueue(dst, src, at, Payload::Rma(RmaMsg::Ack { origin_win }));
            }
        }
        RmaMsg::GetReq {
            win,
            origin_win,
            offset,
            len,
            gen,
            dest_region,
            dest_offset,
            hint,
            ..
        } => {
            let wid = st.rma.window_of(dst, win);
            let range = offset..offset + len;
            let seq = st.log(at, dst, EventKind::GetServe, Some(src), len);
            if st.rma.check_public_read(wid, range.clone(), gen) {
                st.rma.violations.push(Violation {
                    rank: RankId(src),
                    window: win,
                    offset,
                    len,
                    read_seq: seq,
                    missing_sync: hint.to_string(),
                });
            }
            let data = st.rma.read_public(wid, range);
            bump_applied(st, wid, src, at);
            st.enqueue(
                dst,
                src,
                at,
                Payload::Rma(RmaMsg::GetReply {
                    origin_win,
                    dest_region,
                    dest_offset,
                    data,
                }),
            );
        }
        RmaMsg::GetReply {
            origin_win,
            dest_region,
            dest_offset,
            data,
        } => {
            let len = data.len();
            st.rma.regions[dest_region].bytes[dest_offset..dest_offset + len].copy_from_slice(&data);
            let w = &mut st.rma.windows[origin_win];
            w.gets_pending -= 1;
            w.last_get_reply = w.last_get_reply.max(at);
            st.log(at, dst, EventKind::GetReply, Some(src), len);
        }
        RmaMsg::Ack { origin_win } => {
            let w = &mut st.rma.windows[origin_win];
            w.acks_pending -= 1;
            w.last_ack = w.last_ack.max(at);
        }
        RmaMsg::LockReq { win, origin_win, kind } => {
            let wid = st.rma.window_of(dst, win);
            let w = &mut st.rma.windows[wid];
            if w.lock_queue.is_empty() && lock_compatible(&w.holders, kind) {
                w.holders.insert(src, kind);
                st.enqueue(dst, src, at, Payload::Rma(RmaMsg::Grant { origin_win }));
            } else {
                w.lock_queue.push_back((src, kind));
            }
        }
        RmaMsg::Grant { origin_win } => {
            let w = &mut st.rma.windows[origin_win];
            w.grants_pending -= 1;
            w.last_grant = w.last_grant.max(at);
        }
        RmaMsg::Unlock { win } => {
            let wid = st.rma.window_of(dst, win);
            st.rma.windows[wid].holders.remove(&src);
            loop {
                let w = &mut st.rma.windows[wid];
                let Some(&(origin, kind)) = w.lock_queue.front() else {
                    break;
                };
                if !lock_compatible(&w.holders, kind) {
                    break;
                }
                w.lock_queue.pop_front();
                w.holders.insert(origin, kind);
                let origin_win = st.rma.window_of(origin, win);
                st.enqueue(dst, origin, at, Payload::Rma(RmaMsg::Grant { origin_win }));
            }
        }
    }
}

fn bump_applied(st: &mut SimState, wid: usize, origin: usize, at: SimTime) {
    let entry = st.rma.windows[wid].applied_from.entry(origin).or_insert((0, 0));
    entry.0 += 1;
    entry.1 = entry.1.max(at);
}
