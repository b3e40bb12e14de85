use std::ops::Range;

use parking_lot::MutexGuard;

use super::state::{lock_compatible, RegionStore, RmaMsg, WinState, WriteMeta};
use super::{Assertions, EpochState, LockKind, Region, Violation, Window};
use crate::sim::state::{Channel, Payload, SimState};
use crate::sim::{CommError, EventKind, MemoryModel, Rank, RankId, SimTime};

/// Borrowed view of rank-local memory.
///
/// Holds the world lock: drop it before making any further call on the
/// rank, or the call will never return.
pub struct MemView<'w> {
    guard: MutexGuard<'w, SimState>,
    region: usize,
    ranges: Vec<Range<usize>>,
}

impl MemView<'_> {
    /// Number of byte ranges in the view.
    pub fn parts(&self) -> usize {
        self.ranges.len()
    }

    pub fn part(&self, i: usize) -> &[u8] {
        &self.guard.rma.regions[self.region].bytes[self.ranges[i].clone()]
    }

    /// The first range; the whole view for single-range reads.
    pub fn bytes(&self) -> &[u8] {
        self.part(0)
    }
}

fn all_done(s: &SimState, ids: &[u64]) -> Option<SimTime> {
    ids.iter().try_fold(0, |acc, &id| s.req_done(id).map(|t| acc.max(t)))
}

fn token_count(s: &SimState, id: u64) -> u64 {
    let data = &s.requests[id as usize].data;
    let mut b = [0u8; 8];
    b.copy_from_slice(&data[..8]);
    u64::from_le_bytes(b)
}

/// Ready time once every token has arrived and everything it announced has
/// been applied here.
fn counted_ready(s: &SimState, wid: usize, tokens: &[(usize, u64)]) -> Option<SimTime> {
    let w = &s.rma.windows[wid];
    let mut t = 0;
    for &(m, id) in tokens {
        t = t.max(s.req_done(id)?);
        let need = token_count(s, id);
        let (got, at) = w.applied(m);
        if got < need {
            return None;
        }
        if need > 0 {
            t = t.max(at);
        }
    }
    Some(t)
}

fn normalize(group: &[RankId]) -> Vec<usize> {
    let mut g: Vec<usize> = group.iter().map(|r| r.0).collect();
    g.sort_unstable();
    g.dedup();
    g
}

fn check_bounds(offset: usize, len: usize, window_len: usize) -> Result<(), CommError> {
    match offset.checked_add(len) {
        Some(end) if end <= window_len => Ok(()),
        _ => Err(CommError::OutOfBounds {
            offset,
            len,
            window_len,
        }),
    }
}

impl<'w> Rank<'w> {
    fn own_window(&self, st: &SimState, win: &Window) -> Result<usize, CommError> {
        match st.rma.windows.get(win.id) {
            Some(w) if w.owner == self.idx() && w.ordinal == win.ordinal => Ok(win.id),
            _ => Err(CommError::UnknownWindow),
        }
    }

    fn own_region(&self, st: &SimState, region: &Region) -> Result<(), CommError> {
        match st.rma.regions.get(region.id) {
            Some(r) if r.owner == self.idx() && r.bytes.len() == region.len => Ok(()),
            _ => Err(CommError::UnknownRegion),
        }
    }

    /// Allocates zeroed rank-local memory.
    pub fn alloc_region(&self, len: usize) -> Region {
        let mut st = self.lock_state();
        let id = st.rma.regions.len();
        st.rma.regions.push(RegionStore {
            owner: self.idx(),
            bytes: vec![0; len],
        });
        Region { id, len }
    }

    /// Plain store into a region, bypassing the window ledger. Use
    /// [`Rank::write_window`] for memory exposed through a window.
    pub fn write_region(&self, region: &Region, offset: usize, data: &[u8]) -> Result<(), CommError> {
        let mut st = self.lock_state();
        self.own_region(&st, region)?;
        check_bounds(offset, data.len(), region.len)?;
        st.rma.regions[region.id].bytes[offset..offset + data.len()].copy_from_slice(data);
        Ok(())
    }

    pub fn read_region(&self, region: &Region, offset: usize, len: usize) -> Result<MemView<'w>, CommError> {
        self.read_region_parts(region, std::slice::from_ref(&(offset..offset + len)))
    }

    pub fn read_region_parts(&self, region: &Region, ranges: &[Range<usize>]) -> Result<MemView<'w>, CommError> {
        let st = self.lock_state();
        self.own_region(&st, region)?;
        for r in ranges {
            check_bounds(r.start, r.len(), region.len)?;
        }
        Ok(MemView {
            guard: st,
            region: region.id,
            ranges: ranges.to_vec(),
        })
    }

    /// Collectively exposes `region` to `group`. Every member must call this
    /// with the same group; the caller is always a member.
    pub fn win_create(&self, region: &Region, group: &[RankId]) -> Result<Window, CommError> {
        let mut st = self.lock_state();
        self.own_region(&st, region)?;
        let me = self.idx();
        let mut members = normalize(group);
        for &m in &members {
            if m >= st.n_ranks() {
                return Err(CommError::RankOutOfRange(m));
            }
        }
        if !members.contains(&me) {
            members.push(me);
            members.sort_unstable();
        }
        let ordinal = st.rma.rank_windows[me].len();
        let model = st.cfg.rma.memory_model;
        let wid = st.rma.windows.len();
        let mut ws = WinState::new(me, ordinal, region.id, region.len, members.clone(), model);
        if let Some(public) = ws.public.as_mut() {
            public.copy_from_slice(&st.rma.regions[region.id].bytes);
        }
        st.rma.windows.push(ws);
        st.rma.rank_windows[me].push(wid);

        let now = st.clock(me);
        st.log(now, me, EventKind::WinCreateEnter, None, region.len);
        let mut recvs = Vec::new();
        for &m in members.iter().filter(|&&m| m != me) {
            self.send_on(&mut st, m, Channel::WinCreate(ordinal), Vec::new())?;
            recvs.push(st.post_recv(me, Some(m), Channel::WinCreate(ordinal)));
        }
        let ids = recvs.clone();
        let mut st = self.block_on(
            st,
            move || format!("win_create of window {ordinal}"),
            Box::new(move |s| all_done(s, &ids)),
        );
        for id in recvs {
            st.requests[id as usize].consumed = true;
        }
        let now = st.clock(me);
        st.log(now, me, EventKind::WinCreateExit, None, 0);
        Ok(Window {
            id: wid,
            ordinal,
            owner: RankId(me),
            len: region.len,
            model,
            group: members.into_iter().map(RankId).collect(),
        })
    }

    fn post_arrived(st: &SimState, wid: usize, target: usize) -> bool {
        st.rma.windows[wid]
            .post_reqs
            .iter()
            .any(|&(t, id)| t == target && st.req_done(id).is_some())
    }

    fn release_deferred(&self, st: &mut SimState, wid: usize) {
        let now = st.clock(self.idx());
        let deferred = std::mem::take(&mut st.rma.windows[wid].deferred);
        let mut kept = Vec::new();
        for (t, msg) in deferred {
            if Self::post_arrived(st, wid, t) {
                st.enqueue(self.idx(), t, now, Payload::Rma(msg));
            } else {
                kept.push((t, msg));
            }
        }
        st.rma.windows[wid].deferred = kept;
    }

    /// Checks that an operation on `target` is allowed and returns the
    /// target window's length.
    fn check_access(&self, st: &SimState, wid: usize, target: RankId) -> Result<usize, CommError> {
        let t = target.0;
        if t >= st.n_ranks() {
            return Err(CommError::RankOutOfRange(t));
        }
        let w = &st.rma.windows[wid];
        if !w.group.contains(&t) {
            return Err(CommError::NotInGroup(target));
        }
        match &w.access {
            Some(acc) if !acc.contains(&t) => return Err(CommError::NotInAccessGroup(target)),
            Some(_) => {}
            None if w.fence_active || w.passive.is_some() => {}
            None => return Err(CommError::OutsideEpoch),
        }
        Ok(st.rma.windows[st.rma.window_of(t, w.ordinal)].len)
    }

    fn issue(&self, st: &mut SimState, wid: usize, target: usize, msg: RmaMsg) {
        self.release_deferred(st, wid);
        let w = &st.rma.windows[wid];
        if w.access.is_some() && !Self::post_arrived(st, wid, target) {
            st.rma.windows[wid].deferred.push((target, msg));
        } else {
            let now = st.clock(self.idx());
            st.enqueue(self.idx(), target, now, Payload::Rma(msg));
        }
    }

    /// Writes `data` into the target's public copy at `offset`. Completes
    /// locally at once; remote completion is established by the epoch.
    pub fn put(&self, win: &Window, target: RankId, offset: usize, data: &[u8]) -> Result<(), CommError> {
        let mut st = self.lock_state();
        let wid = self.own_window(&st, win)?;
        let tlen = self.check_access(&st, wid, target)?;
        check_bounds(offset, data.len(), tlen)?;
        let now = st.clock(self.idx());
        st.log(now, self.idx(), EventKind::Put, Some(target.0), data.len());
        let w = &mut st.rma.windows[wid];
        *w.issued_to.entry(target.0).or_insert(0) += 1;
        let ack = w.passive.is_some();
        if ack {
            w.acks_pending += 1;
        }
        let msg = RmaMsg::Put {
            win: win.ordinal,
            origin_win: wid,
            offset,
            data: data.to_vec(),
            gen: w.generation,
            ack,
            epoch: if w.fence_active { w.fences } else { 0 },
        };
        self.issue(&mut st, wid, target.0, msg);
        Ok(())
    }

    /// Reads `len` bytes of the target's public copy into `dest` at
    /// `dest_offset`. The data is in place once the epoch completes or the
    /// window is flushed.
    pub fn get(
        &self,
        win: &Window,
        target: RankId,
        offset: usize,
        len: usize,
        dest: &Region,
        dest_offset: usize,
    ) -> Result<(), CommError> {
        let mut st = self.lock_state();
        let wid = self.own_window(&st, win)?;
        self.own_region(&st, dest)?;
        let tlen = self.check_access(&st, wid, target)?;
        check_bounds(offset, len, tlen)?;
        check_bounds(dest_offset, len, dest.len)?;
        let now = st.clock(self.idx());
        st.log(now, self.idx(), EventKind::Get, Some(target.0), len);
        let w = &mut st.rma.windows[wid];
        *w.issued_to.entry(target.0).or_insert(0) += 1;
        w.gets_pending += 1;
        let msg = RmaMsg::GetReq {
            win: win.ordinal,
            origin_win: wid,
            offset,
            len,
            gen: w.generation,
            dest_region: dest.id,
            dest_offset,
            hint: w.sync_hint,
            epoch: if w.fence_active { w.fences } else { 0 },
        };
        self.issue(&mut st, wid, target.0, msg);
        Ok(())
    }

    /// Collective fence over the window group. Closes the previous fence
    /// epoch, if any, and opens the next one unless `nosucceed` is given.
    pub fn fence(&self, win: &Window, a: Assertions) -> Result<(), CommError> {
        let mut st = self.lock_state();
        let wid = self.own_window(&st, win)?;
        let me = self.idx();
        {
            let w = &st.rma.windows[wid];
            if w.access.is_some() || w.exposure.is_some() || w.passive.is_some() {
                return Err(CommError::Epoch("fence while a PSCW or passive epoch is open".into()));
            }
        }
        let now = st.clock(me);
        st.log(now, me, EventKind::FenceEnter, None, 0);
        crate::rma::state::enter_fence(&mut st, wid, now);
        if !(st.cfg.rma.honor_assertions && a.noprecede) {
            let ordinal = win.ordinal;
            let members = st.rma.windows[wid].group.clone();
            let mut tokens = Vec::new();
            for &m in members.iter().filter(|&&m| m != me) {
                let count = st.rma.windows[wid].issued(m);
                self.send_on(&mut st, m, Channel::Fence(ordinal), count.to_le_bytes().to_vec())?;
                tokens.push((m, st.post_recv(me, Some(m), Channel::Fence(ordinal))));
            }
            let self_count = st.rma.windows[wid].issued(me);
            let waiting = tokens.clone();
            st = self.block_on(
                st,
                move || format!("fence on window {ordinal}"),
                Box::new(move |s| {
                    let w = &s.rma.windows[wid];
                    let (got, at) = w.applied(me);
                    if got < self_count || w.gets_pending > 0 {
                        return None;
                    }
                    let t = counted_ready(s, wid, &waiting)?;
                    Some(t.max(w.last_get_reply).max(if self_count > 0 { at } else { 0 }))
                }),
            );
            for (_, id) in tokens {
                st.requests[id as usize].consumed = true;
            }
        }
        st.rma.merge(wid);
        let w = &mut st.rma.windows[wid];
        w.fence_active = !a.nosucceed;
        w.sync_hint = "fence";
        let now = st.clock(me);
        st.log(now, me, EventKind::FenceExit, None, 0);
        Ok(())
    }

    /// Opens an exposure epoch for `group`.
    pub fn post(&self, win: &Window, group: &[RankId]) -> Result<(), CommError> {
        let mut st = self.lock_state();
        let wid = self.own_window(&st, win)?;
        let me = self.idx();
        let members = normalize(group);
        {
            let w = &st.rma.windows[wid];
            if w.fence_active || w.passive.is_some() || w.exposure.is_some() {
                return Err(CommError::Epoch("post while another epoch is open".into()));
            }
            if let Some(&m) = members.iter().find(|m| !w.group.contains(m)) {
                return Err(CommError::NotInGroup(RankId(m)));
            }
        }
        let now = st.clock(me);
        st.log(now, me, EventKind::Post, None, 0);
        let mut done = Vec::new();
        for &g in &members {
            self.send_on(&mut st, g, Channel::Post(win.ordinal), Vec::new())?;
            done.push((g, st.post_recv(me, Some(g), Channel::Done(win.ordinal))));
        }
        let w = &mut st.rma.windows[wid];
        w.done_reqs = done;
        w.exposure = Some(members);
        Ok(())
    }

    /// Opens an access epoch to `group`. Operations to a target whose post
    /// has not yet arrived are held back until it does.
    pub fn start(&self, win: &Window, group: &[RankId]) -> Result<(), CommError> {
        let mut st = self.lock_state();
        let wid = self.own_window(&st, win)?;
        let me = self.idx();
        let members = normalize(group);
        {
            let w = &st.rma.windows[wid];
            if w.fence_active || w.passive.is_some() || w.access.is_some() {
                return Err(CommError::Epoch("start while another epoch is open".into()));
            }
            if let Some(&m) = members.iter().find(|m| !w.group.contains(m)) {
                return Err(CommError::NotInGroup(RankId(m)));
            }
        }
        let now = st.clock(me);
        st.log(now, me, EventKind::Start, None, 0);
        let posts: Vec<(usize, u64)> = members
            .iter()
            .map(|&g| (g, st.post_recv(me, Some(g), Channel::Post(win.ordinal))))
            .collect();
        let ids: Vec<u64> = posts.iter().map(|p| p.1).collect();
        let w = &mut st.rma.windows[wid];
        w.post_reqs = posts;
        w.access = Some(members);
        if st.cfg.rma.start_blocks_for_post {
            let ordinal = win.ordinal;
            drop(self.block_on(
                st,
                move || format!("start on window {ordinal}: waiting for posts"),
                Box::new(move |s| all_done(s, &ids)),
            ));
        }
        Ok(())
    }

    /// Closes the access epoch. Returns once every operation has been
    /// handed to its target and every get has been answered.
    pub fn complete(&self, win: &Window) -> Result<(), CommError> {
        let st = self.lock_state();
        let wid = self.own_window(&st, win)?;
        let me = self.idx();
        if st.rma.windows[wid].access.is_none() {
            return Err(CommError::Epoch("complete without start".into()));
        }
        let ordinal = win.ordinal;
        let ids: Vec<u64> = st.rma.windows[wid].post_reqs.iter().map(|p| p.1).collect();
        let mut st = self.block_on(
            st,
            move || format!("complete on window {ordinal}: waiting for posts"),
            Box::new(move |s| all_done(s, &ids)),
        );
        self.release_deferred(&mut st, wid);
        let posts = std::mem::take(&mut st.rma.windows[wid].post_reqs);
        for &(g, id) in &posts {
            st.requests[id as usize].consumed = true;
            let count = st.rma.windows[wid].issued(g);
            self.send_on(&mut st, g, Channel::Done(ordinal), count.to_le_bytes().to_vec())?;
        }
        let mut st = self.block_on(
            st,
            move || format!("complete on window {ordinal}: waiting for get replies"),
            Box::new(move |s| {
                let w = &s.rma.windows[wid];
                (w.gets_pending == 0).then_some(w.last_get_reply)
            }),
        );
        st.rma.windows[wid].access = None;
        let now = st.clock(me);
        st.log(now, me, EventKind::Complete, None, 0);
        Ok(())
    }

    /// Closes the exposure epoch once every origin has completed and all of
    /// its operations have landed.
    pub fn wait_exposure(&self, win: &Window) -> Result<(), CommError> {
        let mut st = self.lock_state();
        let wid = self.own_window(&st, win)?;
        let me = self.idx();
        if st.rma.windows[wid].exposure.is_none() {
            return Err(CommError::Epoch("wait without post".into()));
        }
        let now = st.clock(me);
        st.log(now, me, EventKind::WaitEnter, None, 0);
        let ordinal = win.ordinal;
        let tokens = std::mem::take(&mut st.rma.windows[wid].done_reqs);
        let waiting = tokens.clone();
        let mut st = self.block_on(
            st,
            move || format!("wait on window {ordinal}"),
            Box::new(move |s| counted_ready(s, wid, &waiting)),
        );
        for (_, id) in tokens {
            st.requests[id as usize].consumed = true;
        }
        st.rma.merge(wid);
        let w = &mut st.rma.windows[wid];
        w.exposure = None;
        w.sync_hint = "wait";
        let now = st.clock(me);
        st.log(now, me, EventKind::WaitExit, None, 0);
        Ok(())
    }

    /// Shared lock on every group member.
    pub fn lock_all(&self, win: &Window, a: Assertions) -> Result<(), CommError> {
        self.lock_all_with(win, LockKind::Shared, a)
    }

    /// Locks every group member. With `nocheck` no lock traffic is sent and
    /// the lock is registered directly; a conflicting holder is recorded as
    /// a violation instead of being waited for.
    pub fn lock_all_with(&self, win: &Window, kind: LockKind, a: Assertions) -> Result<(), CommError> {
        let mut st = self.lock_state();
        if !st.cfg.rma.lock_support {
            return Err(CommError::LocksDisabled);
        }
        let wid = self.own_window(&st, win)?;
        let me = self.idx();
        {
            let w = &st.rma.windows[wid];
            if w.fence_active || w.access.is_some() || w.exposure.is_some() || w.passive.is_some() {
                return Err(CommError::Epoch("lock_all while another epoch is open".into()));
            }
        }
        let now = st.clock(me);
        let seq = st.log(now, me, EventKind::LockAll, None, 0);
        let members = st.rma.windows[wid].group.clone();
        let ordinal = win.ordinal;
        if a.nocheck {
            for &m in &members {
                let tw = st.rma.window_of(m, ordinal);
                let target = &mut st.rma.windows[tw];
                let conflict = !lock_compatible(&target.holders, kind);
                target.holders.insert(me, kind);
                let len = target.len;
                if conflict {
                    st.rma.violations.push(Violation {
                        rank: RankId(me),
                        window: ordinal,
                        offset: 0,
                        len,
                        read_seq: seq,
                        missing_sync: "lock".into(),
                    });
                }
            }
        } else {
            st.rma.windows[wid].grants_pending += members.len() as u64;
            for &m in &members {
                st.enqueue(
                    me,
                    m,
                    now,
                    Payload::Rma(RmaMsg::LockReq {
                        win: ordinal,
                        origin_win: wid,
                        kind,
                    }),
                );
            }
            st = self.block_on(
                st,
                move || format!("lock_all on window {ordinal}"),
                Box::new(move |s| {
                    let w = &s.rma.windows[wid];
                    (w.grants_pending == 0).then_some(w.last_grant)
                }),
            );
        }
        let w = &mut st.rma.windows[wid];
        w.passive = Some((kind, a.nocheck));
        w.sync_hint = "win_sync";
        Ok(())
    }

    fn flush_inner(&self, st: MutexGuard<'w, SimState>, wid: usize, ordinal: usize) -> MutexGuard<'w, SimState> {
        self.block_on(
            st,
            move || format!("flush on window {ordinal}"),
            Box::new(move |s| {
                let w = &s.rma.windows[wid];
                (w.acks_pending == 0 && w.gets_pending == 0).then_some(w.last_ack.max(w.last_get_reply))
            }),
        )
    }

    /// Completes every outstanding operation of this rank on the window at
    /// its target.
    pub fn flush_all(&self, win: &Window) -> Result<(), CommError> {
        let st = self.lock_state();
        let wid = self.own_window(&st, win)?;
        if st.rma.windows[wid].passive.is_none() {
            return Err(CommError::LockNotHeld);
        }
        let mut st = self.flush_inner(st, wid, win.ordinal);
        let now = st.clock(self.idx());
        st.log(now, self.idx(), EventKind::Flush, None, 0);
        Ok(())
    }

    pub fn unlock_all(&self, win: &Window) -> Result<(), CommError> {
        let st = self.lock_state();
        let wid = self.own_window(&st, win)?;
        let me = self.idx();
        let Some((_, nocheck)) = st.rma.windows[wid].passive else {
            return Err(CommError::LockNotHeld);
        };
        let ordinal = win.ordinal;
        let mut st = self.flush_inner(st, wid, ordinal);
        let members = st.rma.windows[wid].group.clone();
        let now = st.clock(me);
        for &m in &members {
            if nocheck {
                let tw = st.rma.window_of(m, ordinal);
                st.rma.windows[tw].holders.remove(&me);
            } else {
                st.enqueue(me, m, now, Payload::Rma(RmaMsg::Unlock { win: ordinal }));
            }
        }
        st.rma.windows[wid].passive = None;
        st.log(now, me, EventKind::UnlockAll, None, 0);
        Ok(())
    }

    /// Synchronizes the public and private copies of this rank's window.
    pub fn win_sync(&self, win: &Window) -> Result<(), CommError> {
        let mut st = self.lock_state();
        let wid = self.own_window(&st, win)?;
        st.rma.merge(wid);
        let now = st.clock(self.idx());
        st.log(now, self.idx(), EventKind::WinSync, None, 0);
        Ok(())
    }

    pub fn epoch_state(&self, win: &Window) -> Result<EpochState, CommError> {
        let st = self.lock_state();
        let wid = self.own_window(&st, win)?;
        let w = &st.rma.windows[wid];
        let ids = |g: &Vec<usize>| g.iter().copied().map(RankId).collect();
        Ok(EpochState {
            fence: w.fence_active,
            access: w.access.as_ref().map(ids),
            exposure: w.exposure.as_ref().map(ids),
            passive: w.passive.map(|(k, _)| k),
        })
    }

    /// Sets the generation stamped on this rank's writes to the window and
    /// expected of data it reads from it.
    pub fn set_window_generation(&self, win: &Window, gen: u64) -> Result<(), CommError> {
        let mut st = self.lock_state();
        let wid = self.own_window(&st, win)?;
        st.rma.windows[wid].generation = gen;
        Ok(())
    }

    /// Local store into the window's private copy.
    pub fn write_window(&self, win: &Window, offset: usize, data: &[u8]) -> Result<(), CommError> {
        let mut st = self.lock_state();
        let wid = self.own_window(&st, win)?;
        check_bounds(offset, data.len(), win.len)?;
        let me = self.idx();
        let gen = st.rma.windows[wid].generation;
        st.rma
            .write_private(wid, offset..offset + data.len(), data, WriteMeta { writer: me, gen });
        let now = st.clock(me);
        st.log(now, me, EventKind::Write, None, data.len());
        Ok(())
    }

    /// Ledger-checked read of the window's private copy.
    pub fn read_window(&self, win: &Window, offset: usize, len: usize) -> Result<MemView<'w>, CommError> {
        self.read_window_parts(win, std::slice::from_ref(&(offset..offset + len)))
    }

    /// Reads several ranges at once; each range is one ledger-checked read.
    pub fn read_window_parts(&self, win: &Window, ranges: &[Range<usize>]) -> Result<MemView<'w>, CommError> {
        let mut st = self.lock_state();
        let wid = self.own_window(&st, win)?;
        let me = self.idx();
        for r in ranges {
            check_bounds(r.start, r.len(), win.len)?;
        }
        let now = st.clock(me);
        let gen = st.rma.windows[wid].generation;
        for r in ranges {
            let seq = st.log(now, me, EventKind::Read, None, r.len());
            if let Some(missing) = st.rma.check_private_read(wid, r.clone(), gen) {
                st.rma.violations.push(Violation {
                    rank: RankId(me),
                    window: win.ordinal,
                    offset: r.start,
                    len: r.len(),
                    read_seq: seq,
                    missing_sync: missing.to_string(),
                });
            }
        }
        let region = st.rma.windows[wid].region;
        Ok(MemView {
            guard: st,
            region,
            ranges: ranges.to_vec(),
        })
    }

    /// Copy of the window's public copy, for inspection. Not ledger-checked.
    pub fn public_snapshot(&self, win: &Window) -> Result<Vec<u8>, CommError> {
        let st = self.lock_state();
        let wid = self.own_window(&st, win)?;
        let w = &st.rma.windows[wid];
        Ok(match (&w.public, w.model) {
            (Some(p), MemoryModel::Separate) => p.clone(),
            _ => st.rma.regions[w.region].bytes.clone(),
        })
    }

    /// Copy of the window's private copy, for inspection. Not ledger-checked.
    pub fn private_snapshot(&self, win: &Window) -> Result<Vec<u8>, CommError> {
        let st = self.lock_state();
        let wid = self.own_window(&st, win)?;
        Ok(st.rma.regions[st.rma.windows[wid].region].bytes.clone())
    }
}
