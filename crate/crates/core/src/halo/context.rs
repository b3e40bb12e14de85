use std::fmt::Write as _;
use std::ops::Range;

use super::neighbors::{neighbor_table, Direction, NeighborTable};
use super::options::{Backend, Driving, EpochPlacement, HaloError, HaloOptions, PassiveVariant};
use super::plan::DecompositionPlan;
use super::sizes::{Accounting, FieldDescriptor};
use crate::rma::{Assertions, MemView, Region, Window};
use crate::sim::{EventKind, MemoryModel, Rank, RankId, Request, SimTime};

const TAG_ORIGIN: i64 = 1 << 20;
const TAG_STRIDE: i64 = 64;
const OFFSET_TAGS: i64 = 0;
const ECHO_TAGS: i64 = 8;
const NOTIFY_TAGS: i64 = 16;
const DATA_TAGS: i64 = 32;
const BARRIER_KEY: i64 = 48;
const PRIME_KEY: i64 = 49;

/// One field's slice of a neighbor's region in the receive buffer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReceiveView {
    pub direction: Direction,
    pub neighbor: RankId,
    pub field: usize,
    /// Byte offset into the receive buffer.
    pub offset: usize,
    pub len: usize,
}

impl ReceiveView {
    pub fn range(&self) -> Range<usize> {
        self.offset..self.offset + self.len
    }
}

/// Simulated time spent inside initiate and complete.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SwapTiming {
    pub initiate: SimTime,
    pub complete: SimTime,
}

impl SwapTiming {
    pub fn total(&self) -> SimTime {
        self.initiate + self.complete
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ContextStats {
    pub swaps: u64,
    pub epochs_opened: u64,
    pub epochs_closed: u64,
    /// Buffers allocated on the unpack path.
    pub unpack_allocations: u64,
    pub last: SwapTiming,
    pub total: SwapTiming,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    Idle,
    InFlight,
    Finalised,
}

/// Per-rank state of a halo swap over a fixed set of fields.
///
/// Every neighbor gets one contiguous region of a single receive buffer,
/// holding all fields back to back. Offsets into that buffer are traded
/// with the neighbors at init, so each rank also knows where its data
/// lands remotely.
pub struct HaloSwapContext<'r, 'w> {
    rank: &'r Rank<'w>,
    options: HaloOptions,
    model: MemoryModel,
    fields: Vec<FieldDescriptor>,
    neighbors: NeighborTable,
    /// Per entry, per field bytes.
    field_bytes: Vec<Vec<usize>>,
    incoming_offsets: Vec<usize>,
    incoming_lens: Vec<usize>,
    remote_offsets: Vec<usize>,
    buffer_len: usize,
    staging: Vec<Vec<u8>>,
    region: Option<Region>,
    window: Option<Window>,
    get_staging: Option<Region>,
    group: Vec<RankId>,
    tag_base: i64,
    phase: Phase,
    epoch_open: bool,
    generation: u64,
    sends: Vec<Request>,
    recvs: Vec<Request>,
    stats: ContextStats,
}

impl<'r, 'w> HaloSwapContext<'r, 'w> {
    /// Collective: every rank of the plan calls this with matching fields
    /// and options, in the same order relative to other contexts.
    pub fn init(
        rank: &'r Rank<'w>,
        plan: &DecompositionPlan,
        fields: Vec<FieldDescriptor>,
        options: HaloOptions,
    ) -> Result<Self, HaloError> {
        let first = fields.first().ok_or(HaloError::NoFields)?;
        if fields
            .iter()
            .any(|f| (f.lx, f.ly, f.lz, f.element_size) != (first.lx, first.ly, first.lz, first.element_size))
        {
            return Err(HaloError::MixedFieldDims);
        }
        let backend = options.backend;
        let rma = rank.rma_config();
        if backend == Backend::Passive && !rma.lock_support {
            return Err(HaloError::LocksUnavailable);
        }
        if options.driving == Driving::Get && !matches!(backend, Backend::Fence | Backend::Pscw) {
            return Err(HaloError::UnsupportedDriving);
        }
        let tag_base = TAG_ORIGIN + rank.next_context_id() as i64 * TAG_STRIDE;
        let neighbors = neighbor_table(plan, rank.id());
        let field_bytes: Vec<Vec<usize>> = neighbors
            .entries
            .iter()
            .map(|n| {
                fields
                    .iter()
                    .map(|f| f.region_bytes(n.kind, plan.depth, Accounting::Geometric))
                    .collect()
            })
            .collect();
        let incoming_lens: Vec<usize> = field_bytes.iter().map(|b| b.iter().sum()).collect();
        let mut incoming_offsets = Vec::with_capacity(incoming_lens.len());
        let mut buffer_len = 0;
        for len in &incoming_lens {
            incoming_offsets.push(buffer_len);
            buffer_len += len;
        }

        let mut ctx = Self {
            rank,
            options,
            model: rma.memory_model,
            fields,
            group: neighbors.distinct_ranks(),
            neighbors,
            field_bytes,
            remote_offsets: vec![0; incoming_lens.len()],
            staging: incoming_lens.iter().map(|&l| vec![0; l]).collect(),
            incoming_offsets,
            incoming_lens,
            buffer_len,
            region: None,
            window: None,
            get_staging: None,
            tag_base,
            phase: Phase::Idle,
            epoch_open: false,
            generation: 0,
            sends: Vec::new(),
            recvs: Vec::new(),
            stats: ContextStats::default(),
        };
        ctx.exchange_offsets()?;
        if options.debug_checks {
            ctx.cross_check_offsets()?;
        }
        if backend.is_rma() {
            let region = rank.alloc_region(buffer_len);
            ctx.window = Some(rank.win_create(&region, &ctx.group)?);
            ctx.region = Some(region);
            if options.driving == Driving::Get {
                ctx.get_staging = Some(rank.alloc_region(buffer_len));
            }
            if ctx.opens_at_init() {
                ctx.open_epoch()?;
            }
        }
        Ok(ctx)
    }

    /// Each rank tells the neighbor in direction `d` where in its buffer
    /// that neighbor's data goes, and how many bytes it expects.
    fn exchange_offsets(&mut self) -> Result<(), HaloError> {
        let rank = self.rank;
        let recvs: Vec<Request> = self
            .neighbors
            .entries
            .iter()
            .map(|n| rank.irecv(n.rank, self.tag(OFFSET_TAGS, n.direction)))
            .collect::<Result<_, _>>()?;
        let mut sends = Vec::new();
        for (e, n) in self.neighbors.entries.iter().enumerate() {
            let mut msg = Vec::with_capacity(16);
            msg.extend_from_slice(&(self.incoming_offsets[e] as u64).to_le_bytes());
            msg.extend_from_slice(&(self.incoming_lens[e] as u64).to_le_bytes());
            sends.push(rank.isend(n.rank, self.tag(OFFSET_TAGS, n.direction.opposite()), &msg)?);
        }
        for (e, req) in recvs.iter().enumerate() {
            let status = rank.wait(req)?;
            let n = self.neighbors.entries[e];
            let (offset, len) = decode_pair(&status.data);
            if len != self.incoming_lens[e] {
                return Err(HaloError::InconsistentFields {
                    neighbor: n.rank,
                    direction: n.direction,
                    expected: self.incoming_lens[e],
                    got: len,
                });
            }
            self.remote_offsets[e] = offset;
        }
        rank.wait_all(&sends)?;
        Ok(())
    }

    /// Echoes every learned remote offset back to its owner, who checks it
    /// against its own table.
    fn cross_check_offsets(&self) -> Result<(), HaloError> {
        let rank = self.rank;
        let recvs: Vec<Request> = self
            .neighbors
            .entries
            .iter()
            .map(|n| rank.irecv(n.rank, self.tag(ECHO_TAGS, n.direction)))
            .collect::<Result<_, _>>()?;
        let mut sends = Vec::new();
        for (e, n) in self.neighbors.entries.iter().enumerate() {
            let msg = (self.remote_offsets[e] as u64).to_le_bytes();
            sends.push(rank.isend(n.rank, self.tag(ECHO_TAGS, n.direction.opposite()), &msg)?);
        }
        let mut result = Ok(());
        for (e, req) in recvs.iter().enumerate() {
            let status = rank.wait(req)?;
            let n = self.neighbors.entries[e];
            if decode_u64(&status.data) != self.incoming_offsets[e] as u64 && result.is_ok() {
                result = Err(HaloError::OffsetMismatch {
                    neighbor: n.rank,
                    direction: n.direction,
                });
            }
        }
        rank.wait_all(&sends)?;
        result
    }

    fn tag(&self, block: i64, dir: Direction) -> i64 {
        self.tag_base + block + dir.index() as i64
    }

    fn barrier_members(&self) -> Vec<RankId> {
        let mut g = self.group.clone();
        g.push(self.rank.id());
        g
    }

    fn win(&self) -> &Window {
        self.window.as_ref().expect("RMA backends own a window")
    }

    fn opens_at_init(&self) -> bool {
        match self.options.backend {
            Backend::P2p => false,
            Backend::Fence | Backend::Pscw => self.options.epoch_placement == EpochPlacement::Shifted,
            Backend::Passive => self.options.passive_variant == PassiveVariant::Adopted,
        }
    }

    fn opens_at_initiate(&self) -> bool {
        match self.options.backend {
            Backend::P2p => false,
            Backend::Fence | Backend::Pscw => self.options.epoch_placement == EpochPlacement::Naive,
            Backend::Passive => self.options.passive_variant == PassiveVariant::Simple,
        }
    }

    fn open_epoch(&mut self) -> Result<(), HaloError> {
        let rank = self.rank;
        let win = self.win();
        match self.options.backend {
            Backend::Fence => rank.fence(win, Assertions::NOPRECEDE)?,
            Backend::Pscw => {
                rank.post(win, &self.group)?;
                rank.start(win, &self.group)?;
            }
            Backend::Passive => {
                let a = match self.options.passive_variant {
                    PassiveVariant::Adopted => Assertions::NOCHECK,
                    PassiveVariant::Simple => Assertions::NONE,
                };
                rank.lock_all(win, a)?;
            }
            Backend::P2p => unreachable!("p2p has no epochs"),
        }
        self.epoch_open = true;
        self.stats.epochs_opened += 1;
        rank.log_event(EventKind::EpochOpen, 0);
        Ok(())
    }

    fn close_epoch(&mut self) -> Result<(), HaloError> {
        let rank = self.rank;
        let win = self.win();
        match self.options.backend {
            Backend::Fence => rank.fence(win, Assertions::NOSUCCEED)?,
            Backend::Pscw => {
                rank.complete(win)?;
                rank.wait_exposure(win)?;
            }
            Backend::Passive => rank.unlock_all(win)?,
            Backend::P2p => unreachable!("p2p has no epochs"),
        }
        self.epoch_open = false;
        self.stats.epochs_closed += 1;
        rank.log_event(EventKind::EpochClose, 0);
        Ok(())
    }

    fn check_live(&self) -> Result<(), HaloError> {
        match self.phase {
            Phase::Finalised => Err(HaloError::Finalised),
            _ => Ok(()),
        }
    }

    fn pack_all<P>(&mut self, pack: &mut P) -> Result<(), HaloError>
    where
        P: FnMut(Direction, usize, &mut [u8]) -> Result<(), String>,
    {
        for (e, n) in self.neighbors.entries.iter().enumerate() {
            let mut off = 0;
            for (f, &len) in self.field_bytes[e].iter().enumerate() {
                pack(n.direction, f, &mut self.staging[e][off..off + len]).map_err(HaloError::Pack)?;
                off += len;
            }
        }
        Ok(())
    }

    /// Get-driven contexts only: publishes an initial copy of the outgoing
    /// data so reads that race ahead of a neighbor's packing still find
    /// well-formed bytes. Collective over the neighbors; call once, right
    /// after init.
    pub fn prime<P>(&mut self, mut pack: P) -> Result<(), HaloError>
    where
        P: FnMut(Direction, usize, &mut [u8]) -> Result<(), String>,
    {
        self.check_live()?;
        if self.options.driving != Driving::Get || self.generation != 0 || self.phase != Phase::Idle {
            return Err(HaloError::PrimeOutOfOrder);
        }
        self.pack_all(&mut pack)?;
        let rank = self.rank;
        for e in 0..self.staging.len() {
            rank.write_window(self.win(), self.incoming_offsets[e], &self.staging[e])?;
        }
        rank.win_sync(self.win())?;
        let req = rank.ibarrier_with_key(&self.barrier_members(), (self.tag_base + PRIME_KEY) as u64)?;
        rank.wait(&req)?;
        Ok(())
    }

    /// Packs every field for every neighbor and starts the transfers.
    pub fn initiate<P>(&mut self, mut pack: P) -> Result<(), HaloError>
    where
        P: FnMut(Direction, usize, &mut [u8]) -> Result<(), String>,
    {
        self.check_live()?;
        if self.phase == Phase::InFlight {
            return Err(HaloError::SwapInFlight);
        }
        let rank = self.rank;
        let t0 = rank.now();
        self.generation += 1;
        if let Some(win) = &self.window {
            rank.set_window_generation(win, self.generation)?;
        }
        self.pack_all(&mut pack)?;
        let entries = self.neighbors.entries.clone();
        match self.options.backend {
            Backend::P2p => {
                self.recvs = entries
                    .iter()
                    .map(|n| rank.irecv(n.rank, self.tag(DATA_TAGS, n.direction)))
                    .collect::<Result<_, _>>()?;
                self.sends = entries
                    .iter()
                    .enumerate()
                    .map(|(e, n)| rank.isend(n.rank, self.tag(DATA_TAGS, n.direction.opposite()), &self.staging[e]))
                    .collect::<Result<_, _>>()?;
            }
            _ => match self.options.driving {
                Driving::Put => {
                    if self.opens_at_initiate() {
                        self.open_epoch()?;
                    }
                    for (e, n) in entries.iter().enumerate() {
                        rank.put(self.win(), n.rank, self.remote_offsets[e], &self.staging[e])?;
                    }
                }
                Driving::Get => {
                    for e in 0..entries.len() {
                        rank.write_window(self.win(), self.incoming_offsets[e], &self.staging[e])?;
                    }
                    if self.opens_at_initiate() {
                        self.open_epoch()?;
                    }
                    let dest = self.get_staging.expect("get-driven contexts own a staging region");
                    for (e, n) in entries.iter().enumerate() {
                        rank.get(
                            self.win(),
                            n.rank,
                            self.remote_offsets[e],
                            self.incoming_lens[e],
                            &dest,
                            self.incoming_offsets[e],
                        )?;
                    }
                }
            },
        }
        if self.options.backend == Backend::Passive && self.options.passive_variant == PassiveVariant::Adopted {
            self.recvs = entries
                .iter()
                .map(|n| rank.irecv(n.rank, self.tag(NOTIFY_TAGS, n.direction)))
                .collect::<Result<_, _>>()?;
        }
        self.stats.last.initiate = rank.now() - t0;
        self.phase = Phase::InFlight;
        Ok(())
    }

    /// Blocks until every halo region has arrived and been handed to
    /// `unpack`, one call per neighbor and field.
    pub fn complete<U>(&mut self, mut unpack: U) -> Result<(), HaloError>
    where
        U: FnMut(&ReceiveView, &[u8]) -> Result<(), String>,
    {
        self.check_live()?;
        if self.phase != Phase::InFlight {
            return Err(HaloError::NoSwapInFlight);
        }
        let rank = self.rank;
        let t0 = rank.now();
        let all: Vec<usize> = (0..self.neighbors.len()).collect();
        match self.options.backend {
            Backend::P2p => {
                rank.wait_all(&std::mem::take(&mut self.sends))?;
                let recvs = std::mem::take(&mut self.recvs);
                for (e, req) in recvs.iter().enumerate() {
                    let status = rank.wait(req)?;
                    if status.data.len() != self.incoming_lens[e] {
                        return Err(HaloError::Unpack(format!(
                            "{} region is {} bytes, expected {}",
                            self.neighbors.entries[e].direction,
                            status.data.len(),
                            self.incoming_lens[e]
                        )));
                    }
                    self.unpack_entry(e, &status.data, &mut unpack)?;
                }
            }
            Backend::Fence | Backend::Pscw => {
                self.close_epoch()?;
                self.unpack_entries(&all, &mut unpack)?;
                if self.options.epoch_placement == EpochPlacement::Shifted {
                    self.open_epoch()?;
                }
            }
            Backend::Passive => match self.options.passive_variant {
                PassiveVariant::Adopted => self.complete_adopted(&mut unpack)?,
                PassiveVariant::Simple => {
                    self.close_epoch()?;
                    let req = rank.ibarrier_with_key(&self.barrier_members(), (self.tag_base + BARRIER_KEY) as u64)?;
                    rank.wait(&req)?;
                    if self.needs_win_sync() {
                        rank.win_sync(self.win())?;
                    }
                    self.unpack_entries(&all, &mut unpack)?;
                }
            },
        }
        self.stats.last.complete = rank.now() - t0;
        self.stats.total.initiate += self.stats.last.initiate;
        self.stats.total.complete += self.stats.last.complete;
        self.stats.swaps += 1;
        self.phase = Phase::Idle;
        Ok(())
    }

    fn needs_win_sync(&self) -> bool {
        self.model == MemoryModel::Separate && !self.options.suppress_win_sync
    }

    /// Flush, notify every neighbor, then unpack each region as its
    /// neighbor's notification arrives.
    fn complete_adopted<U>(&mut self, unpack: &mut U) -> Result<(), HaloError>
    where
        U: FnMut(&ReceiveView, &[u8]) -> Result<(), String>,
    {
        let rank = self.rank;
        rank.flush_all(self.win())?;
        let sends: Vec<Request> = self
            .neighbors
            .entries
            .iter()
            .map(|n| rank.isend(n.rank, self.tag(NOTIFY_TAGS, n.direction.opposite()), &[]))
            .collect::<Result<_, _>>()?;
        let notes = std::mem::take(&mut self.recvs);
        let mut left = notes.len();
        while left > 0 {
            if let Some((e, _)) = rank.test_any(&notes)? {
                if self.needs_win_sync() {
                    rank.win_sync(self.win())?;
                }
                self.unpack_entries(&[e], unpack)?;
                left -= 1;
            }
        }
        rank.wait_all(&sends)?;
        Ok(())
    }

    fn read_entries(&self, entries: &[usize]) -> Result<MemView<'w>, HaloError> {
        let ranges: Vec<Range<usize>> = entries
            .iter()
            .map(|&e| self.incoming_offsets[e]..self.incoming_offsets[e] + self.incoming_lens[e])
            .collect();
        Ok(match &self.get_staging {
            Some(staging) => self.rank.read_region_parts(staging, &ranges)?,
            None => self.rank.read_window_parts(self.win(), &ranges)?,
        })
    }

    fn unpack_entries<U>(&mut self, entries: &[usize], unpack: &mut U) -> Result<(), HaloError>
    where
        U: FnMut(&ReceiveView, &[u8]) -> Result<(), String>,
    {
        let view = self.read_entries(entries)?;
        for (k, &e) in entries.iter().enumerate() {
            if self.options.copy_out_unpack {
                let copy = view.part(k).to_vec();
                self.stats.unpack_allocations += 1;
                self.unpack_entry(e, &copy, unpack)?;
            } else {
                self.unpack_entry(e, view.part(k), unpack)?;
            }
        }
        Ok(())
    }

    fn unpack_entry<U>(&self, e: usize, bytes: &[u8], unpack: &mut U) -> Result<(), HaloError>
    where
        U: FnMut(&ReceiveView, &[u8]) -> Result<(), String>,
    {
        let n = self.neighbors.entries[e];
        let mut off = 0;
        for (f, &len) in self.field_bytes[e].iter().enumerate() {
            let view = ReceiveView {
                direction: n.direction,
                neighbor: n.rank,
                field: f,
                offset: self.incoming_offsets[e] + off,
                len,
            };
            unpack(&view, &bytes[off..off + len]).map_err(HaloError::Unpack)?;
            off += len;
        }
        Ok(())
    }

    /// Closes the trailing epoch and releases the buffers. The context is
    /// unusable afterwards.
    pub fn finalise(&mut self) -> Result<(), HaloError> {
        match self.phase {
            Phase::Finalised => return Err(HaloError::Finalised),
            Phase::InFlight => return Err(HaloError::SwapInFlight),
            Phase::Idle => {}
        }
        if self.epoch_open {
            self.close_epoch()?;
        }
        self.staging = Vec::new();
        self.phase = Phase::Finalised;
        Ok(())
    }

    /// Per-field views of the region reserved for the neighbor in `dir`.
    pub fn subbuffer_views(&self, dir: Direction) -> Result<Vec<ReceiveView>, HaloError> {
        self.check_live()?;
        let e = self.neighbors.position(dir).ok_or(HaloError::UnknownNeighbor(dir))?;
        let n = self.neighbors.entries[e];
        let mut off = self.incoming_offsets[e];
        Ok(self.field_bytes[e]
            .iter()
            .enumerate()
            .map(|(f, &len)| {
                let v = ReceiveView {
                    direction: dir,
                    neighbor: n.rank,
                    field: f,
                    offset: off,
                    len,
                };
                off += len;
                v
            })
            .collect())
    }

    /// Ledger-checked read of the bytes behind a view.
    pub fn read_view(&self, view: &ReceiveView) -> Result<MemView<'w>, HaloError> {
        self.check_live()?;
        let range = view.range();
        Ok(match &self.get_staging {
            Some(staging) => self.rank.read_region(staging, range.start, range.len())?,
            None => match &self.window {
                Some(win) => self.rank.read_window(win, range.start, range.len())?,
                None => return Err(HaloError::Unpack("p2p contexts have no receive buffer".into())),
            },
        })
    }

    /// Stores into the receive buffer through a view.
    pub fn write_view(&self, view: &ReceiveView, data: &[u8]) -> Result<(), HaloError> {
        self.check_live()?;
        if data.len() > view.len {
            return Err(HaloError::Unpack(format!(
                "{} bytes do not fit a {}-byte view",
                data.len(),
                view.len
            )));
        }
        match &self.window {
            Some(win) => self.rank.write_window(win, view.offset, data)?,
            None => return Err(HaloError::Unpack("p2p contexts have no receive buffer".into())),
        }
        Ok(())
    }

    pub fn neighbors(&self) -> &NeighborTable {
        &self.neighbors
    }

    pub fn fields(&self) -> &[FieldDescriptor] {
        &self.fields
    }

    pub fn options(&self) -> &HaloOptions {
        &self.options
    }

    pub fn incoming_offsets(&self) -> &[usize] {
        &self.incoming_offsets
    }

    pub fn incoming_lens(&self) -> &[usize] {
        &self.incoming_lens
    }

    pub fn remote_offsets(&self) -> &[usize] {
        &self.remote_offsets
    }

    pub fn buffer_len(&self) -> usize {
        self.buffer_len
    }

    pub fn window(&self) -> Option<&Window> {
        self.window.as_ref()
    }

    pub fn group(&self) -> &[RankId] {
        &self.group
    }

    pub fn epoch_open(&self) -> bool {
        self.epoch_open
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn tag_base(&self) -> i64 {
        self.tag_base
    }

    pub fn stats(&self) -> &ContextStats {
        &self.stats
    }

    pub fn is_finalised(&self) -> bool {
        self.phase == Phase::Finalised
    }

    /// Neighbor table, region sizes and both offset tables as text.
    pub fn debug_dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "halo context rank={} backend={} fields={} buffer={}B epoch_open={}",
            self.rank.id(),
            self.options.backend,
            self.fields.len(),
            self.buffer_len,
            self.epoch_open
        );
        let _ = writeln!(s, "dir   rank  kind    bytes  incoming  remote");
        for (e, n) in self.neighbors.entries.iter().enumerate() {
            let _ = writeln!(
                s,
                "{:<5} {:<5} {:<7} {:<6} {:<9} {}",
                n.direction.name(),
                n.rank,
                format!("{:?}", n.kind),
                self.incoming_lens[e],
                self.incoming_offsets[e],
                self.remote_offsets[e]
            );
        }
        s
    }
}

fn decode_u64(b: &[u8]) -> u64 {
    let mut a = [0u8; 8];
    a.copy_from_slice(&b[..8]);
    u64::from_le_bytes(a)
}

fn decode_pair(b: &[u8]) -> (usize, usize) {
    (decode_u64(&b[..8]) as usize, decode_u64(&b[8..16]) as usize)
}
