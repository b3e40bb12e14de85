use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{Schedule, SimTime, TransportConfig};
use super::error::BlockedRank;
use super::log::{Event, EventKind};
use super::RankId;
use crate::rma::state::{RmaMsg, RmaWorld};

/// Readiness predicate of a blocked rank: `Some(t)` once satisfied, where
/// `t` is the simulated time at which it became satisfied.
pub(crate) type WaitFn = Box<dyn Fn(&SimState) -> Option<SimTime> + Send>;

/// Matching namespace of a two-sided message.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) enum Channel {
    User(i64),
    Barrier(u64),
    WinCreate(usize),
    Fence(usize),
    Post(usize),
    Done(usize),
}

impl Channel {
    pub fn is_control(self) -> bool {
        !matches!(self, Channel::User(_))
    }
}

pub(crate) enum Payload {
    Msg { channel: Channel, data: Vec<u8> },
    Rma(RmaMsg),
}

pub(crate) struct Envelope {
    pub seq: u64,
    pub src: usize,
    pub dst: usize,
    pub arrival: SimTime,
    pub enqueued_step: u64,
    pub payload: Payload,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum FifoKey {
    Msg(usize, usize, Channel),
    Lock(usize, usize, usize),
}

impl Envelope {
    fn fifo_key(&self) -> Option<FifoKey> {
        match &self.payload {
            Payload::Msg { channel, .. } => Some(FifoKey::Msg(self.src, self.dst, *channel)),
            Payload::Rma(msg) => msg.lock_channel().map(|w| FifoKey::Lock(self.src, self.dst, w)),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) enum ReqKind {
    Send,
    Recv { src: Option<usize>, channel: Channel },
    Barrier { parts: Vec<u64> },
}

#[derive(Clone, Debug)]
pub(crate) struct ReqRecord {
    pub owner: usize,
    pub kind: ReqKind,
    pub done_at: Option<SimTime>,
    pub source: Option<usize>,
    pub data: Vec<u8>,
    pub consumed: bool,
}

pub(crate) struct Unexpected {
    pub src: usize,
    pub channel: Channel,
    pub data: Vec<u8>,
    pub arrival: SimTime,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum SlotStatus {
    Pending,
    Runnable,
    Blocked,
    Done,
}

pub(crate) struct Slot {
    pub status: SlotStatus,
    pub clock: SimTime,
    pub wait: Option<WaitFn>,
    pub reason: String,
    /// Set after a failed test; the rank is only worth resuming once
    /// something is in flight towards it.
    pub polling: bool,
    pub panic: Option<String>,
    pub contexts: u64,
}

/// Per-world message counters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TransportStats {
    pub messages: u64,
    /// Control traffic: barrier/fence/PSCW tokens, lock traffic and
    /// zero-byte notifications.
    pub sync_messages: u64,
    /// Payload bytes moved by two-sided messages, puts and get replies.
    pub bytes: u64,
}

pub(crate) enum Action {
    Finished,
    Deadlock(Vec<BlockedRank>),
    Deliver(usize),
    Run(usize, SimTime),
}

pub(crate) struct SimState {
    pub cfg: TransportConfig,
    pub rng: ChaCha8Rng,
    pub slots: Vec<Slot>,
    pub running: Option<usize>,
    pub abort: bool,
    pub step: u64,
    next_env_seq: u64,
    pub in_flight: Vec<Envelope>,
    fifo_last: BTreeMap<FifoKey, SimTime>,
    pub requests: Vec<ReqRecord>,
    pub posted: Vec<Vec<u64>>,
    pub unexpected: Vec<VecDeque<Unexpected>>,
    pub events: Vec<Event>,
    pub stats: TransportStats,
    pub rma: RmaWorld,
}

impl SimState {
    pub fn new(cfg: TransportConfig) -> Self {
        let n = cfg.n_ranks;
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        Self {
            rng,
            slots: (0..n)
                .map(|_| Slot {
                    status: SlotStatus::Pending,
                    clock: 0,
                    wait: None,
                    reason: String::new(),
                    polling: false,
                    panic: None,
                    contexts: 0,
                })
                .collect(),
            running: None,
            abort: false,
            step: 0,
            next_env_seq: 0,
            in_flight: Vec::new(),
            fifo_last: BTreeMap::new(),
            requests: Vec::new(),
            posted: vec![Vec::new(); n],
            unexpected: (0..n).map(|_| VecDeque::new()).collect(),
            events: Vec::new(),
            stats: TransportStats::default(),
            rma: RmaWorld::new(n),
            cfg,
        }
    }

    pub fn n_ranks(&self) -> usize {
        self.cfg.n_ranks
    }

    pub fn clock(&self, rank: usize) -> SimTime {
        self.slots[rank].clock
    }

    pub fn log(&mut self, time: SimTime, rank: usize, kind: EventKind, peer: Option<usize>, bytes: usize) -> u64 {
        let seq = self.events.len() as u64;
        self.events.push(Event {
            time,
            rank: RankId(rank),
            kind,
            peer: peer.map(RankId),
            bytes,
            seq,
        });
        seq
    }

    fn latency(&mut self, bytes: usize) -> SimTime {
        let lm = self.cfg.latency;
        let nominal = lm.base_latency as f64 + bytes as f64 * lm.per_byte;
        let factor = if lm.jitter_fraction > 0.0 {
            1.0 + self.rng.gen_range(-lm.jitter_fraction..=lm.jitter_fraction)
        } else {
            1.0
        };
        (nominal * factor).round().max(1.0) as SimTime
    }

    /// Queues an envelope sent at simulated time `at`.
    pub fn enqueue(&mut self, src: usize, dst: usize, at: SimTime, payload: Payload) {
        let (bytes, sync) = match &payload {
            Payload::Msg { channel, data } => (data.len(), channel.is_control() || data.is_empty()),
            Payload::Rma(msg) => (msg.payload_len(), msg.is_sync()),
        };
        self.stats.messages += 1;
        if sync {
            self.stats.sync_messages += 1;
        }
        self.stats.bytes += bytes as u64;
        let mut arrival = at + self.latency(bytes);
        let seq = self.next_env_seq;
        self.next_env_seq += 1;
        let env = Envelope {
            seq,
            src,
            dst,
            arrival,
            enqueued_step: self.step,
            payload,
        };
        if let Some(key) = env.fifo_key() {
            let last = self.fifo_last.entry(key).or_insert(0);
            arrival = arrival.max(*last);
            *last = arrival;
        }
        self.in_flight.push(Envelope { arrival, ..env });
    }

    pub fn new_request(&mut self, owner: usize, kind: ReqKind) -> u64 {
        let id = self.requests.len() as u64;
        self.requests.push(ReqRecord {
            owner,
            kind,
            done_at: None,
            source: None,
            data: Vec::new(),
            consumed: false,
        });
        id
    }

    /// Completion time of a request, if complete.
    pub fn req_done(&self, id: u64) -> Option<SimTime> {
        let rec = &self.requests[id as usize];
        match &rec.kind {
            ReqKind::Barrier { parts } => parts
                .iter()
                .try_fold(rec.done_at.unwrap_or(0), |acc, p| self.req_done(*p).map(|t| acc.max(t))),
            _ => rec.done_at,
        }
    }

    /// Posts a receive, matching the unexpected queue first.
    pub fn post_recv(&mut self, owner: usize, src: Option<usize>, channel: Channel) -> u64 {
        let id = self.new_request(owner, ReqKind::Recv { src, channel });
        let now = self.clock(owner);
        let pos = self.unexpected[owner]
            .iter()
            .position(|u| u.channel == channel && src.is_none_or(|s| s == u.src));
        match pos {
            Some(i) => {
                let u = self.unexpected[owner].remove(i).expect("index in range");
                let rec = &mut self.requests[id as usize];
                rec.done_at = Some(u.arrival.max(now));
                rec.source = Some(u.src);
                rec.data = u.data;
            }
            None => self.posted[owner].push(id),
        }
        id
    }

    fn deliver_msg(&mut self, src: usize, dst: usize, arrival: SimTime, channel: Channel, data: Vec<u8>) {
        self.log(arrival, dst, EventKind::Deliver, Some(src), data.len());
        let requests = &self.requests;
        let pos = self.posted[dst].iter().position(|id| {
            matches!(&requests[*id as usize].kind,
                ReqKind::Recv { src: want, channel: ch } if *ch == channel && want.is_none_or(|s| s == src))
        });
        match pos {
            Some(i) => {
                let id = self.posted[dst].remove(i);
                let rec = &mut self.requests[id as usize];
                rec.done_at = Some(arrival);
                rec.source = Some(src);
                rec.data = data;
            }
            None => self.unexpected[dst].push_back(Unexpected {
                src,
                channel,
                data,
                arrival,
            }),
        }
    }

    pub fn deliver(&mut self, idx: usize) {
        let env = self.in_flight.remove(idx);
        self.slots[env.dst].polling = false;
        match env.payload {
            Payload::Msg { channel, data } => self.deliver_msg(env.src, env.dst, env.arrival, channel, data),
            Payload::Rma(msg) => crate::rma::state::deliver(self, env.src, env.dst, env.arrival, msg),
        }
    }

    /// Picks the next scheduler action according to the configured schedule.
    pub fn choose(&mut self) -> Action {
        let n = self.n_ranks();
        // Deliverable envelopes respect per-key FIFO order.
        let mut seen: BTreeSet<FifoKey> = BTreeSet::new();
        let mut deliverable: Vec<usize> = Vec::new();
        let mut earliest_to: Vec<Option<SimTime>> = vec![None; n];
        for (i, env) in self.in_flight.iter().enumerate() {
            if let Some(key) = env.fifo_key() {
                if !seen.insert(key) {
                    continue;
                }
            }
            deliverable.push(i);
            let slot = &mut earliest_to[env.dst];
            *slot = Some(slot.map_or(env.arrival, |t| t.min(env.arrival)));
        }

        let mut ranks: Vec<(SimTime, usize)> = Vec::new();
        for (r, slot) in self.slots.iter().enumerate() {
            let ready = match slot.status {
                SlotStatus::Pending => Some(slot.clock),
                SlotStatus::Runnable if !slot.polling => Some(slot.clock),
                SlotStatus::Runnable => earliest_to[r],
                SlotStatus::Blocked => slot.wait.as_ref().and_then(|w| w(self)),
                SlotStatus::Done => None,
            };
            if let Some(t) = ready {
                ranks.push((t.max(slot.clock), r));
            }
        }

        if deliverable.is_empty() && ranks.is_empty() {
            if self.slots.iter().all(|s| s.status == SlotStatus::Done) {
                return Action::Finished;
            }
            let blocked = self
                .slots
                .iter()
                .enumerate()
                .filter(|(_, s)| s.status != SlotStatus::Done)
                .map(|(r, s)| BlockedRank {
                    rank: RankId(r),
                    waiting_for: if s.polling && s.status == SlotStatus::Runnable {
                        "a message while polling".to_string()
                    } else {
                        s.reason.clone()
                    },
                })
                .collect();
            return Action::Deadlock(blocked);
        }

        let env_key = |i: usize| {
            let e = &self.in_flight[i];
            (e.arrival, 0u8, e.src, e.seq)
        };
        match self.cfg.schedule {
            Schedule::Fifo => {
                let best_env = deliverable.iter().map(|&i| (env_key(i), i)).min();
                let best_rank = ranks.iter().map(|&(t, r)| ((t, 1u8, r, 0u64), r)).min();
                match (best_env, best_rank) {
                    (Some((ek, i)), Some((rk, r))) => {
                        if ek <= rk {
                            Action::Deliver(i)
                        } else {
                            Action::Run(r, rk.0)
                        }
                    }
                    (Some((_, i)), None) => Action::Deliver(i),
                    (None, Some((rk, r))) => Action::Run(r, rk.0),
                    (None, None) => unreachable!("handled above"),
                }
            }
            Schedule::SeededRandom => {
                let t_env = deliverable.iter().map(|&i| self.in_flight[i].arrival).min();
                let t_rank = ranks.iter().map(|&(t, _)| t).min();
                let t_min = t_env.into_iter().chain(t_rank).min().expect("non-empty");
                let mut options: Vec<Action> = deliverable
                    .iter()
                    .filter(|&&i| self.in_flight[i].arrival == t_min)
                    .map(|&i| Action::Deliver(i))
                    .collect();
                options.extend(
                    ranks
                        .iter()
                        .filter(|&&(t, _)| t == t_min)
                        .map(|&(t, r)| Action::Run(r, t)),
                );
                let pick = self.rng.gen_range(0..options.len());
                options.swap_remove(pick)
            }
            Schedule::Adversarial => {
                let timeout = self.cfg.deadlock_timeout;
                let step = self.step;
                let forced = deliverable
                    .iter()
                    .copied()
                    .filter(|&i| step.saturating_sub(self.in_flight[i].enqueued_step) >= timeout)
                    .min_by_key(|&i| self.in_flight[i].seq);
                if let Some(i) = forced {
                    return Action::Deliver(i);
                }
                let run_rank = !ranks.is_empty() && (deliverable.is_empty() || self.rng.gen_bool(0.5));
                if run_rank {
                    let (t, r) = ranks[self.rng.gen_range(0..ranks.len())];
                    Action::Run(r, t)
                } else {
                    Action::Deliver(deliverable[self.rng.gen_range(0..deliverable.len())])
                }
            }
        }
    }

    /// Makes rank `r` current at simulated time `t`.
    pub fn resume(&mut self, r: usize, t: SimTime) {
        let slot = &mut self.slots[r];
        slot.clock = slot.clock.max(t);
        slot.wait = None;
        slot.status = SlotStatus::Runnable;
        self.running = Some(r);
    }
}
