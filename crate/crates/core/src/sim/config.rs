use std::fmt;
use std::str::FromStr;

/// Simulated time in nanoseconds.
pub type SimTime = u64;

pub const MICROSECOND: SimTime = 1_000;
pub const MILLISECOND: SimTime = 1_000_000;

/// Order in which the scheduler picks between runnable ranks and
/// in-flight deliveries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Schedule {
    /// Strict simulated-time order, ties broken by (rank, sequence).
    #[default]
    Fifo,
    /// Simulated-time order with ties broken by the seeded generator.
    SeededRandom,
    /// Any enabled action may be picked, ignoring time, so deliveries can be
    /// held back for up to `deadlock_timeout` scheduler steps.
    Adversarial,
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Schedule::Fifo => "fifo",
            Schedule::SeededRandom => "random",
            Schedule::Adversarial => "adversarial",
        })
    }
}

impl FromStr for Schedule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fifo" => Ok(Schedule::Fifo),
            "random" | "seeded_random" | "seeded-random" => Ok(Schedule::SeededRandom),
            "adversarial" => Ok(Schedule::Adversarial),
            other => Err(format!("unknown schedule '{other}'")),
        }
    }
}

/// Whether a window keeps distinct public and private copies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum MemoryModel {
    #[default]
    Separate,
    Unified,
}

impl fmt::Display for MemoryModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MemoryModel::Separate => "separate",
            MemoryModel::Unified => "unified",
        })
    }
}

impl FromStr for MemoryModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "separate" => Ok(MemoryModel::Separate),
            "unified" => Ok(MemoryModel::Unified),
            other => Err(format!("unknown memory model '{other}'")),
        }
    }
}

/// Linear latency model: `base_latency + bytes * per_byte`, scaled by a
/// uniformly drawn factor in `[1 - jitter_fraction, 1 + jitter_fraction]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatencyModel {
    pub base_latency: SimTime,
    /// Nanoseconds per payload byte.
    pub per_byte: f64,
    pub jitter_fraction: f64,
}

impl Default for LatencyModel {
    fn default() -> Self {
        // Placeholder values, roughly a 2us / 10 GB/s interconnect.
        Self {
            base_latency: 2 * MICROSECOND,
            per_byte: 0.1,
            jitter_fraction: 0.1,
        }
    }
}

/// Knobs of the one-sided engine.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RmaConfig {
    pub memory_model: MemoryModel,
    /// Whether fence assertions change behaviour. When false every fence
    /// synchronizes the window group.
    pub honor_assertions: bool,
    pub start_blocks_for_post: bool,
    /// Disabling this makes every lock call fail.
    pub lock_support: bool,
}

impl Default for RmaConfig {
    fn default() -> Self {
        Self {
            memory_model: MemoryModel::Separate,
            honor_assertions: false,
            start_blocks_for_post: false,
            lock_support: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransportConfig {
    pub n_ranks: usize,
    pub seed: u64,
    pub latency: LatencyModel,
    pub schedule: Schedule,
    /// Maximum number of scheduler steps a deliverable message may be held
    /// back under the adversarial schedule.
    pub deadlock_timeout: u64,
    /// Hard cap on scheduler steps; exceeding it aborts the world.
    pub max_steps: u64,
    pub rma: RmaConfig,
}

impl TransportConfig {
    pub fn new(n_ranks: usize, seed: u64) -> Self {
        Self {
            n_ranks,
            seed,
            latency: LatencyModel::default(),
            schedule: Schedule::Fifo,
            deadlock_timeout: 64,
            max_steps: 200_000_000,
            rma: RmaConfig::default(),
        }
    }

    pub fn with_schedule(mut self, schedule: Schedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn with_memory_model(mut self, model: MemoryModel) -> Self {
        self.rma.memory_model = model;
        self
    }

    pub fn with_honor_assertions(mut self, honor: bool) -> Self {
        self.rma.honor_assertions = honor;
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.n_ranks == 0 {
            return Err("n_ranks must be at least 1".into());
        }
        let j = self.latency.jitter_fraction;
        if !(0.0..1.0).contains(&j) {
            return Err(format!("jitter_fraction must be in [0, 1), got {j}"));
        }
        if !(self.latency.per_byte >= 0.0 && self.latency.per_byte.is_finite()) {
            return Err("per_byte must be a finite non-negative number".into());
        }
        if self.deadlock_timeout == 0 {
            return Err("deadlock_timeout must be positive".into());
        }
        Ok(())
    }
}
