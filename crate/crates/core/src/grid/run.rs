use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::field::{fields_digest, make_field, pack_halo, unpack_halo, verify_halos, Field, Mismatch};
use super::GridError;
use crate::halo::{ContextStats, DecompositionPlan, Driving, HaloOptions, HaloSwapContext};
use crate::rma::Violation;
use crate::sim::{
    spawn_world, EventLog, Rank, RankId, SimTime, TransportConfig, TransportStats, MICROSECOND, MILLISECOND,
};

/// Simulated compute time each rank spends before a timestep's swaps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ComputeDelay {
    #[default]
    None,
    Fixed(SimTime),
    /// Drawn per rank and step, uniformly from the closed range.
    Uniform {
        lo: SimTime,
        hi: SimTime,
    },
}

impl ComputeDelay {
    pub fn sample(&self, seed: u64, rank: usize, step: usize) -> SimTime {
        match *self {
            ComputeDelay::None => 0,
            ComputeDelay::Fixed(t) => t,
            ComputeDelay::Uniform { lo, hi } => {
                let mix = seed
                    .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                    .wrapping_add((rank as u64) << 32)
                    .wrapping_add(step as u64);
                ChaCha8Rng::seed_from_u64(mix).gen_range(lo..=hi)
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ComputeDelay::None | ComputeDelay::Fixed(0))
            || matches!(self, ComputeDelay::Uniform { lo: 0, hi: 0 })
    }
}

/// Parses `10ms`, `250us`, `3s` or a bare nanosecond count.
pub fn parse_duration(s: &str) -> Result<SimTime, String> {
    let s = s.trim();
    let split = s.find(|c: char| !c.is_ascii_digit() && c != '.').unwrap_or(s.len());
    let (num, unit) = s.split_at(split);
    let value: f64 = num.parse().map_err(|_| format!("bad duration '{s}'"))?;
    let scale = match unit {
        "" | "ns" => 1,
        "us" => MICROSECOND,
        "ms" => MILLISECOND,
        "s" => 1_000 * MILLISECOND,
        other => return Err(format!("unknown duration unit '{other}'")),
    };
    Ok((value * scale as f64).round() as SimTime)
}

fn format_duration(t: SimTime) -> String {
    if t.is_multiple_of(MILLISECOND) {
        format!("{}ms", t / MILLISECOND)
    } else if t.is_multiple_of(MICROSECOND) {
        format!("{}us", t / MICROSECOND)
    } else {
        format!("{t}ns")
    }
}

impl fmt::Display for ComputeDelay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ComputeDelay::None => f.write_str("none"),
            ComputeDelay::Fixed(t) => write!(f, "fixed:{}", format_duration(*t)),
            ComputeDelay::Uniform { lo, hi } => {
                write!(f, "uniform:{}:{}", format_duration(*lo), format_duration(*hi))
            }
        }
    }
}

impl FromStr for ComputeDelay {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        match parts.as_slice() {
            ["none"] => Ok(ComputeDelay::None),
            ["fixed", t] => Ok(ComputeDelay::Fixed(parse_duration(t)?)),
            ["uniform", lo, hi] => {
                let (lo, hi) = (parse_duration(lo)?, parse_duration(hi)?);
                if lo > hi {
                    return Err(format!("empty delay range '{s}'"));
                }
                Ok(ComputeDelay::Uniform { lo, hi })
            }
            _ => Err(format!("bad delay spec '{s}', expected none, fixed:T or uniform:LO:HI")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TimestepConfig {
    pub options: HaloOptions,
    pub fields: usize,
    pub timesteps: usize,
    pub rounds_per_step: usize,
    pub compute_delay: ComputeDelay,
}

impl TimestepConfig {
    pub fn new(options: HaloOptions, fields: usize, timesteps: usize) -> Self {
        Self {
            options,
            fields,
            timesteps,
            rounds_per_step: 1,
            compute_delay: ComputeDelay::None,
        }
    }
}

/// Simulated times of one timestep on one rank.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepStats {
    pub compute: SimTime,
    /// Time inside initiate and complete, over all rounds.
    pub comm: SimTime,
    pub initiate: SimTime,
    pub complete: SimTime,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankRun {
    pub rank: RankId,
    pub steps: Vec<StepStats>,
    pub digest: u64,
    pub context: ContextStats,
    /// Halo cells that held the wrong value, summed over fields and steps.
    pub mismatches: usize,
    /// Field index and cell of the first mismatch seen.
    pub first_mismatch: Option<(usize, Mismatch)>,
}

impl RankRun {
    pub fn check(&self) -> Result<(), GridError> {
        match self.first_mismatch {
            Some((field, first)) => Err(GridError::Mismatch {
                rank: self.rank,
                count: self.mismatches,
                field,
                first,
            }),
            None => Ok(()),
        }
    }
}

/// Runs the timestep loop on one rank: delay, swaps, verification.
/// Mismatches are counted in the result, not raised.
pub fn run_timesteps(rank: &Rank<'_>, plan: &DecompositionPlan, cfg: &TimestepConfig) -> Result<RankRun, GridError> {
    let me = rank.id();
    let mut fields: Vec<Field> = (0..cfg.fields).map(|f| make_field(plan, me, f)).collect();
    let descriptors = fields.iter().map(|f| f.descriptor(format!("f{}", f.index))).collect();
    let mut ctx = HaloSwapContext::init(rank, plan, descriptors, cfg.options)?;
    if cfg.options.driving == Driving::Get {
        ctx.prime(|dir, f, out| pack_halo(&fields[f], dir, out).map_err(|e| e.to_string()))?;
    }
    let seed = rank.seed();
    let mut steps = Vec::with_capacity(cfg.timesteps);
    let mut mismatches = 0;
    let mut first_mismatch = None;
    for step in 0..cfg.timesteps {
        let mut stats = StepStats {
            compute: cfg.compute_delay.sample(seed, me.0, step),
            ..StepStats::default()
        };
        if stats.compute > 0 {
            rank.compute(stats.compute);
        }
        for _ in 0..cfg.rounds_per_step {
            ctx.initiate(|dir, f, out| pack_halo(&fields[f], dir, out).map_err(|e| e.to_string()))?;
            ctx.complete(|view, bytes| {
                unpack_halo(&mut fields[view.field], view.direction, bytes).map_err(|e| e.to_string())
            })?;
            let t = ctx.stats().last;
            stats.initiate += t.initiate;
            stats.complete += t.complete;
            stats.comm += t.total();
        }
        for f in &fields {
            let bad = verify_halos(f);
            if first_mismatch.is_none() {
                first_mismatch = bad.first().map(|m| (f.index, *m));
            }
            mismatches += bad.len();
        }
        steps.push(stats);
    }
    ctx.finalise()?;
    Ok(RankRun {
        rank: me,
        steps,
        digest: fields_digest(&fields),
        context: ctx.stats().clone(),
        mismatches,
        first_mismatch,
    })
}

/// Everything one simulated run produced.
#[derive(Debug)]
pub struct RunOutcome {
    pub ranks: Vec<RankRun>,
    pub violations: Vec<Violation>,
    pub transport: TransportStats,
    pub log: EventLog,
}

impl RunOutcome {
    pub fn mismatches(&self) -> usize {
        self.ranks.iter().map(|r| r.mismatches).sum()
    }

    /// The first rank's mismatch error, if any rank saw one.
    pub fn check(&self) -> Result<(), GridError> {
        self.ranks.iter().try_for_each(RankRun::check)
    }

    /// Digest of every rank's final field bytes, in rank order.
    pub fn digest(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        for r in &self.ranks {
            r.digest.hash(&mut h);
        }
        h.finish()
    }

    fn mean_over_steps(&self, pick: impl Fn(&StepStats) -> SimTime) -> f64 {
        let (sum, n) = self
            .ranks
            .iter()
            .flat_map(|r| r.steps.iter())
            .fold((0u128, 0u64), |(s, n), st| (s + pick(st) as u128, n + 1));
        if n == 0 {
            0.0
        } else {
            sum as f64 / n as f64
        }
    }

    /// Mean communication time per rank and timestep.
    pub fn mean_comm_time(&self) -> f64 {
        self.mean_over_steps(|s| s.comm)
    }

    /// Mean time blocked inside initiate per rank and timestep.
    pub fn mean_initiate_time(&self) -> f64 {
        self.mean_over_steps(|s| s.initiate)
    }

    /// Per-timestep communication time: the mean over ranks of each step.
    pub fn step_comm_times(&self) -> Vec<f64> {
        let steps = self.ranks.first().map_or(0, |r| r.steps.len());
        (0..steps)
            .map(|i| {
                let sum: SimTime = self.ranks.iter().map(|r| r.steps[i].comm).sum();
                sum as f64 / self.ranks.len() as f64
            })
            .collect()
    }
}

/// Spawns a world for `plan` and runs the timestep loop on every rank.
pub fn simulate(
    transport: TransportConfig,
    plan: &DecompositionPlan,
    cfg: &TimestepConfig,
) -> Result<RunOutcome, GridError> {
    if transport.n_ranks != plan.n_ranks() {
        return Err(GridError::RankCount {
            plan: plan.n_ranks(),
            world: transport.n_ranks,
        });
    }
    let out = spawn_world(transport, |rank| run_timesteps(rank, plan, cfg))?;
    let ranks = out.results.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(RunOutcome {
        ranks,
        violations: out.violations,
        transport: out.stats,
        log: out.log,
    })
}
