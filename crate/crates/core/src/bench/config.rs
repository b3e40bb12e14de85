use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use super::BenchError;
use crate::grid::ComputeDelay;
use crate::halo::{Backend, Driving, EpochPlacement, PassiveVariant, DEFAULT_DEPTH};
use crate::sim::{MemoryModel, Schedule};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Mode {
    /// Local dims fixed per rank.
    #[default]
    Weak,
    /// Global dims fixed, split over the ranks.
    Strong,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Weak => "weak",
            Mode::Strong => "strong",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "weak" => Ok(Mode::Weak),
            "strong" => Ok(Mode::Strong),
            other => Err(format!("unknown mode '{other}'")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub mode: Mode,
    pub backends: Vec<Backend>,
    pub ranks: Vec<usize>,
    pub local_grid: (usize, usize, usize),
    pub global_grid: (usize, usize, usize),
    pub fields: usize,
    pub timesteps: usize,
    pub rounds_per_step: usize,
    /// First seed; run `r` uses `seed + r`.
    pub seed: u64,
    pub runs: usize,
    pub memory_model: MemoryModel,
    pub honor_assertions: bool,
    pub schedule: Schedule,
    pub passive_variant: PassiveVariant,
    pub epoch_placement: EpochPlacement,
    pub driving: Driving,
    pub periodic: bool,
    pub depth: usize,
    pub imbalance: ComputeDelay,
    pub csv: Option<PathBuf>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Weak,
            backends: Backend::ALL.to_vec(),
            ranks: vec![4, 9, 16],
            local_grid: (16, 16, 256),
            global_grid: (2048, 2048, 128),
            fields: 28,
            timesteps: 50,
            rounds_per_step: 1,
            seed: 7,
            runs: 3,
            memory_model: MemoryModel::Separate,
            honor_assertions: false,
            schedule: Schedule::Fifo,
            passive_variant: PassiveVariant::Adopted,
            epoch_placement: EpochPlacement::Shifted,
            driving: Driving::Put,
            periodic: true,
            depth: DEFAULT_DEPTH,
            imbalance: ComputeDelay::None,
            csv: None,
        }
    }
}

/// Parses `16x16x256`.
pub fn parse_dims(s: &str) -> Result<(usize, usize, usize), String> {
    let parts: Vec<usize> = s
        .trim()
        .split(['x', 'X'])
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| format!("bad grid '{s}', expected NXxNYxNZ"))?;
    match parts.as_slice() {
        [x, y, z] => Ok((*x, *y, *z)),
        _ => Err(format!("bad grid '{s}', expected NXxNYxNZ")),
    }
}

fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>, String>
where
    T::Err: fmt::Display,
{
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse::<T>().map_err(|e| e.to_string()))
        .collect()
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "" | "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        other => Err(format!("bad boolean '{other}'")),
    }
}

fn parse<T: FromStr>(s: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    s.trim().parse::<T>().map_err(|e| e.to_string())
}

impl BenchConfig {
    /// Keys accepted by [`BenchConfig::set`], in the spelling of the CLI
    /// flags.
    pub const KEYS: &'static [&'static str] = &[
        "mode",
        "backend",
        "ranks",
        "local-grid",
        "global-grid",
        "fields",
        "timesteps",
        "rounds",
        "seed",
        "runs",
        "memory-model",
        "honor-assertions",
        "schedule",
        "passive-variant",
        "epoch-placement",
        "driving",
        "periodic",
        "depth",
        "imbalance",
        "csv",
    ];

    /// Sets one option from its text form. Underscores in `key` are read as
    /// dashes.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), BenchError> {
        let key = key.trim().replace('_', "-");
        let v = value.trim();
        let res: Result<(), String> = (|| {
            match key.as_str() {
                "mode" => self.mode = parse(v)?,
                "backend" | "backends" => self.backends = parse_list(v)?,
                "ranks" => self.ranks = parse_list(v)?,
                "local-grid" => self.local_grid = parse_dims(v)?,
                "global-grid" => self.global_grid = parse_dims(v)?,
                "fields" => self.fields = parse(v)?,
                "timesteps" => self.timesteps = parse(v)?,
                "rounds" | "rounds-per-step" => self.rounds_per_step = parse(v)?,
                "seed" => self.seed = parse(v)?,
                "runs" => self.runs = parse(v)?,
                "memory-model" => self.memory_model = parse(v)?,
                "honor-assertions" => self.honor_assertions = parse_bool(v)?,
                "schedule" => self.schedule = parse(v)?,
                "passive-variant" => self.passive_variant = parse(v)?,
                "epoch-placement" => self.epoch_placement = parse(v)?,
                "driving" => self.driving = parse(v)?,
                "periodic" => self.periodic = parse_bool(v)?,
                "depth" => self.depth = parse(v)?,
                "imbalance" => self.imbalance = parse(v)?,
                "csv" => self.csv = (!v.is_empty()).then(|| PathBuf::from(v)),
                other => return Err(format!("unknown key '{other}'")),
            }
            Ok(())
        })();
        res.map_err(|msg| BenchError::Config(format!("{key}: {msg}")))
    }

    /// Applies a config file body: one `key=value` per line, `#` starts a
    /// comment, blank lines are skipped.
    pub fn apply_file_text(&mut self, text: &str) -> Result<(), BenchError> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| BenchError::Config(format!("line {}: expected key=value", n + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let fail = |m: &str| Err(BenchError::Config(m.to_string()));
        if self.backends.is_empty() {
            return fail("no backends selected");
        }
        if self.ranks.is_empty() || self.ranks.contains(&0) {
            return fail("rank counts must be positive");
        }
        if self.fields == 0 {
            return fail("at least one field is required");
        }
        if self.timesteps == 0 || self.rounds_per_step == 0 || self.runs == 0 {
            return fail("timesteps, rounds and runs must be positive");
        }
        Ok(())
    }
}
