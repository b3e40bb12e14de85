use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{BenchError, Mode};
use crate::halo::Backend;

pub const CSV_HEADER: &str = "mode,backend,ranks,fields,mean_comm_time,init_block_time,sync_msgs,bytes,violations";

/// Results for one (backend, rank count) pair, over every run.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchCell {
    pub mode: Mode,
    pub backend: Backend,
    pub ranks: usize,
    pub fields: usize,
    /// Mean communication time per rank and timestep, in simulated ns.
    pub mean_comm_time: f64,
    /// Fastest and slowest timestep, each averaged over ranks.
    pub min_comm_time: f64,
    pub max_comm_time: f64,
    /// Mean time per rank and timestep spent inside initiate.
    pub init_block_time: f64,
    /// Summed over runs.
    pub sync_msgs: u64,
    pub bytes: u64,
    pub violations: usize,
    pub mismatches: usize,
    pub runs: usize,
    pub timesteps: usize,
}

impl BenchCell {
    pub fn failed(&self) -> bool {
        self.violations > 0 || self.mismatches > 0
    }

    pub fn sync_msgs_per_step(&self) -> f64 {
        self.sync_msgs as f64 / (self.runs * self.timesteps).max(1) as f64
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{:.3},{:.3},{},{},{}",
            self.mode,
            self.backend,
            self.ranks,
            self.fields,
            self.mean_comm_time / 1e3,
            self.init_block_time / 1e3,
            self.sync_msgs,
            self.bytes,
            self.violations
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BenchReport {
    pub cells: Vec<BenchCell>,
}

impl BenchReport {
    pub fn failed(&self) -> bool {
        self.cells.iter().any(BenchCell::failed)
    }

    pub fn violations(&self) -> usize {
        self.cells.iter().map(|c| c.violations).sum()
    }

    pub fn mismatches(&self) -> usize {
        self.cells.iter().map(|c| c.mismatches).sum()
    }

    /// Times are written in simulated microseconds.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for c in &self.cells {
            out.push_str(&c.csv_row());
            out.push('\n');
        }
        out
    }

    /// One line per cell for terminal output.
    pub fn table(&self) -> String {
        let mut out = format!(
            "{:<7} {:<8} {:>5} {:>12} {:>12} {:>12} {:>12} {:>10} {:>10}\n",
            "mode", "backend", "ranks", "comm_us", "min_us", "max_us", "init_us", "sync/step", "violations"
        );
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{:<7} {:<8} {:>5} {:>12.3} {:>12.3} {:>12.3} {:>12.3} {:>10.1} {:>10}{}",
                c.mode.to_string(),
                c.backend.as_str(),
                c.ranks,
                c.mean_comm_time / 1e3,
                c.min_comm_time / 1e3,
                c.max_comm_time / 1e3,
                c.init_block_time / 1e3,
                c.sync_msgs_per_step(),
                c.violations,
                if c.failed() { "  FAILED" } else { "" }
            );
        }
        out
    }
}

pub fn write_csv(report: &BenchReport, path: &Path) -> Result<(), BenchError> {
    std::fs::write(path, report.to_csv()).map_err(|e| BenchError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Ranks the backends of each rank count by mean communication time, with
/// the change relative to p2p (or to the first backend listed when p2p was
/// not run).
pub fn compare_backends(report: &BenchReport) -> Result<String, BenchError> {
    let mut backends: Vec<Backend> = Vec::new();
    for c in &report.cells {
        if !backends.contains(&c.backend) {
            backends.push(c.backend);
        }
    }
    if backends.len() < 2 {
        return Err(BenchError::TooFewBackends(backends.len()));
    }
    let mut by_ranks: BTreeMap<usize, Vec<&BenchCell>> = BTreeMap::new();
    for c in &report.cells {
        by_ranks.entry(c.ranks).or_default().push(c);
    }
    let mut out = String::new();
    for (ranks, mut cells) in by_ranks {
        let Some(base) = cells
            .iter()
            .find(|c| c.backend == Backend::P2p)
            .or_else(|| cells.first())
            .copied()
        else {
            continue;
        };
        cells.sort_by(|a, b| a.mean_comm_time.total_cmp(&b.mean_comm_time));
        let _ = writeln!(out, "{ranks} ranks:");
        for c in cells {
            if c.backend == base.backend {
                let _ = writeln!(out, "  {} {:.3} us (baseline)", c.backend, c.mean_comm_time / 1e3);
                continue;
            }
            let _ = writeln!(
                out,
                "  {}",
                delta_phrase(c.backend, c.mean_comm_time, base.backend, base.mean_comm_time)
            );
        }
    }
    Ok(out)
}

/// `pscw 8.0% faster than p2p` style phrase.
pub fn delta_phrase(backend: Backend, time: f64, base: Backend, base_time: f64) -> String {
    let pct = if base_time > 0.0 {
        (base_time - time) / base_time * 100.0
    } else {
        0.0
    };
    let (word, pct) = if pct < 0.0 { ("slower", -pct) } else { ("faster", pct) };
    format!("{backend} {pct:.1}% {word} than {base}")
}
