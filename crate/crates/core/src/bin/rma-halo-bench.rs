use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use rma_halo::bench::{compare_backends, run_benchmark, write_csv, BenchConfig, BenchError};

/// Halo swap benchmark over the simulated transport.
///
/// Every option can also come from a config file with one `key=value` per
/// line, keyed like the long flags; flags override the file.
#[derive(Parser, Debug)]
#[command(name = "rma-halo-bench", version)]
struct Cli {
    /// Config file with `key=value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// weak or strong.
    #[arg(long)]
    mode: Option<String>,
    /// Comma-separated subset of p2p,fence,pscw,passive.
    #[arg(long)]
    backend: Option<String>,
    /// Comma-separated rank counts.
    #[arg(long)]
    ranks: Option<String>,
    /// Per-rank grid for weak scaling, e.g. 16x16x256.
    #[arg(long)]
    local_grid: Option<String>,
    /// Global grid for strong scaling, e.g. 2048x2048x128.
    #[arg(long)]
    global_grid: Option<String>,
    #[arg(long)]
    fields: Option<String>,
    #[arg(long)]
    timesteps: Option<String>,
    /// Halo swaps per timestep.
    #[arg(long)]
    rounds: Option<String>,
    /// First seed; further runs use the following seeds.
    #[arg(long)]
    seed: Option<String>,
    /// Runs per cell, averaged.
    #[arg(long)]
    runs: Option<String>,
    /// separate or unified.
    #[arg(long)]
    memory_model: Option<String>,
    /// Let the transport act on fence assertions.
    #[arg(long)]
    honor_assertions: bool,
    /// fifo, random or adversarial.
    #[arg(long)]
    schedule: Option<String>,
    /// adopted or simple.
    #[arg(long)]
    passive_variant: Option<String>,
    /// shifted or naive.
    #[arg(long)]
    epoch_placement: Option<String>,
    /// put, or get (fence and pscw only).
    #[arg(long)]
    driving: Option<String>,
    /// true or false.
    #[arg(long)]
    periodic: Option<String>,
    /// Stencil depth.
    #[arg(long)]
    depth: Option<String>,
    /// none, fixed:T or uniform:LO:HI, e.g. uniform:0:10ms.
    #[arg(long)]
    imbalance: Option<String>,
    /// Write the report as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Print the backend comparison; fails with fewer than two backends.
    #[arg(long)]
    compare: bool,
}

impl Cli {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut push = |k: &'static str, v: &Option<String>| {
            if let Some(v) = v {
                out.push((k, v.clone()));
            }
        };
        push("mode", &self.mode);
        push("backend", &self.backend);
        push("ranks", &self.ranks);
        push("local-grid", &self.local_grid);
        push("global-grid", &self.global_grid);
        push("fields", &self.fields);
        push("timesteps", &self.timesteps);
        push("rounds", &self.rounds);
        push("seed", &self.seed);
        push("runs", &self.runs);
        push("memory-model", &self.memory_model);
        push("schedule", &self.schedule);
        push("passive-variant", &self.passive_variant);
        push("epoch-placement", &self.epoch_placement);
        push("driving", &self.driving);
        push("periodic", &self.periodic);
        push("depth", &self.depth);
        push("imbalance", &self.imbalance);
        if self.honor_assertions {
            out.push(("honor-assertions", "true".into()));
        }
        if let Some(p) = &self.csv {
            out.push(("csv", p.display().to_string()));
        }
        out
    }
}

fn build_config(cli: &Cli) -> Result<BenchConfig, BenchError> {
    let mut config = BenchConfig::default();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        config.apply_file_text(&text)?;
    }
    for (k, v) in cli.overrides() {
        config.set(k, &v)?;
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: &Cli) -> Result<bool, BenchError> {
    let config = build_config(cli)?;
    let report = run_benchmark(&config)?;
    print!("{}", report.table());
    if let Some(path) = &config.csv {
        write_csv(&report, path)?;
    }
    let distinct = {
        let mut b: Vec<_> = report.cells.iter().map(|c| c.backend).collect();
        b.sort();
        b.dedup();
        b.len()
    };
    if cli.compare || distinct >= 2 {
        print!("{}", compare_backends(&report)?);
    }
    if report.failed() {
        println!(
            "FAILED: {} violation(s), {} halo mismatch(es)",
            report.violations(),
            report.mismatches()
        );
    }
    Ok(!report.failed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
