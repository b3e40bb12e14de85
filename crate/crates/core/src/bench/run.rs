use super::{BenchCell, BenchConfig, BenchError, BenchReport, Mode};
use crate::grid::{simulate, RunOutcome, TimestepConfig};
use crate::halo::{plan_decomposition, plan_weak, Backend, DecompositionPlan, HaloOptions};
use crate::sim::TransportConfig;

pub fn plan_for(config: &BenchConfig, ranks: usize) -> Result<DecompositionPlan, BenchError> {
    let plan = match config.mode {
        Mode::Weak => plan_weak(config.local_grid, ranks, config.periodic, config.depth),
        Mode::Strong => plan_decomposition(config.global_grid, ranks, config.periodic, config.depth),
    };
    Ok(plan?)
}

pub fn halo_options(config: &BenchConfig, backend: Backend) -> HaloOptions {
    HaloOptions::new(backend)
        .with_placement(config.epoch_placement)
        .with_driving(config.driving)
        .with_passive_variant(config.passive_variant)
}

pub fn transport_for(config: &BenchConfig, ranks: usize, run: usize) -> TransportConfig {
    TransportConfig::new(ranks, config.seed.wrapping_add(run as u64))
        .with_schedule(config.schedule)
        .with_memory_model(config.memory_model)
        .with_honor_assertions(config.honor_assertions)
}

pub fn timestep_config(config: &BenchConfig, backend: Backend) -> TimestepConfig {
    let mut cfg = TimestepConfig::new(halo_options(config, backend), config.fields, config.timesteps);
    cfg.rounds_per_step = config.rounds_per_step;
    cfg.compute_delay = config.imbalance;
    cfg
}

/// Runs one world per (rank count, backend, run) and aggregates the cells.
///
/// A halo mismatch in a run without recorded violations is an engine or
/// library fault and aborts the report. Mismatches that come with
/// violations are the expected effect of a broken synchronization pattern;
/// the cell is kept and marked failed.
pub fn run_benchmark(config: &BenchConfig) -> Result<BenchReport, BenchError> {
    config.validate()?;
    let mut report = BenchReport::default();
    for &ranks in &config.ranks {
        let plan = plan_for(config, ranks)?;
        for &backend in &config.backends {
            let cfg = timestep_config(config, backend);
            let mut outcomes = Vec::with_capacity(config.runs);
            for run in 0..config.runs {
                let out = simulate(transport_for(config, ranks, run), &plan, &cfg)?;
                if out.violations.is_empty() {
                    out.check()?;
                }
                outcomes.push(out);
            }
            report.cells.push(aggregate(config, backend, ranks, &outcomes));
        }
    }
    Ok(report)
}

fn aggregate(config: &BenchConfig, backend: Backend, ranks: usize, outcomes: &[RunOutcome]) -> BenchCell {
    let n = outcomes.len().max(1) as f64;
    let step_times: Vec<f64> = outcomes.iter().flat_map(|o| o.step_comm_times()).collect();
    BenchCell {
        mode: config.mode,
        backend,
        ranks,
        fields: config.fields,
        mean_comm_time: outcomes.iter().map(RunOutcome::mean_comm_time).sum::<f64>() / n,
        min_comm_time: step_times.iter().copied().reduce(f64::min).unwrap_or(0.0),
        max_comm_time: step_times.iter().copied().reduce(f64::max).unwrap_or(0.0),
        init_block_time: outcomes.iter().map(RunOutcome::mean_initiate_time).sum::<f64>() / n,
        sync_msgs: outcomes.iter().map(|o| o.transport.sync_messages).sum(),
        bytes: outcomes.iter().map(|o| o.transport.bytes).sum(),
        violations: outcomes.iter().map(|o| o.violations.len()).sum(),
        mismatches: outcomes.iter().map(RunOutcome::mismatches).sum(),
        runs: outcomes.len(),
        timesteps: config.timesteps,
    }
}
