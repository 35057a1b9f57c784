//! Replications fanned out over a fixed-size thread pool.

use ocr_core::simulation::{aggregate, run_replication, ReplicationRecord, ScenarioConfig, StudyReport};
use rayon::prelude::*;

use crate::error::{CliError, Result};

#[derive(Debug, Clone)]
pub struct ScenarioResult {
    pub report: StudyReport,
    pub records: Vec<ReplicationRecord>,
}

fn scenario_error(cfg: &ScenarioConfig, source: ocr_core::OcrError) -> CliError {
    CliError::Scenario { n: cfg.n, p: cfg.p, sigma: cfg.sigma, source }
}

/// Runs every `(scenario, replication)` pair on `workers` threads. Each
/// replication owns its random stream and results are collected in job
/// order, so the output does not depend on `workers`.
pub fn run_grid(grid: &[ScenarioConfig], workers: usize) -> Result<Vec<ScenarioResult>> {
    if workers == 0 {
        return Err(CliError::Config("--workers must be at least 1".into()));
    }
    for cfg in grid {
        cfg.validate().map_err(|e| scenario_error(cfg, e))?;
    }
    let jobs: Vec<(usize, usize)> =
        grid.iter().enumerate().flat_map(|(s, cfg)| (0..cfg.replications).map(move |r| (s, r))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let results: Vec<_> = pool.install(|| jobs.par_iter().map(|&(s, r)| run_replication(&grid[s], r)).collect());

    let mut per_scenario: Vec<Vec<ReplicationRecord>> =
        grid.iter().map(|c| Vec::with_capacity(c.replications)).collect();
    for (&(s, _), res) in jobs.iter().zip(results) {
        per_scenario[s].push(res.map_err(|e| scenario_error(&grid[s], e))?);
    }
    grid.iter()
        .zip(per_scenario)
        .map(|(cfg, records)| {
            let report = aggregate(cfg, records.clone()).map_err(|e| scenario_error(cfg, e))?;
            Ok(ScenarioResult { report, records })
        })
        .collect()
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}
