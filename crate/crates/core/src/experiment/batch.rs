//! Multi-seed, multi-dimension batch execution.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{derive_constants, run, AlgorithmConstants, RunConfig, RunRecord};
use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::experiment::config::{ConfigFile, ExperimentConfig};
use crate::experiment::report::{scaling_report, ScalingReport};
use crate::experiment::trace::emit_trace;

pub const SUMMARY_FILE: &str = "summary.json";

pub fn trace_file_name(d: usize, seed: u64) -> String {
    format!("trace_d{d}_seed{seed}.csv")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub d: usize,
    pub seed: u64,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_copies: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_regret: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_infidelity: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionConstants {
    pub d: usize,
    pub constants: AlgorithmConstants,
}

#[derive(Clone, Debug, Serialize)]
pub struct BatchSummary {
    /// Config echo without `out` and `workers`, which never affect content.
    pub config: ConfigFile,
    pub constants: Vec<DimensionConstants>,
    pub cells: Vec<CellSummary>,
    pub reports: Vec<ScalingReport>,
}

#[derive(Debug)]
pub struct CellOutcome {
    pub d: usize,
    pub seed: u64,
    pub result: Result<RunRecord>,
}

#[derive(Debug)]
pub struct BatchOutcome {
    pub cells: Vec<CellOutcome>,
    pub summary: BatchSummary,
}

impl BatchOutcome {
    pub fn failed(&self) -> usize {
        self.cells.iter().filter(|c| c.result.is_err()).count()
    }
}

fn run_cell(cfg: &ExperimentConfig, d: usize, seed: u64, state: Option<&crate::geometry::PureState>) -> Result<RunRecord> {
    let mut env = Environment::new(d, seed, state.cloned())?;
    let evaluator = env.evaluator();
    let rc = RunConfig {
        d,
        t_total: cfg.horizon,
        preset: cfg.preset,
        overrides: cfg.overrides.clone(),
        checkpoint_every: cfg.checkpoint_every,
        seed,
    };
    let record = run(&mut env, Some(&evaluator), &rc)?;
    if cfg.emit_csv {
        emit_trace(&record.trace, &cfg.out.join(trace_file_name(d, seed)))?;
    }
    Ok(record)
}

/// Runs every `(dimension, seed)` cell on a pool of `cfg.workers` threads.
///
/// Cell failures are recorded and do not abort the batch. Output content
/// depends only on the configuration, never on scheduling.
pub fn run_batch(cfg: &ExperimentConfig) -> Result<BatchOutcome> {
    if cfg.emit_csv || cfg.emit_json {
        std::fs::create_dir_all(&cfg.out)?;
    }
    let state = cfg.load_state()?;
    let seeds = cfg.seeds.list();
    let jobs: Vec<(usize, u64)> =
        cfg.dimensions.iter().flat_map(|&d| seeds.iter().map(move |&s| (d, s))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(format!("`workers`: {e}")))?;
    let cells: Vec<CellOutcome> = pool.install(|| {
        jobs.par_iter()
            .map(|&(d, seed)| {
                let result = run_cell(cfg, d, seed, state.as_ref());
                if let Err(e) = &result {
                    log::error!("cell d={d} seed={seed} failed: {e}");
                }
                CellOutcome { d, seed, result }
            })
            .collect()
    });
    let summary = summarize(cfg, &cells)?;
    if cfg.emit_json {
        write_summary(&summary, &cfg.out.join(SUMMARY_FILE))?;
    }
    Ok(BatchOutcome { cells, summary })
}

pub fn summarize(cfg: &ExperimentConfig, cells: &[CellOutcome]) -> Result<BatchSummary> {
    let constants = cfg
        .dimensions
        .iter()
        .map(|&d| derive_constants(d, cfg.horizon, cfg.preset, &cfg.overrides).map(|constants| DimensionConstants { d, constants }))
        .collect::<Result<Vec<_>>>()?;
    let cell_summaries = cells
        .iter()
        .map(|c| match &c.result {
            Ok(r) => {
                let last = r.trace.last();
                CellSummary {
                    d: c.d,
                    seed: c.seed,
                    ok: true,
                    error: None,
                    trace_file: cfg.emit_csv.then(|| trace_file_name(c.d, c.seed)),
                    total_copies: last.map(|l| l.t),
                    final_regret: last.map(|l| l.cumulative_regret),
                    final_infidelity: last.and_then(|l| l.online_infidelity),
                }
            }
            Err(e) => CellSummary {
                d: c.d,
                seed: c.seed,
                ok: false,
                error: Some(e.to_string()),
                trace_file: None,
                total_copies: None,
                final_regret: None,
                final_infidelity: None,
            },
        })
        .collect();
    let reports = cfg
        .dimensions
        .iter()
        .filter_map(|&d| {
            let runs: Vec<(u64, &[crate::engine::Checkpoint])> = cells
                .iter()
                .filter(|c| c.d == d)
                .filter_map(|c| c.result.as_ref().ok().map(|r| (c.seed, r.trace.as_slice())))
                .collect();
            scaling_report(d, cfg.horizon, &runs)
        })
        .collect();
    let config = ConfigFile { out: None, workers: None, ..ConfigFile::from(cfg) };
    Ok(BatchSummary { config, constants, cells: cell_summaries, reports })
}

pub fn write_summary(summary: &BatchSummary, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(summary)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Paths of all files a batch writes, in cell order.
pub fn output_files(cfg: &ExperimentConfig) -> Vec<PathBuf> {
    let mut out = Vec::new();
    if cfg.emit_csv {
        for &d in &cfg.dimensions {
            for s in cfg.seeds.list() {
                out.push(cfg.out.join(trace_file_name(d, s)));
            }
        }
    }
    if cfg.emit_json {
        out.push(cfg.out.join(SUMMARY_FILE));
    }
    out
}
