//! Benchmark grids run in parallel.

use std::path::Path;

use icsr_core::bench::{aggregate, run_equation_observed, BenchmarkSpec, Catalog, EquationResult, EvalReport};
use icsr_core::engine::{EngineConfig, NoObserver, RunRecord};
use icsr_core::llm::ChatBackend;
use rayon::prelude::*;

use crate::io::{sort_results, write_json, RunSummary};
use crate::runlog::JsonlLog;
use crate::Error;

pub type DynBackend = Box<dyn ChatBackend + Send>;

/// Makes the backend for one (equation, seed) cell.
pub type BackendFactory<'a> = dyn Fn(&BenchmarkSpec, u64) -> Result<DynBackend, String> + Sync + 'a;

/// Summary of a finished catalog run, with the search details filled in.
pub fn summarize(
    spec: &BenchmarkSpec,
    result: &EquationResult,
    record: Option<&RunRecord>,
    config: &EngineConfig,
) -> RunSummary {
    let mut s = RunSummary::from_result(result, spec.dim, config);
    s.config.seed = result.seed;
    if let Some(r) = record {
        s.skeleton_key = Some(r.best.key().to_string());
        s.error = Some(r.best.error());
        s.early_stopped = r.early_stopped;
        s.budget = Some(r.budget_report());
    }
    s
}

/// Directory holding one cell's log and summary.
pub fn cell_dir(runs: &Path, equation: &str, seed: u64) -> std::path::PathBuf {
    runs.join(format!("{equation}-s{seed}"))
}

fn run_cell(
    spec: &BenchmarkSpec,
    seed: u64,
    config: &EngineConfig,
    runs: Option<&Path>,
    factory: &BackendFactory,
) -> Result<EquationResult, Error> {
    let backend = match factory(spec, seed) {
        Ok(b) => b,
        Err(m) => return Ok(EquationResult::failed(spec, seed, m)),
    };
    let Some(runs) = runs else {
        return Ok(run_equation_observed(spec, seed, config, backend, NoObserver).0);
    };
    let dir = cell_dir(runs, &spec.name, seed);
    let mut log = JsonlLog::create(&dir.join("run_log.jsonl"))?;
    let (result, record) = run_equation_observed(spec, seed, config, backend, &mut log);
    log.finish()?;
    write_json(&dir.join("summary.json"), &summarize(spec, &result, record.as_ref(), config))?;
    Ok(result)
}

/// Runs every (equation, seed) cell on up to `jobs` threads. Results come
/// back in catalog then seed order whatever the scheduling. With `runs`
/// set, each cell streams its log and summary into its own subdirectory.
pub fn run_grid(
    specs: &[&BenchmarkSpec],
    config: &EngineConfig,
    seeds: &[u64],
    catalog: &Catalog,
    jobs: usize,
    runs: Option<&Path>,
    factory: &BackendFactory,
) -> Result<EvalReport, Error> {
    config.validate().map_err(|e| Error::Config(e.to_string()))?;
    let cells: Vec<(&BenchmarkSpec, u64)> =
        specs.iter().flat_map(|s| seeds.iter().map(move |&seed| (*s, seed))).collect();
    let pool =
        rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().map_err(|e| Error::Config(e.to_string()))?;
    let results: Result<Vec<EquationResult>, Error> =
        pool.install(|| cells.par_iter().map(|&(spec, seed)| run_cell(spec, seed, config, runs, factory)).collect());
    let mut results = results?;
    sort_results(&mut results, catalog);
    let summaries = aggregate(&results, catalog);
    Ok(EvalReport { results, summaries })
}
