//! Command-line interface.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use icsr_core::bench::{
    aggregate, aggregate_ood, builtin, evaluate_ood, score_record, BenchmarkSpec, Catalog, EvalReport, OodPoint,
    DEFAULT_EXTENSIONS,
};
use icsr_core::data::Split;
use icsr_core::engine::{run_observed, EngineConfig, EngineError, Mode};
use icsr_core::expr::{evaluate_all, variable_names, Expr};
use icsr_core::llm::ScheduleMode;
use icsr_core::Dataset;

use crate::config::{BackendKind, BackendSection, RunConfigFile};
use crate::io::{
    find_summaries, ood_csv, plot_csv, read_dataset_csv, results_csv, sort_results, table_csv, write_atomic,
    write_json, ReplayScript, RunSummary,
};
use crate::live::LiveBackend;
use crate::runlog::JsonlLog;
use crate::suite::{run_grid, summarize, BackendFactory, DynBackend};
use crate::Error;

/// Points per axis of the dense plot grid.
const PLOT_POINTS_1D: usize = 500;
const PLOT_POINTS_2D: usize = 50;

#[derive(Debug, Parser)]
#[command(name = "icsr", version, about = "Symbolic regression with a chat model proposing functional forms")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Search one catalog equation or a CSV dataset.
    Run(RunArgs),
    /// Run equations across seeds and write mean ± SEM tables.
    Bench(BenchArgs),
    /// Score stored answers on widened input ranges.
    Ood(OodArgs),
    /// Rebuild tables from run directories.
    Report(ReportArgs),
    /// Write a replay script answering with each equation's true form.
    Oracle(OracleArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Full,
    SeedOnly,
    Random,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Full => Mode::Full,
            ModeArg::SeedOnly => Mode::SeedOnly,
            ModeArg::Random => Mode::Random,
        }
    }
}

/// Options shared by the commands that run the search. Flags override the
/// config file.
#[derive(Debug, Default, Args)]
pub struct EngineArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub backend: Option<BackendKind>,
    /// Base URL of an OpenAI-compatible server.
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub replay_file: Option<PathBuf>,
    /// Weight of the complexity bonus.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Refinement loop iterations.
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Seed-function calls.
    #[arg(long)]
    pub ns: Option<usize>,
    /// Previous attempts shown in the loop prompt.
    #[arg(long)]
    pub topk: Option<usize>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Lower the temperature linearly over the loop.
    #[arg(long)]
    pub temperature_decay: bool,
    /// Also send top_k and num_beams to the server.
    #[arg(long)]
    pub extended_params: bool,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub engine: EngineArgs,
    /// Catalog equation, e.g. nguyen8.
    #[arg(long, alias = "suite", conflicts_with = "data")]
    pub benchmark: Option<String>,
    /// CSV with columns x1[,x2],y.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub engine: EngineArgs,
    /// Suites or equations (nguyen, constant, keijzer, r, all, nguyen8, ...).
    #[arg(long = "suite", alias = "benchmark", value_delimiter = ',', num_args = 1..)]
    pub suites: Vec<String>,
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub seeds: Vec<u64>,
    /// Concurrent runs; defaults to the number of CPUs.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct OodArgs {
    /// Run directories (or summary.json files) to score.
    #[arg(long = "runs", num_args = 1..)]
    pub runs: Vec<PathBuf>,
    /// Score the true expressions of --suite instead of stored answers.
    #[arg(long)]
    pub ground_truth: bool,
    #[arg(long = "suite", value_delimiter = ',', num_args = 1..)]
    pub suites: Vec<String>,
    /// Range extensions, as fractions of the test range on each side.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = DEFAULT_EXTENSIONS.to_vec())]
    pub extensions: Vec<f64>,
    /// Fraction of worst predictions dropped before R².
    #[arg(long, default_value_t = 0.0)]
    pub trim: f64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directories searched recursively for summary.json.
    #[arg(required = true)]
    pub dirs: Vec<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long = "suite", value_delimiter = ',', num_args = 1.., default_value = "all")]
    pub suites: Vec<String>,
    #[arg(long, default_value = "oracle.json")]
    pub out: PathBuf,
}

/// Config file plus flag overrides.
pub struct Resolved {
    pub file: RunConfigFile,
    pub engine: EngineConfig,
    pub out: PathBuf,
}

impl EngineArgs {
    pub fn resolve(&self) -> Result<Resolved, Error> {
        let mut file = match &self.config {
            Some(p) => RunConfigFile::load(p)?,
            None => RunConfigFile::default(),
        };
        let b = &mut file.backend;
        if let Some(k) = self.backend {
            b.kind = k;
        }
        if let Some(e) = &self.endpoint {
            b.live.endpoint = e.clone();
        }
        if let Some(m) = &self.model {
            b.model = m.clone();
        }
        if let Some(r) = &self.replay_file {
            b.replay_file = Some(r.clone());
        }
        b.live.extended_params |= self.extended_params;
        let e = &mut file.engine;
        if let Some(v) = self.iterations {
            e.max_iterations = v;
        }
        if let Some(v) = self.ns {
            e.seed_calls = v;
        }
        if let Some(v) = self.topk {
            e.top_k = v;
        }
        if let Some(m) = self.mode {
            e.mode = m.into();
        }
        if self.temperature_decay {
            e.schedule.mode = ScheduleMode::LinearDecay;
        }
        if let Some(l) = self.lambda {
            file.score.lambda = l;
        }
        let engine = file.engine_config();
        engine.validate().map_err(|e| Error::Config(e.to_string()))?;
        let out = self.out.clone().or_else(|| file.output.clone()).unwrap_or_else(|| PathBuf::from("out"));
        Ok(Resolved { file, engine, out })
    }
}

/// Builds one backend per run from the backend section. A live backend
/// without credentials fails here, before any work starts.
pub fn backend_factory(section: &BackendSection) -> Result<Box<BackendFactory<'static>>, Error> {
    match section.kind {
        BackendKind::Replay => {
            let path = section
                .replay_file
                .as_ref()
                .ok_or_else(|| Error::Config("replay backend needs --replay-file".into()))?;
            let script = ReplayScript::load(path)?;
            Ok(Box::new(move |spec: &BenchmarkSpec, _seed: u64| {
                script.backend(Some(&spec.name)).map(|b| Box::new(b) as DynBackend)
            }))
        }
        BackendKind::Live => {
            let options = section.live.clone();
            LiveBackend::from_env(options.clone()).map_err(|e| Error::Config(e.to_string()))?;
            Ok(Box::new(move |_: &BenchmarkSpec, _: u64| {
                LiveBackend::from_env(options.clone()).map(|b| Box::new(b) as DynBackend).map_err(|e| e.to_string())
            }))
        }
    }
}

fn select<'a>(catalog: &'a Catalog, names: &[String]) -> Result<Vec<&'a BenchmarkSpec>, Error> {
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    catalog.select(&names).map_err(|e| Error::Config(e.to_string()))
}

fn engine_error(e: EngineError) -> Error {
    match e {
        EngineError::NoValidSeed { .. } => Error::NoValidSeed(e.to_string()),
        EngineError::Observer(m) => Error::Io(format!("run log: {m}")),
        e => Error::Config(e.to_string()),
    }
}

pub fn cmd_run(args: &RunArgs) -> Result<RunSummary, Error> {
    let Resolved { file, mut engine, out } = args.engine.resolve()?;
    let catalog = builtin();
    let benchmark = args.benchmark.clone().or_else(|| match (&args.data, file.benchmarks.as_slice()) {
        (None, [one]) => Some(one.clone()),
        _ => None,
    });
    let spec = match &benchmark {
        Some(name) => Some(catalog.get(name).ok_or_else(|| Error::Config(format!("unknown equation '{name}'")))?),
        None => None,
    };
    let (train, test) = match (spec, &args.data) {
        (Some(spec), _) => {
            let sample =
                |split| spec.sample(split, icsr_core::bench::DATA_SEED).map_err(|e| Error::Config(e.to_string()));
            (sample(Split::Train)?, Some(sample(Split::Test)?))
        }
        (None, Some(path)) => (read_dataset_csv(path)?, None),
        (None, None) => return Err(Error::Config("run needs --benchmark or --data".into())),
    };
    engine.seed = args.seed.unwrap_or_else(|| file.seeds()[0]);

    let backend: DynBackend = match file.backend.kind {
        BackendKind::Replay => {
            let path = file
                .backend
                .replay_file
                .as_ref()
                .ok_or_else(|| Error::Config("replay backend needs --replay-file".into()))?;
            Box::new(ReplayScript::load(path)?.backend(spec.map(|s| s.name.as_str())).map_err(Error::Config)?)
        }
        BackendKind::Live => {
            Box::new(LiveBackend::from_env(file.backend.live.clone()).map_err(|e| Error::Config(e.to_string()))?)
        }
    };

    let mut log = JsonlLog::create(&out.join("run_log.jsonl"))?;
    let outcome = run_observed(&train, &engine, backend, &mut log);
    log.finish()?;
    let record = match outcome {
        Ok(r) => r,
        Err(e) => {
            let err = engine_error(e);
            let failed = RunSummary {
                benchmark: spec.map(|s| s.suite.clone()),
                equation: spec.map(|s| s.name.clone()),
                seed: engine.seed,
                status: icsr_core::bench::RunStatus::Failed(err.to_string()),
                dimensionality: train.dimensionality,
                expression: None,
                skeleton_key: None,
                skeleton: None,
                coefficients: Vec::new(),
                complexity: None,
                error: None,
                train_r2: None,
                test_r2: None,
                test_failures: 0,
                early_stopped: false,
                budget: None,
                config: engine.clone(),
            };
            write_json(&out.join("summary.json"), &failed)?;
            return Err(err);
        }
    };

    let summary = match (spec, &test) {
        (Some(spec), Some(test)) => {
            let result = score_record(spec, engine.seed, &record, test, engine.score.trim_fraction);
            summarize(spec, &result, Some(&record), &engine)
        }
        _ => RunSummary {
            benchmark: None,
            equation: None,
            seed: engine.seed,
            status: icsr_core::bench::RunStatus::Ok,
            dimensionality: train.dimensionality,
            expression: Some(record.best_expression()),
            skeleton_key: Some(record.best.key().to_string()),
            skeleton: Some(record.best.skeleton.expr.clone()),
            coefficients: record.best.fit.coefficients.clone(),
            complexity: Some(record.best.scores.complexity),
            error: Some(record.best.error()),
            train_r2: Some(record.best.scores.r2_train),
            test_r2: None,
            test_failures: 0,
            early_stopped: record.early_stopped,
            budget: Some(record.budget_report()),
            config: engine.clone(),
        },
    };
    write_json(&out.join("summary.json"), &summary)?;
    write_atomic(
        &out.join("plot.csv"),
        &plot(spec, &train, &record.best.skeleton.expr, &record.best.fit.coefficients),
    )?;
    Ok(summary)
}

/// Dense grid over the test range (or the data's bounding box) with true
/// and fitted values.
fn plot(spec: Option<&BenchmarkSpec>, train: &Dataset, expr: &Expr, coefficients: &[f64]) -> Vec<u8> {
    let d = train.dimensionality;
    let (min, max) = match spec {
        Some(s) => (s.test.min.clone(), s.test.max.clone()),
        None => {
            let axis = |j: usize| train.points().map(move |p| p[j]);
            let min = (0..d).map(|j| axis(j).fold(f64::INFINITY, f64::min)).collect();
            let max = (0..d).map(|j| axis(j).fold(f64::NEG_INFINITY, f64::max)).collect();
            (min, max)
        }
    };
    let n = if d == 1 { PLOT_POINTS_1D } else { PLOT_POINTS_2D * PLOT_POINTS_2D };
    let points = icsr_core::bench::grid(&min, &max, n);
    let predicted = evaluate_all(expr, coefficients, &points, d);
    let truth = match spec {
        Some(s) => {
            let t = s.truth_expr();
            points
                .chunks(d)
                .map(|p| if s.in_domain(p) { icsr_core::expr::evaluate(&t, &[], p) } else { None })
                .collect()
        }
        None => vec![None; predicted.len()],
    };
    plot_csv(d, &points, &truth, &predicted)
}

fn write_report(out: &Path, report: &EvalReport) -> Result<(), Error> {
    write_atomic(&out.join("results.csv"), &results_csv(&report.results))?;
    write_atomic(&out.join("table.csv"), &table_csv(&report.summaries))?;
    write_json(&out.join("report.json"), report)
}

pub fn cmd_bench(args: &BenchArgs) -> Result<EvalReport, Error> {
    let Resolved { file, engine, out } = args.engine.resolve()?;
    let catalog = builtin();
    let names = if args.suites.is_empty() { file.benchmarks.clone() } else { args.suites.clone() };
    if names.is_empty() {
        return Err(Error::Config("bench needs --suite".into()));
    }
    let specs = select(&catalog, &names)?;
    let seeds = if args.seeds.is_empty() { file.seeds() } else { args.seeds.clone() };
    let factory = backend_factory(&file.backend)?;
    let jobs = args.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let report = run_grid(&specs, &engine, &seeds, &catalog, jobs, Some(&out.join("runs")), &*factory)?;
    write_report(&out, &report)?;
    Ok(report)
}

pub fn cmd_report(args: &ReportArgs) -> Result<EvalReport, Error> {
    let catalog = builtin();
    let mut results: Vec<_> = find_summaries(&args.dirs)?.iter().filter_map(|(_, s)| s.to_result()).collect();
    if results.is_empty() {
        return Err(Error::Config("no catalog runs found".into()));
    }
    sort_results(&mut results, &catalog);
    let summaries = aggregate(&results, &catalog);
    let report = EvalReport { results, summaries };
    write_report(&args.out, &report)?;
    Ok(report)
}

/// Extrapolation scores; returns the per-equation points and writes the
/// per-suite curve to `ood.csv`.
pub fn cmd_ood(args: &OodArgs) -> Result<Vec<(String, String, OodPoint)>, Error> {
    let catalog = builtin();
    let mut answers: Vec<(&BenchmarkSpec, String, Expr, Vec<f64>)> = Vec::new();
    if args.ground_truth {
        let names = if args.suites.is_empty() { vec!["all".to_string()] } else { args.suites.clone() };
        for spec in select(&catalog, &names)? {
            answers.push((spec, "truth".into(), spec.truth_expr(), Vec::new()));
        }
    } else {
        if args.runs.is_empty() {
            return Err(Error::Config("ood needs --runs or --ground-truth".into()));
        }
        for (path, s) in find_summaries(&args.runs)? {
            let (Some(name), Some(skeleton)) = (&s.equation, &s.skeleton) else { continue };
            let spec = catalog
                .get(name)
                .ok_or_else(|| Error::Config(format!("{}: unknown equation '{name}'", path.display())))?;
            answers.push((spec, format!("{}", s.seed), skeleton.clone(), s.coefficients.clone()));
        }
    }
    let mut points = Vec::new();
    let mut rows = Vec::new();
    for (spec, tag, expr, coefs) in &answers {
        for (e, p) in args.extensions.iter().zip(evaluate_ood(expr, coefs, spec, &args.extensions, args.trim)) {
            match p {
                Some(p) => {
                    points.push((spec.suite.clone(), p));
                    rows.push((spec.name.clone(), tag.clone(), p));
                }
                None => eprintln!("{}: extension {e} leaves no valid region; skipped", spec.name),
            }
        }
    }
    write_atomic(&args.out.join("ood.csv"), &ood_csv(&aggregate_ood(&points)))?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["equation", "run", "extension", "r2", "clamped", "negative"]).map_err(io)?;
    for (name, tag, p) in &rows {
        let r2 = p.r2.map(|v| v.to_string()).unwrap_or_default();
        w.write_record([name, tag, &p.extension.to_string(), &r2, &p.clamped.to_string(), &p.negative.to_string()])
            .map_err(io)?;
    }
    write_atomic(&args.out.join("ood_points.csv"), &w.into_inner().map_err(|e| Error::Io(e.to_string()))?)?;
    Ok(rows)
}

/// Replay script whose single response per equation is its true form with
/// `c` placeholders.
pub fn oracle_script(specs: &[&BenchmarkSpec]) -> ReplayScript {
    ReplayScript::ByEquation(
        specs
            .iter()
            .map(|s| (s.name.clone(), vec![format!("f1({}) = {}", variable_names(s.dim).join(", "), s.oracle)]))
            .collect(),
    )
}

pub fn cmd_oracle(args: &OracleArgs) -> Result<(), Error> {
    let catalog = builtin();
    let specs = select(&catalog, &args.suites)?;
    write_json(&args.out, &oracle_script(&specs))
}

fn fmt(v: Option<f64>) -> String {
    v.map_or("-".into(), |v| format!("{v:.6}"))
}

pub fn execute(cli: &Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Run(a) => {
            let s = cmd_run(a)?;
            println!("best: {}", s.expression.as_deref().unwrap_or("-"));
            println!(
                "train R2: {}  test R2: {}  complexity: {}",
                fmt(s.train_r2),
                fmt(s.test_r2),
                s.complexity.unwrap_or(0)
            );
        }
        Command::Bench(a) => print_table(&cmd_bench(a)?),
        Command::Report(a) => print_table(&cmd_report(a)?),
        Command::Ood(a) => {
            let rows = cmd_ood(a)?;
            println!("{} scores written to {}", rows.len(), a.out.join("ood.csv").display());
        }
        Command::Oracle(a) => {
            cmd_oracle(a)?;
            println!("wrote {}", a.out.display());
        }
    }
    Ok(())
}

fn print_table(report: &EvalReport) {
    println!(
        "{:<10} {:>5} {:>7} {:>20} {:>16} {:>8} {:>8} {:>6}",
        "suite", "cells", "missing", "R2", "complexity", "gt_all", "gt_ops", "ref"
    );
    for s in &report.summaries {
        println!(
            "{:<10} {:>5} {:>7} {:>20} {:>16} {:>8.3} {:>8.3} {:>6}",
            s.benchmark,
            s.cells,
            s.missing,
            format!("{:.4} ± {:.4}", s.r2_mean, s.r2_sem),
            format!("{:.2} ± {:.2}", s.complexity_mean, s.complexity_sem),
            s.gt_complexity_all_nodes,
            s.gt_complexity_operators,
            s.reference_complexity.map_or("-".into(), |r| r.to_string()),
        );
    }
}

/// Parses `args` and runs the command; returns the process exit status.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
