//! Datasets, replay scripts, run summaries and report tables on disk.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use icsr_core::bench::{Catalog, EquationResult, OodSummary, RunStatus, SuiteSummary};
use icsr_core::engine::{BudgetReport, EngineConfig};
use icsr_core::llm::ReplayBackend;
use icsr_core::{Dataset, Expr};
use serde::{Deserialize, Serialize};

use crate::Error;

/// Writes `bytes` to a temporary file next to `path`, then renames it over
/// `path`, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::io(path, e))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::io(path, e))
}

/// Reads `x1[,x2],y` rows; the dimensionality is the column count minus
/// one. A first row that is not numeric is taken as a header.
pub fn read_dataset_csv(path: &Path) -> Result<Dataset, Error> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| Error::io(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::io(path, e))?;
        let parsed: Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if i == 0 => continue,
            Err(e) => return Err(Error::io(path, format!("row {}: {e}", i + 1))),
        }
    }
    let width = rows.first().map_or(0, Vec::len);
    if !(2..=3).contains(&width) {
        return Err(Error::io(path, format!("expected 2 or 3 columns (x1[,x2],y), found {width}")));
    }
    let d = width - 1;
    let mut x = Vec::with_capacity(rows.len() * d);
    let mut y = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        if row.len() != width || row.iter().any(|v| !v.is_finite()) {
            return Err(Error::io(path, format!("data row {}: expected {width} finite values", i + 1)));
        }
        x.extend_from_slice(&row[..d]);
        y.push(row[d]);
    }
    if y.is_empty() {
        return Err(Error::io(path, "no data rows"));
    }
    Ok(Dataset::new(d, x, y))
}

/// Scripted model responses: one list shared by every run, or one list per
/// equation name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ReplayScript {
    Shared(Vec<String>),
    ByEquation(BTreeMap<String, Vec<String>>),
}

impl ReplayScript {
    pub fn load(path: &Path) -> Result<Self, Error> {
        read_json(path).map_err(|e| Error::Config(format!("replay file: {e}")))
    }

    /// A fresh backend for `equation` (or for an ad-hoc run with `None`).
    pub fn backend(&self, equation: Option<&str>) -> Result<ReplayBackend, String> {
        match (self, equation) {
            (ReplayScript::Shared(r), _) => Ok(ReplayBackend::new(r.clone())),
            (ReplayScript::ByEquation(map), Some(name)) => map
                .get(name)
                .map(|r| ReplayBackend::new(r.clone()))
                .ok_or_else(|| format!("replay file has no entry for '{name}'")),
            (ReplayScript::ByEquation(_), None) => {
                Err("replay file is keyed by equation; expected a plain array".into())
            }
        }
    }
}

/// `summary.json` of one run; also what `report` and `ood` read back.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    /// Suite name, for catalog equations.
    pub benchmark: Option<String>,
    pub equation: Option<String>,
    pub seed: u64,
    pub status: RunStatus,
    pub dimensionality: usize,
    pub expression: Option<String>,
    pub skeleton_key: Option<String>,
    pub skeleton: Option<Expr>,
    pub coefficients: Vec<f64>,
    pub complexity: Option<usize>,
    pub error: Option<f64>,
    pub train_r2: Option<f64>,
    /// Trimmed R² on the test split.
    pub test_r2: Option<f64>,
    pub test_failures: usize,
    pub early_stopped: bool,
    pub budget: Option<BudgetReport>,
    pub config: EngineConfig,
}

impl RunSummary {
    pub fn from_result(result: &EquationResult, dimensionality: usize, config: &EngineConfig) -> Self {
        RunSummary {
            benchmark: Some(result.benchmark.clone()),
            equation: Some(result.equation.clone()),
            seed: result.seed,
            status: result.status.clone(),
            dimensionality,
            expression: result.expression.clone(),
            skeleton_key: None,
            skeleton: result.skeleton.clone(),
            coefficients: result.coefficients.clone(),
            complexity: result.complexity,
            error: None,
            train_r2: result.train_r2,
            test_r2: result.r2,
            test_failures: result.failures,
            early_stopped: false,
            budget: None,
            config: config.clone(),
        }
    }

    /// The table row this run contributes; `None` for ad-hoc datasets.
    pub fn to_result(&self) -> Option<EquationResult> {
        Some(EquationResult {
            benchmark: self.benchmark.clone()?,
            equation: self.equation.clone()?,
            seed: self.seed,
            status: self.status.clone(),
            r2: self.test_r2,
            complexity: self.complexity,
            train_r2: self.train_r2,
            expression: self.expression.clone(),
            skeleton: self.skeleton.clone(),
            coefficients: self.coefficients.clone(),
            failures: self.test_failures,
        })
    }
}

/// Every `summary.json` below `roots`, in path order.
pub fn find_summaries(roots: &[PathBuf]) -> Result<Vec<(PathBuf, RunSummary)>, Error> {
    fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), Error> {
        let mut entries: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .map(|e| e.map(|e| e.path()))
            .collect::<Result<_, _>>()
            .map_err(|e| Error::io(dir, e))?;
        entries.sort();
        for p in entries {
            if p.is_dir() {
                walk(&p, out)?;
            } else if p.file_name().is_some_and(|n| n == "summary.json") {
                out.push(p);
            }
        }
        Ok(())
    }
    let mut paths = Vec::new();
    for root in roots {
        if root.is_file() {
            paths.push(root.clone());
        } else {
            walk(root, &mut paths)?;
        }
    }
    paths.into_iter().map(|p| read_json(&p).map(|s| (p, s))).collect()
}

/// Puts results in catalog order, then seed order.
pub fn sort_results(results: &mut [EquationResult], catalog: &Catalog) {
    let rank = |name: &str| catalog.benchmarks.iter().position(|b| b.name == name).unwrap_or(usize::MAX);
    results.sort_by(|a, b| {
        rank(&a.equation).cmp(&rank(&b.equation)).then(a.equation.cmp(&b.equation)).then(a.seed.cmp(&b.seed))
    });
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn to_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// One row per (equation, seed).
pub fn results_csv(results: &[EquationResult]) -> Vec<u8> {
    to_csv(
        &["benchmark", "equation", "seed", "r2", "complexity", "status"],
        results.iter().map(|r| {
            vec![
                r.benchmark.clone(),
                r.equation.clone(),
                r.seed.to_string(),
                opt(r.r2),
                r.complexity.map(|c| c.to_string()).unwrap_or_default(),
                match &r.status {
                    RunStatus::Ok => "ok".into(),
                    RunStatus::Failed(m) => format!("failed: {m}"),
                },
            ]
        }),
    )
}

/// Mean ± SEM per suite, next to the true-expression complexity under both
/// counting conventions and its offset from the published reference.
pub fn table_csv(summaries: &[SuiteSummary]) -> Vec<u8> {
    to_csv(
        &[
            "benchmark",
            "cells",
            "missing",
            "r2_mean",
            "r2_sem",
            "complexity_mean",
            "complexity_sem",
            "gt_complexity_all_nodes",
            "gt_complexity_operators",
            "reference_complexity",
            "delta_all_nodes",
            "delta_operators",
        ],
        summaries.iter().map(|s| {
            let delta = |v: f64| s.reference_complexity.map(|r| v - r);
            vec![
                s.benchmark.clone(),
                s.cells.to_string(),
                s.missing.to_string(),
                num(s.r2_mean),
                num(s.r2_sem),
                num(s.complexity_mean),
                num(s.complexity_sem),
                num(s.gt_complexity_all_nodes),
                num(s.gt_complexity_operators),
                opt(s.reference_complexity),
                opt(delta(s.gt_complexity_all_nodes)),
                opt(delta(s.gt_complexity_operators)),
            ]
        }),
    )
}

pub fn ood_csv(summaries: &[OodSummary]) -> Vec<u8> {
    to_csv(
        &["benchmark", "extension", "mean_r2_clamped", "neg_fraction", "count"],
        summaries.iter().map(|s| {
            vec![
                s.benchmark.clone(),
                num(s.extension),
                num(s.mean_r2_clamped),
                num(s.neg_fraction),
                s.count.to_string(),
            ]
        }),
    )
}

/// Plot rows: inputs, then true and predicted outputs (blank where
/// unknown or undefined).
pub fn plot_csv(dimensionality: usize, points: &[f64], truth: &[Option<f64>], predicted: &[Option<f64>]) -> Vec<u8> {
    let header: &[&str] =
        if dimensionality == 1 { &["x", "y_true", "y_pred"] } else { &["x1", "x2", "y_true", "y_pred"] };
    to_csv(
        header,
        points.chunks(dimensionality).zip(truth).zip(predicted).map(|((p, t), y)| {
            let mut row: Vec<String> = p.iter().copied().map(num).collect();
            row.push(opt(*t));
            row.push(opt(*y));
            row
        }),
    )
}
