//! Benchmark equations, data sampling, and in-domain / extrapolation metrics.
//!
//! The catalog ships as `assets/benchmarks.json`. Each row carries the true
//! expression, an oracle form with `c` placeholders (what a perfect proposer
//! would emit), train/test samplers and the region where the true function
//! is defined.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{Dataset, Provenance, Split};
use crate::engine::{run_observed, EngineConfig, EngineError, NoObserver, RunObserver, RunRecord};
use crate::expr::{complexity_with, evaluate, evaluate_all, parse, ComplexityConvention, Expr, ParseError};
use crate::llm::ChatBackend;
use crate::score::{r_squared, trim_count};

const CATALOG: &str = include_str!("../assets/benchmarks.json");

/// Seed of the train/test draws; the same data serves every method seed.
pub const DATA_SEED: u64 = 0;
pub const DEFAULT_EXTENSIONS: [f64; 4] = [0.25, 0.5, 0.75, 1.0];
const MAX_RESAMPLES: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum BenchError {
    #[error("unknown benchmark or suite '{0}'")]
    Unknown(String),
    #[error("{name}: cannot parse '{text}': {source}")]
    Parse { name: String, text: String, source: ParseError },
    #[error("{name}: true function undefined at {point:?}")]
    Undefined { name: String, point: Vec<f64> },
    #[error("{name}: {message}")]
    Invalid { name: String, message: String },
    #[error("catalog: {0}")]
    Catalog(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    /// Independent uniform draws.
    Uniform,
    /// Equispaced, endpoints included; two inputs form a near-square grid.
    Grid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sampler {
    pub kind: SamplerKind,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub count: usize,
}

/// `x[var] > lower` (open) or `x[var] >= lower`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainBound {
    pub var: usize,
    pub lower: f64,
    pub open: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkSpec {
    pub name: String,
    pub suite: String,
    pub truth: String,
    pub oracle: String,
    pub dim: usize,
    pub train: Sampler,
    pub test: Sampler,
    #[serde(default)]
    pub domain: Vec<DomainBound>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteInfo {
    pub name: String,
    /// Published average complexity of the suite's true expressions.
    pub reference_complexity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Catalog {
    pub version: u32,
    pub suites: Vec<SuiteInfo>,
    pub benchmarks: Vec<BenchmarkSpec>,
}

impl Catalog {
    pub fn from_json(text: &str) -> Result<Self, BenchError> {
        let catalog: Catalog = serde_json::from_str(text).map_err(|e| BenchError::Catalog(e.to_string()))?;
        for spec in &catalog.benchmarks {
            spec.validate()?;
        }
        Ok(catalog)
    }

    pub fn get(&self, name: &str) -> Option<&BenchmarkSpec> {
        self.benchmarks.iter().find(|b| b.name.eq_ignore_ascii_case(name))
    }

    pub fn suite(&self, suite: &str) -> Vec<&BenchmarkSpec> {
        self.benchmarks.iter().filter(|b| b.suite.eq_ignore_ascii_case(suite)).collect()
    }

    pub fn suite_info(&self, suite: &str) -> Option<&SuiteInfo> {
        self.suites.iter().find(|s| s.name.eq_ignore_ascii_case(suite))
    }

    /// Resolves names that are either equations or whole suites, in catalog
    /// order, without repeats. `all` selects everything.
    pub fn select(&self, names: &[&str]) -> Result<Vec<&BenchmarkSpec>, BenchError> {
        let mut picked = Vec::new();
        for name in names {
            let matched: Vec<&BenchmarkSpec> = if name.eq_ignore_ascii_case("all") {
                self.benchmarks.iter().collect()
            } else if let Some(b) = self.get(name) {
                alloc::vec![b]
            } else {
                self.suite(name)
            };
            if matched.is_empty() {
                return Err(BenchError::Unknown(name.to_string()));
            }
            picked.extend(matched);
        }
        let mut out: Vec<&BenchmarkSpec> = Vec::new();
        for b in &self.benchmarks {
            if picked.iter().any(|p| p.name == b.name) {
                out.push(b);
            }
        }
        Ok(out)
    }

    /// Average true-expression complexity of a suite.
    pub fn ground_truth_complexity(&self, suite: &str, convention: ComplexityConvention) -> Option<f64> {
        let specs = self.suite(suite);
        if specs.is_empty() {
            return None;
        }
        let total: usize = specs.iter().map(|s| s.truth_complexity(convention)).sum();
        Some(total as f64 / specs.len() as f64)
    }
}

/// The shipped catalog.
pub fn builtin() -> Catalog {
    Catalog::from_json(CATALOG).expect("shipped benchmark catalog is valid")
}

impl BenchmarkSpec {
    fn parse_field(&self, text: &str) -> Result<Expr, BenchError> {
        parse(text, self.dim).map_err(|source| BenchError::Parse {
            name: self.name.clone(),
            text: text.to_string(),
            source,
        })
    }

    pub fn truth_expr(&self) -> Expr {
        self.parse_field(&self.truth).expect("validated on load")
    }

    pub fn oracle_expr(&self) -> Expr {
        self.parse_field(&self.oracle).expect("validated on load")
    }

    pub fn truth_complexity(&self, convention: ComplexityConvention) -> usize {
        complexity_with(&self.truth_expr(), convention)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let invalid = |message: &str| BenchError::Invalid { name: self.name.clone(), message: message.to_string() };
        if !(1..=2).contains(&self.dim) {
            return Err(invalid("dimensionality must be 1 or 2"));
        }
        for s in [&self.train, &self.test] {
            if s.count == 0 || s.min.len() != self.dim || s.max.len() != self.dim {
                return Err(invalid("sampler shape"));
            }
            if s.min.iter().chain(&s.max).any(|v| !v.is_finite()) || s.min.iter().zip(&s.max).any(|(a, b)| a > b) {
                return Err(invalid("sampler bounds"));
            }
        }
        if self.domain.iter().any(|d| d.var >= self.dim) {
            return Err(invalid("domain variable out of range"));
        }
        self.parse_field(&self.truth)?;
        if self.truth_expr().coef_count() > 0 {
            return Err(invalid("true expression has placeholders"));
        }
        self.parse_field(&self.oracle)?;
        Ok(())
    }

    pub fn in_domain(&self, point: &[f64]) -> bool {
        self.domain.iter().all(|d| if d.open { point[d.var] > d.lower } else { point[d.var] >= d.lower })
    }

    fn sampler(&self, split: Split) -> &Sampler {
        match split {
            Split::Train => &self.train,
            Split::Test => &self.test,
        }
    }

    /// Draws the split. Uniform draws depend on `seed` and the benchmark name;
    /// grids ignore the seed.
    pub fn sample(&self, split: Split, seed: u64) -> Result<Dataset, BenchError> {
        let sampler = self.sampler(split);
        let truth = self.truth_expr();
        let mixed = split_seed(&self.name, split, seed);
        let x = match sampler.kind {
            SamplerKind::Grid => grid(&sampler.min, &sampler.max, sampler.count),
            SamplerKind::Uniform => {
                let mut rng = ChaCha8Rng::seed_from_u64(mixed);
                let axes: Vec<Uniform<f64>> = sampler
                    .min
                    .iter()
                    .zip(&sampler.max)
                    .map(|(lo, hi)| {
                        Uniform::new_inclusive(*lo, *hi)
                            .map_err(|e| BenchError::Invalid { name: self.name.clone(), message: e.to_string() })
                    })
                    .collect::<Result<_, _>>()?;
                let mut x = Vec::with_capacity(sampler.count * self.dim);
                for _ in 0..sampler.count {
                    let mut tries = 0;
                    loop {
                        let p: Vec<f64> = axes.iter().map(|a| a.sample(&mut rng)).collect();
                        if evaluate(&truth, &[], &p).is_some() {
                            x.extend(p);
                            break;
                        }
                        tries += 1;
                        if tries == MAX_RESAMPLES {
                            return Err(BenchError::Undefined { name: self.name.clone(), point: p });
                        }
                    }
                }
                x
            }
        };
        let mut y = Vec::with_capacity(sampler.count);
        for p in x.chunks_exact(self.dim) {
            y.push(
                evaluate(&truth, &[], p)
                    .ok_or_else(|| BenchError::Undefined { name: self.name.clone(), point: p.to_vec() })?,
            );
        }
        let provenance = Provenance {
            source: self.name.clone(),
            split: Some(split),
            seed: (sampler.kind == SamplerKind::Uniform).then_some(mixed),
        };
        Ok(Dataset::new(self.dim, x, y).with_provenance(provenance))
    }

    /// Test region widened by `extension` on each side, clipped to the
    /// domain, sampled as a grid of the original test count. `None` when the
    /// clipped region is empty.
    pub fn extended_test_set(&self, extension: f64) -> Option<Dataset> {
        let n = self.test.count;
        let mut min = Vec::with_capacity(self.dim);
        let mut max = Vec::with_capacity(self.dim);
        for v in 0..self.dim {
            let (a, b) = (self.test.min[v], self.test.max[v]);
            // [m - (1+2e)h, m + (1+2e)h] written so e = 0 is exact
            let half = (b - a) / 2.0;
            let mut lo = a - 2.0 * extension * half;
            let hi = b + 2.0 * extension * half;
            for d in self.domain.iter().filter(|d| d.var == v) {
                if lo < d.lower || (d.open && lo == d.lower && lo < a) {
                    lo = d.lower;
                    if d.open {
                        // step back from the excluded bound by half a grid step
                        let side = if self.dim == 1 { n } else { grid_side(n) };
                        lo += (hi - d.lower) / (2.0 * side.saturating_sub(1).max(1) as f64);
                    }
                }
            }
            if !(lo < hi) && !(lo == hi && a == b) {
                return None;
            }
            min.push(lo);
            max.push(hi);
        }
        let x = grid(&min, &max, n);
        let truth = self.truth_expr();
        let y: Option<Vec<f64>> = x.chunks_exact(self.dim).map(|p| evaluate(&truth, &[], p)).collect();
        let provenance =
            Provenance { source: format!("{}@{}", self.name, extension), split: Some(Split::Test), seed: None };
        Some(Dataset::new(self.dim, x, y?).with_provenance(provenance))
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(*b)).wrapping_mul(0x0100_0000_01b3))
}

fn split_seed(name: &str, split: Split, seed: u64) -> u64 {
    let tag = match split {
        Split::Train => 0x7472_6169_6e00_0000,
        Split::Test => 0x7465_7374_0000_0000,
    };
    fnv1a(name.as_bytes()) ^ tag ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// `i`-th of `n` equispaced values; mirrored bounds give mirrored values.
fn linspace_at(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
    if n <= 1 {
        return lo;
    }
    let last = n - 1;
    if 2 * i <= last {
        lo + (hi - lo) * (i as f64 / last as f64)
    } else {
        hi - (hi - lo) * ((last - i) as f64 / last as f64)
    }
}

fn grid_side(n: usize) -> usize {
    let mut side = libm::sqrt(n as f64) as usize;
    while side * side < n {
        side += 1;
    }
    side
}

/// Row-major grid: `n` points on one axis, or the first `n` points of a
/// `⌈√n⌉ × ⌈√n⌉` grid on two.
pub fn grid(min: &[f64], max: &[f64], n: usize) -> Vec<f64> {
    if min.len() == 1 {
        return (0..n).map(|i| linspace_at(min[0], max[0], n, i)).collect();
    }
    let side = grid_side(n);
    let mut x = Vec::with_capacity(n * 2);
    'outer: for i in 0..side {
        for j in 0..side {
            if x.len() == n * 2 {
                break 'outer;
            }
            x.push(linspace_at(min[0], max[0], side, i));
            x.push(linspace_at(min[1], max[1], side, j));
        }
    }
    x
}

/// Trimmed R² where some predictions may be undefined.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InDomainScore {
    /// `None` when fewer than two defined points remain.
    pub r2: Option<f64>,
    pub undefined: usize,
    /// Undefined points beyond the trim budget.
    pub failures: usize,
}

/// Drops the `floor(trim·n)` worst points, undefined ones first; undefined
/// points beyond that budget are excluded and counted as failures.
pub fn trimmed_r2_partial(predictions: &[Option<f64>], targets: &[f64], trim_fraction: f64) -> InDomainScore {
    let n = targets.len();
    let budget = trim_count(n, trim_fraction);
    let err = |i: usize| match predictions[i] {
        Some(p) => (targets[i] - p) * (targets[i] - p),
        None => f64::INFINITY,
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| err(b).total_cmp(&err(a)).then(a.cmp(&b)));
    let undefined = predictions.iter().filter(|p| p.is_none()).count();
    let drop = budget.max(undefined);
    let mut keep: Vec<usize> = order[drop.min(n)..].to_vec();
    keep.sort_unstable();
    let p: Vec<f64> = keep.iter().filter_map(|&i| predictions[i]).collect();
    let y: Vec<f64> = keep.iter().map(|&i| targets[i]).collect();
    InDomainScore { r2: r_squared(&p, &y).ok(), undefined, failures: undefined.saturating_sub(budget) }
}

pub fn evaluate_in_domain(expr: &Expr, coefficients: &[f64], test: &Dataset, trim_fraction: f64) -> InDomainScore {
    let predictions = evaluate_all(expr, coefficients, &test.x, test.dimensionality);
    trimmed_r2_partial(&predictions, &test.y, trim_fraction)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OodPoint {
    pub extension: f64,
    /// Raw R²; `None` when the candidate is undefined somewhere on the region.
    pub r2: Option<f64>,
    pub clamped: f64,
    /// Raw R² below zero, or undefined.
    pub negative: bool,
}

/// R² on widened test regions; negative or undefined scores clamp to 0.
/// Extensions whose region is empty after clipping are skipped (`None`).
pub fn evaluate_ood(
    expr: &Expr,
    coefficients: &[f64],
    spec: &BenchmarkSpec,
    extensions: &[f64],
    trim_fraction: f64,
) -> Vec<Option<OodPoint>> {
    extensions
        .iter()
        .map(|&extension| {
            let data = spec.extended_test_set(extension)?;
            let s = evaluate_in_domain(expr, coefficients, &data, trim_fraction);
            let r2 = if s.failures > 0 { None } else { s.r2 };
            let negative = r2.is_none_or(|v| v < 0.0);
            let clamped = r2.map_or(0.0, |v| v.clamp(0.0, 1.0));
            Some(OodPoint { extension, r2, clamped, negative })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OodSummary {
    pub benchmark: String,
    pub extension: f64,
    pub mean_r2_clamped: f64,
    pub neg_fraction: f64,
    pub count: usize,
}

/// Per-suite, per-extension means of `(suite, point)` rows.
pub fn aggregate_ood(points: &[(String, OodPoint)]) -> Vec<OodSummary> {
    let mut groups: BTreeMap<(String, u64), (f64, Vec<OodPoint>)> = BTreeMap::new();
    for (suite, p) in points {
        groups.entry((suite.clone(), p.extension.to_bits())).or_insert((p.extension, Vec::new())).1.push(*p);
    }
    let mut out: Vec<OodSummary> = groups
        .into_iter()
        .map(|((benchmark, _), (extension, ps))| {
            let n = ps.len() as f64;
            OodSummary {
                benchmark,
                extension,
                mean_r2_clamped: ps.iter().map(|p| p.clamped).sum::<f64>() / n,
                neg_fraction: ps.iter().filter(|p| p.negative).count() as f64 / n,
                count: ps.len(),
            }
        })
        .collect();
    out.sort_by(|a, b| a.benchmark.cmp(&b.benchmark).then(a.extension.total_cmp(&b.extension)));
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Ok,
    Failed(String),
}

/// One (equation, seed) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquationResult {
    pub benchmark: String,
    pub equation: String,
    pub seed: u64,
    pub status: RunStatus,
    /// Trimmed test R².
    pub r2: Option<f64>,
    pub complexity: Option<usize>,
    pub train_r2: Option<f64>,
    pub expression: Option<String>,
    pub skeleton: Option<Expr>,
    pub coefficients: Vec<f64>,
    /// Undefined test points beyond the trim budget.
    pub failures: usize,
}

impl EquationResult {
    pub fn failed(spec: &BenchmarkSpec, seed: u64, message: String) -> Self {
        EquationResult {
            benchmark: spec.suite.clone(),
            equation: spec.name.clone(),
            seed,
            status: RunStatus::Failed(message),
            r2: None,
            complexity: None,
            train_r2: None,
            expression: None,
            skeleton: None,
            coefficients: Vec::new(),
            failures: 0,
        }
    }
}

/// Runs the engine on one equation and scores the answer on the test split.
pub fn run_equation<B: ChatBackend>(
    spec: &BenchmarkSpec,
    seed: u64,
    config: &EngineConfig,
    backend: B,
) -> (EquationResult, Option<RunRecord>) {
    run_equation_observed(spec, seed, config, backend, NoObserver)
}

/// As [`run_equation`], reporting every call to `observer`.
pub fn run_equation_observed<B: ChatBackend, O: RunObserver>(
    spec: &BenchmarkSpec,
    seed: u64,
    config: &EngineConfig,
    backend: B,
    observer: O,
) -> (EquationResult, Option<RunRecord>) {
    let outcome = (|| -> Result<(Dataset, Dataset), BenchError> {
        Ok((spec.sample(Split::Train, DATA_SEED)?, spec.sample(Split::Test, DATA_SEED)?))
    })();
    let (train, test) = match outcome {
        Ok(d) => d,
        Err(e) => return (EquationResult::failed(spec, seed, e.to_string()), None),
    };
    let config = EngineConfig { seed, ..config.clone() };
    match run_observed(&train, &config, backend, observer) {
        Ok(record) => (score_record(spec, seed, &record, &test, config.score.trim_fraction), Some(record)),
        Err(e) => (EquationResult::failed(spec, seed, engine_message(&e)), None),
    }
}

fn engine_message(e: &EngineError) -> String {
    e.to_string()
}

/// Scores a finished run on `test`.
pub fn score_record(
    spec: &BenchmarkSpec,
    seed: u64,
    record: &RunRecord,
    test: &Dataset,
    trim_fraction: f64,
) -> EquationResult {
    let best = &record.best;
    let s = evaluate_in_domain(&best.skeleton.expr, &best.fit.coefficients, test, trim_fraction);
    EquationResult {
        benchmark: spec.suite.clone(),
        equation: spec.name.clone(),
        seed,
        status: RunStatus::Ok,
        r2: s.r2,
        complexity: Some(best.scores.complexity),
        train_r2: Some(best.scores.r2_train),
        expression: Some(record.best_expression()),
        skeleton: Some(best.skeleton.expr.clone()),
        coefficients: best.fit.coefficients.clone(),
        failures: s.failures,
    }
}

/// Mean and standard error of the mean (sample standard deviation over
/// `√n`; 0 for fewer than two values).
pub fn mean_sem(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, libm::sqrt(var / n as f64))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub benchmark: String,
    pub cells: usize,
    pub missing: usize,
    pub r2_mean: f64,
    pub r2_sem: f64,
    pub complexity_mean: f64,
    pub complexity_sem: f64,
    pub gt_complexity_all_nodes: f64,
    pub gt_complexity_operators: f64,
    pub reference_complexity: Option<f64>,
}

/// Per suite: average each seed's equations, then mean ± SEM across seeds.
pub fn aggregate(results: &[EquationResult], catalog: &Catalog) -> Vec<SuiteSummary> {
    let mut suites: Vec<String> = Vec::new();
    for r in results {
        if !suites.contains(&r.benchmark) {
            suites.push(r.benchmark.clone());
        }
    }
    suites
        .into_iter()
        .map(|suite| {
            let rows: Vec<&EquationResult> = results.iter().filter(|r| r.benchmark == suite).collect();
            let mut per_seed: BTreeMap<u64, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
            let mut cells = 0;
            for r in &rows {
                let entry = per_seed.entry(r.seed).or_default();
                if let (RunStatus::Ok, Some(r2)) = (&r.status, r.r2) {
                    cells += 1;
                    entry.0.push(r2);
                    entry.1.push(r.complexity.unwrap_or(0) as f64);
                }
            }
            let r2_means: Vec<f64> = per_seed
                .values()
                .filter(|v| !v.0.is_empty())
                .map(|v| v.0.iter().sum::<f64>() / v.0.len() as f64)
                .collect();
            let c_means: Vec<f64> = per_seed
                .values()
                .filter(|v| !v.1.is_empty())
                .map(|v| v.1.iter().sum::<f64>() / v.1.len() as f64)
                .collect();
            let (r2_mean, r2_sem) = mean_sem(&r2_means);
            let (complexity_mean, complexity_sem) = mean_sem(&c_means);
            SuiteSummary {
                cells,
                missing: rows.len() - cells,
                r2_mean,
                r2_sem,
                complexity_mean,
                complexity_sem,
                gt_complexity_all_nodes: catalog
                    .ground_truth_complexity(&suite, ComplexityConvention::AllNodes)
                    .unwrap_or(f64::NAN),
                gt_complexity_operators: catalog
                    .ground_truth_complexity(&suite, ComplexityConvention::Operators)
                    .unwrap_or(f64::NAN),
                reference_complexity: catalog.suite_info(&suite).map(|s| s.reference_complexity),
                benchmark: suite,
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub results: Vec<EquationResult>,
    pub summaries: Vec<SuiteSummary>,
}

/// Runs every (equation, seed) cell in order with a fresh backend per cell.
pub fn run_suite<B, F>(
    specs: &[&BenchmarkSpec],
    config: &EngineConfig,
    seeds: &[u64],
    catalog: &Catalog,
    mut backend: F,
) -> EvalReport
where
    B: ChatBackend,
    F: FnMut(&BenchmarkSpec, u64) -> B,
{
    let mut results = Vec::with_capacity(specs.len() * seeds.len());
    for spec in specs {
        for &seed in seeds {
            results.push(run_equation(spec, seed, config, backend(spec, seed)).0);
        }
    }
    let summaries = aggregate(&results, catalog);
    EvalReport { results, summaries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::ReplayBackend;
    use alloc::vec;

    #[test]
    fn catalog_shape() {
        let c = builtin();
        assert_eq!(c.benchmarks.len(), 35);
        assert_eq!(c.suite("nguyen").len(), 12);
        assert_eq!(c.suite("constant").len(), 8);
        assert_eq!(c.suite("keijzer").len(), 12);
        assert_eq!(c.suite("r").len(), 3);
        assert_eq!(c.select(&["nguyen", "nguyen8"]).unwrap().len(), 12);
        assert_eq!(c.select(&["all"]).unwrap().len(), 35);
        assert!(c.select(&["feynman"]).is_err());
    }

    #[test]
    fn sampling_examples() {
        let c = builtin();
        let train = c.get("nguyen1").unwrap().sample(Split::Train, DATA_SEED).unwrap();
        assert_eq!(train.len(), 20);
        assert!(train.x.iter().all(|v| (-1.0..=1.0).contains(v)));
        let test = c.get("nguyen7").unwrap().sample(Split::Test, DATA_SEED).unwrap();
        assert_eq!(test.len(), 200);
        assert_eq!(test.x[0], 0.0);
        assert_eq!(test.x[199], 2.0);
        let k4 = c.get("keijzer4").unwrap().sample(Split::Train, DATA_SEED).unwrap();
        assert_eq!(k4.len(), 200);
        assert_eq!((k4.x[0], k4.x[199]), (0.0, 10.0));
        assert!((k4.x[1] - 10.0 / 199.0).abs() < 1e-15);
    }

    #[test]
    fn train_data_is_stable() {
        let spec = builtin().get("keijzer11").unwrap().clone();
        let a = spec.sample(Split::Train, DATA_SEED).unwrap();
        let b = spec.sample(Split::Train, DATA_SEED).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.x, spec.sample(Split::Train, 1).unwrap().x);
        let other = builtin().get("keijzer12").unwrap().sample(Split::Train, DATA_SEED).unwrap();
        assert_ne!(a.x, other.x);
    }

    #[test]
    fn two_input_grid() {
        let x = grid(&[-1.0, -1.0], &[1.0, 1.0], 500);
        assert_eq!(x.len(), 1000);
        assert_eq!(&x[..4], &[-1.0, -1.0, -1.0, -1.0 + 2.0 / 22.0]);
        assert_eq!(&x[44..46], &[-1.0, 1.0]);
        assert_eq!(grid(&[0.0, 0.0], &[1.0, 1.0], 4), vec![0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn grids_mirror() {
        let x = grid(&[-3.0], &[3.0], 1000);
        for i in 0..1000 {
            assert_eq!(x[i], -x[999 - i]);
        }
    }

    #[test]
    fn in_domain_examples() {
        let spec = builtin().get("constant6").unwrap().clone();
        let test = spec.sample(Split::Test, DATA_SEED).unwrap();
        let truth = spec.truth_expr();
        assert_eq!(evaluate_in_domain(&truth, &[], &test, 0.05).r2, Some(1.0));
        let mean = test.y.iter().sum::<f64>() / test.len() as f64;
        let r2 = evaluate_in_domain(&Expr::Coef, &[mean], &test, 0.0).r2.unwrap();
        assert!(r2.abs() < 1e-12);
    }

    #[test]
    fn undefined_points_are_trimmed_first() {
        let y: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let mut p: Vec<Option<f64>> = y.iter().map(|v| Some(*v)).collect();
        p[3] = None;
        let s = trimmed_r2_partial(&p, &y, 0.05);
        assert_eq!((s.r2, s.undefined, s.failures), (Some(1.0), 1, 0));
        p[4] = None;
        let s = trimmed_r2_partial(&p, &y, 0.05);
        assert_eq!((s.r2, s.undefined, s.failures), (Some(1.0), 2, 1));
    }

    #[test]
    fn extension_geometry() {
        let c = builtin();
        let n1 = c.get("nguyen1").unwrap();
        let d = n1.extended_test_set(1.0).unwrap();
        assert_eq!((d.x[0], d.x[199]), (-3.0, 3.0));
        let n8 = c.get("nguyen8").unwrap();
        let d = n8.extended_test_set(1.0).unwrap();
        assert_eq!((d.x[0], d.x[199]), (0.0, 8.0));
        let k7 = c.get("keijzer7").unwrap();
        let d = k7.extended_test_set(1.0).unwrap();
        assert!(d.x[0] > 0.0 && d.x[0] < 0.1);
        assert_eq!(d.x[999], 199.0);
        for spec in &c.benchmarks {
            let d0 = spec.extended_test_set(0.0).unwrap();
            assert_eq!(
                d0,
                spec.sample(Split::Test, DATA_SEED).unwrap().with_provenance(d0.provenance.clone()),
                "{}",
                spec.name
            );
        }
    }

    #[test]
    fn ood_oracle_and_clamping() {
        let c = builtin();
        let spec = c.get("nguyen8").unwrap();
        let pts = evaluate_ood(&spec.truth_expr(), &[], spec, &DEFAULT_EXTENSIONS, 0.0);
        assert!(pts.iter().all(|p| p.unwrap().clamped == 1.0 && !p.unwrap().negative));
        let diverging = parse("c*x^5 + x", 1).unwrap();
        let spec = c.get("nguyen1").unwrap();
        let p = evaluate_ood(&diverging, &[1.0], spec, &[1.0], 0.0)[0].unwrap();
        assert!(p.r2.unwrap() < 0.0);
        assert_eq!(p.clamped, 0.0);
        assert!(p.negative);
    }

    #[test]
    fn sem_examples() {
        assert_eq!(mean_sem(&[1.0; 5]), (1.0, 0.0));
        assert_eq!(mean_sem(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_sem(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - libm::sqrt(5.0 / 3.0 / 4.0)).abs() < 1e-15);
    }

    #[test]
    fn suite_with_oracle_replay() {
        let c = builtin();
        let specs = c.select(&["R1", "nguyen8"]).unwrap();
        let config = EngineConfig { seed_calls: 1, max_iterations: 0, ..Default::default() };
        let report = run_suite(&specs, &config, &[1, 2], &c, |spec, _| {
            ReplayBackend::new(vec![format!("f1(x) = {}", spec.oracle)])
        });
        assert_eq!(report.results.len(), 4);
        assert!(report.results.iter().all(|r| r.status == RunStatus::Ok), "{:?}", report.results);
        let nguyen = report.summaries.iter().find(|s| s.benchmark == "nguyen").unwrap();
        assert_eq!(nguyen.cells, 2);
        assert!(nguyen.r2_mean > 0.9999);
    }
}
