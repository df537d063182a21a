//! The search loop: seed calls, trajectory-driven refinement, and the
//! random-guessing baseline.
//!
//! Every proposed function is parsed, reduced to its canonical skeleton and
//! fitted at most once per run. The trajectory shown back to the model holds
//! the `top_k` lowest-error skeletons.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Dataset;
use crate::expr::{canonicalize, complexity_with, evaluate_all, parse, render, render_fitted, Skeleton};
use crate::fit::{fit, FitConfig, FitError, FitResult};
use crate::llm::{
    BackendError, ChatBackend, CompletionRequest, CompletionResponse, Message, SamplingParams, TemperatureSchedule,
};
use crate::prompt::{
    build_loop_prompt, build_random_prompt, build_seed_prompt, extract_candidates, PromptContext, TrajectoryLine,
};
use crate::score::{score, ScoreConfig, Scores};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Seed calls followed by the refinement loop.
    #[default]
    Full,
    /// Seed calls only.
    SeedOnly,
    /// Independent calls of the random prompt, no feedback.
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub seed_calls: usize,
    pub max_iterations: usize,
    pub top_k: usize,
    pub functions_per_call: usize,
    /// Stop once any candidate's train R² exceeds this.
    pub early_stop_r2: f64,
    pub score: ScoreConfig,
    pub fit: FitConfig,
    pub sampling: SamplingParams,
    /// Temperature per call; overrides `sampling.temperature`. Its `total` is
    /// taken from `max_iterations`.
    pub schedule: TemperatureSchedule,
    pub model: String,
    /// Master seed for coefficient initialization.
    pub seed: u64,
    pub mode: Mode,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            seed_calls: 10,
            max_iterations: 50,
            top_k: 5,
            functions_per_call: 5,
            early_stop_r2: 0.99999,
            score: ScoreConfig::default(),
            fit: FitConfig::default(),
            sampling: SamplingParams::default(),
            schedule: TemperatureSchedule::default(),
            model: "default".into(),
            seed: 0,
            mode: Mode::Full,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        if self.seed_calls < 1 {
            return Err(EngineError::Config("seed_calls must be >= 1".into()));
        }
        if self.top_k < 1 || self.functions_per_call < 1 {
            return Err(EngineError::Config("top_k and functions_per_call must be >= 1".into()));
        }
        self.score.validate().map_err(|e| EngineError::Config(e.to_string()))?;
        self.fit.validate().map_err(|e| EngineError::Config(e.to_string()))?;
        self.sampling.validate().map_err(|e| EngineError::Config(e.to_string()))?;
        self.schedule.validate().map_err(|e| EngineError::Config(e.to_string()))?;
        Ok(())
    }

    /// Loop iterations actually run in this mode.
    pub fn loop_iterations(&self) -> usize {
        match self.mode {
            Mode::Full => self.max_iterations,
            Mode::SeedOnly | Mode::Random => 0,
        }
    }

    /// Upper bound on backend calls.
    pub fn max_calls(&self) -> usize {
        match self.mode {
            Mode::Full => self.seed_calls + self.max_iterations,
            Mode::SeedOnly => self.seed_calls,
            Mode::Random => self.seed_calls + self.max_iterations,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("invalid engine configuration: {0}")]
    Config(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("no valid seed function after {calls} calls")]
    NoValidSeed { calls: usize },
    #[error("run log: {0}")]
    Observer(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Seed,
    Loop,
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Origin {
    pub phase: Phase,
    /// Call index within the phase.
    pub call: usize,
}

/// A fitted, scored proposal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub raw: String,
    pub skeleton: Skeleton,
    pub fit: FitResult,
    pub scores: Scores,
    pub origin: Origin,
}

impl Candidate {
    pub fn key(&self) -> &str {
        &self.skeleton.key
    }

    pub fn error(&self) -> f64 {
        self.scores.error
    }

    /// Skeleton with fitted coefficients substituted.
    pub fn expression(&self, dimensionality: usize) -> String {
        render_fitted(&self.skeleton.expr, &self.fit.coefficients, dimensionality)
    }
}

/// The `k` lowest-error candidates, ascending, one per key.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    k: usize,
    entries: Vec<Candidate>,
}

impl Trajectory {
    pub fn new(k: usize) -> Self {
        Trajectory { k: k.max(1), entries: Vec::new() }
    }

    pub fn entries(&self) -> &[Candidate] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn best(&self) -> Option<&Candidate> {
        self.entries.first()
    }

    /// Offers a candidate; returns whether it was kept. A key already present
    /// keeps its lower-error entry.
    pub fn insert(&mut self, candidate: Candidate) -> bool {
        if let Some(i) = self.entries.iter().position(|c| c.key() == candidate.key()) {
            if candidate.error() >= self.entries[i].error() {
                return false;
            }
            self.entries.remove(i);
        }
        let at = self
            .entries
            .iter()
            .position(|c| candidate.error().total_cmp(&c.error()).then_with(|| candidate.key().cmp(c.key())).is_lt())
            .unwrap_or(self.entries.len());
        if at >= self.k {
            return false;
        }
        self.entries.insert(at, candidate);
        self.entries.truncate(self.k);
        true
    }
}

/// Why a proposal did or did not become a candidate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum ProposalStatus {
    Accepted {
        key: String,
        error: f64,
        r2_train: f64,
    },
    Duplicate {
        key: String,
    },
    ParseError {
        message: String,
    },
    FitFailed {
        key: String,
        message: String,
    },
    /// Beyond `functions_per_call` parseable proposals in one response.
    Truncated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Proposal {
    pub raw: String,
    #[serde(flatten)]
    pub status: ProposalStatus,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CallHeader {
    pub phase: Phase,
    pub call: usize,
    pub temperature: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CallRecord {
    #[serde(flatten)]
    pub header: CallHeader,
    pub prompt: String,
    pub response: Option<String>,
    pub error: Option<BackendError>,
    pub proposals: Vec<Proposal>,
    /// Lowest error seen so far in the run, after this call.
    pub best_error: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub calls: usize,
    pub failed_calls: usize,
    pub max_calls: usize,
    /// Function strings found in responses.
    pub extracted: usize,
    /// Parseable proposals taken for processing (at most `functions_per_call` per call).
    pub parsed: usize,
    pub duplicates: usize,
    pub unique_fits: usize,
    pub failed_fits: usize,
    pub nls_restarts: usize,
}

impl BudgetReport {
    /// Checks the counters against the configured maxima.
    pub fn check(&self, config: &EngineConfig) -> Result<(), String> {
        if self.calls > config.max_calls() {
            return Err(format!("{} calls exceed the limit of {}", self.calls, config.max_calls()));
        }
        if self.parsed > self.calls * config.functions_per_call {
            return Err(format!("{} proposals exceed {} per call", self.parsed, config.functions_per_call));
        }
        if self.nls_restarts > self.unique_fits * config.fit.restarts {
            return Err(format!("{} restarts exceed {} per fit", self.nls_restarts, config.fit.restarts));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: EngineConfig,
    pub dimensionality: usize,
    pub calls: Vec<CallRecord>,
    /// Minimum-error candidate of the whole run.
    pub best: Candidate,
    pub trajectory: Vec<Candidate>,
    pub early_stopped: bool,
    pub budget: BudgetReport,
}

impl RunRecord {
    pub fn budget_report(&self) -> BudgetReport {
        self.budget
    }

    pub fn best_expression(&self) -> String {
        self.best.expression(self.dimensionality)
    }
}

/// Hooks called around every backend call, before the response is used.
pub trait RunObserver {
    fn request(&mut self, _call: &CallHeader, _request: &CompletionRequest) -> Result<(), String> {
        Ok(())
    }

    fn response(
        &mut self,
        _call: &CallHeader,
        _response: &Result<CompletionResponse, BackendError>,
    ) -> Result<(), String> {
        Ok(())
    }

    fn call_finished(&mut self, _record: &CallRecord) -> Result<(), String> {
        Ok(())
    }
}

/// Observer that does nothing.
pub struct NoObserver;

impl RunObserver for NoObserver {}

impl<O: RunObserver + ?Sized> RunObserver for &mut O {
    fn request(&mut self, call: &CallHeader, request: &CompletionRequest) -> Result<(), String> {
        (**self).request(call, request)
    }

    fn response(
        &mut self,
        call: &CallHeader,
        response: &Result<CompletionResponse, BackendError>,
    ) -> Result<(), String> {
        (**self).response(call, response)
    }

    fn call_finished(&mut self, record: &CallRecord) -> Result<(), String> {
        (**self).call_finished(record)
    }
}

struct Search<'a, B, O> {
    data: &'a Dataset,
    config: &'a EngineConfig,
    backend: B,
    observer: O,
    seen: BTreeSet<String>,
    trajectory: Trajectory,
    best: Option<Candidate>,
    calls: Vec<CallRecord>,
    budget: BudgetReport,
    stop: bool,
}

impl<B: ChatBackend, O: RunObserver> Search<'_, B, O> {
    fn call(&mut self, header: CallHeader, prompt: String) -> Result<(), EngineError> {
        let mut sampling = self.config.sampling;
        sampling.temperature = header.temperature;
        let request = CompletionRequest {
            model: self.config.model.clone(),
            messages: alloc::vec![Message::user(prompt)],
            sampling,
        };
        self.observer.request(&header, &request).map_err(EngineError::Observer)?;
        let response = self.backend.complete(&request);
        self.observer.response(&header, &response).map_err(EngineError::Observer)?;
        self.budget.calls += 1;

        let prompt = request.messages.into_iter().next().map(|m| m.content).unwrap_or_default();
        let mut record =
            CallRecord { header, prompt, response: None, error: None, proposals: Vec::new(), best_error: None };
        match response {
            Ok(r) => {
                record.proposals = self.process(&r.text, Origin { phase: header.phase, call: header.call });
                record.response = Some(r.text);
            }
            Err(e) => {
                self.budget.failed_calls += 1;
                record.error = Some(e);
            }
        }
        record.best_error = self.best.as_ref().map(Candidate::error);
        self.observer.call_finished(&record).map_err(EngineError::Observer)?;
        self.calls.push(record);
        Ok(())
    }

    fn process(&mut self, text: &str, origin: Origin) -> Vec<Proposal> {
        let extracted = extract_candidates(text);
        self.budget.extracted += extracted.len();
        let mut taken = 0;
        let mut out = Vec::with_capacity(extracted.len());
        for raw in extracted {
            if taken == self.config.functions_per_call {
                out.push(Proposal { raw, status: ProposalStatus::Truncated });
                continue;
            }
            let expr = match parse(&raw, self.data.dimensionality) {
                Ok(e) => e,
                Err(e) => {
                    out.push(Proposal { raw, status: ProposalStatus::ParseError { message: e.to_string() } });
                    continue;
                }
            };
            taken += 1;
            self.budget.parsed += 1;
            let skeleton = canonicalize(&expr);
            let key = skeleton.key.clone();
            if !self.seen.insert(key.clone()) {
                self.budget.duplicates += 1;
                out.push(Proposal { raw, status: ProposalStatus::Duplicate { key } });
                continue;
            }
            let complexity = complexity_with(&expr, self.config.score.complexity);
            let status = match self.evaluate(raw.clone(), skeleton, complexity, origin) {
                Ok(c) => {
                    let status = ProposalStatus::Accepted { key, error: c.error(), r2_train: c.scores.r2_train };
                    if c.scores.r2_train > self.config.early_stop_r2 {
                        self.stop = true;
                    }
                    if self.best.as_ref().is_none_or(|b| c.error() < b.error()) {
                        self.best = Some(c.clone());
                    }
                    self.trajectory.insert(c);
                    status
                }
                Err(message) => {
                    self.budget.failed_fits += 1;
                    ProposalStatus::FitFailed { key, message }
                }
            };
            out.push(Proposal { raw, status });
        }
        out
    }

    fn evaluate(
        &mut self,
        raw: String,
        skeleton: Skeleton,
        complexity: usize,
        origin: Origin,
    ) -> Result<Candidate, String> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(self.budget.unique_fits as u64);
        self.budget.unique_fits += 1;
        let fitted = match fit(&skeleton, self.data, &self.config.fit, &mut rng) {
            Ok(f) => f,
            Err(e) => {
                if matches!(e, FitError::Undefined { .. }) && skeleton.slots() > 0 {
                    self.budget.nls_restarts += self.config.fit.restarts;
                }
                return Err(e.to_string());
            }
        };
        self.budget.nls_restarts += fitted.restarts_run();
        let predictions: Option<Vec<f64>> =
            evaluate_all(&skeleton.expr, &fitted.coefficients, &self.data.x, self.data.dimensionality)
                .into_iter()
                .collect();
        let predictions = predictions.ok_or("undefined at fitted coefficients")?;
        let scores = score(&predictions, &self.data.y, complexity, &self.config.score).map_err(|e| e.to_string())?;
        if !scores.error.is_finite() {
            return Err("non-finite error".into());
        }
        Ok(Candidate { raw, skeleton, fit: fitted, scores, origin })
    }

    fn finish(self, early_stopped: bool) -> Result<RunRecord, EngineError> {
        let best = self.best.ok_or(EngineError::NoValidSeed { calls: self.budget.calls })?;
        let mut budget = self.budget;
        budget.max_calls = self.config.max_calls();
        Ok(RunRecord {
            config: self.config.clone(),
            dimensionality: self.data.dimensionality,
            calls: self.calls,
            best,
            trajectory: self.trajectory.entries,
            early_stopped,
            budget,
        })
    }
}

fn start<'a, B, O>(
    data: &'a Dataset,
    config: &'a EngineConfig,
    backend: B,
    observer: O,
) -> Result<Search<'a, B, O>, EngineError> {
    config.validate()?;
    if data.is_empty() {
        return Err(EngineError::EmptyDataset);
    }
    Ok(Search {
        data,
        config,
        backend,
        observer,
        seen: BTreeSet::new(),
        trajectory: Trajectory::new(config.top_k),
        best: None,
        calls: Vec::new(),
        budget: BudgetReport::default(),
        stop: false,
    })
}

/// Runs the configured mode without observation.
pub fn run<B: ChatBackend>(data: &Dataset, config: &EngineConfig, backend: B) -> Result<RunRecord, EngineError> {
    run_observed(data, config, backend, NoObserver)
}

pub fn run_observed<B: ChatBackend, O: RunObserver>(
    data: &Dataset,
    config: &EngineConfig,
    backend: B,
    observer: O,
) -> Result<RunRecord, EngineError> {
    if config.mode == Mode::Random {
        return run_random_guessing_observed(data, config, backend, observer);
    }
    let mut s = start(data, config, backend, observer)?;
    let ctx = PromptContext::new(data);
    let seed_prompt = build_seed_prompt(&ctx);
    let schedule = TemperatureSchedule { total: config.max_iterations, ..config.schedule };

    for call in 0..config.seed_calls {
        let header = CallHeader { phase: Phase::Seed, call, temperature: schedule.start };
        s.call(header, seed_prompt.clone())?;
        if s.stop {
            return s.finish(true);
        }
    }
    if s.best.is_none() {
        return Err(EngineError::NoValidSeed { calls: s.budget.calls });
    }

    for iteration in 0..config.loop_iterations() {
        let lines = s
            .trajectory
            .entries()
            .iter()
            .map(|c| TrajectoryLine { function: render(&c.skeleton.expr, data.dimensionality), error: c.error() })
            .collect();
        let prompt = build_loop_prompt(&ctx.clone().with_trajectory(lines, iteration));
        let header =
            CallHeader { phase: Phase::Loop, call: iteration, temperature: schedule.temperature_at(iteration) };
        s.call(header, prompt)?;
        if s.stop {
            return s.finish(true);
        }
    }
    s.finish(false)
}

/// Baseline: `seed_calls + max_iterations` independent calls of the random
/// prompt, every proposal fitted, no feedback and no early stop.
pub fn run_random_guessing<B: ChatBackend>(
    data: &Dataset,
    config: &EngineConfig,
    backend: B,
) -> Result<RunRecord, EngineError> {
    run_random_guessing_observed(data, config, backend, NoObserver)
}

pub fn run_random_guessing_observed<B: ChatBackend, O: RunObserver>(
    data: &Dataset,
    config: &EngineConfig,
    backend: B,
    observer: O,
) -> Result<RunRecord, EngineError> {
    let mut s = start(data, config, backend, observer)?;
    let prompt = build_random_prompt(data.dimensionality);
    for call in 0..config.seed_calls + config.max_iterations {
        let header = CallHeader { phase: Phase::Random, call, temperature: config.schedule.start };
        s.call(header, prompt.clone())?;
    }
    s.finish(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::ReplayBackend;
    use alloc::vec;

    fn data() -> Dataset {
        Dataset::from_pairs((0..20).map(|i| {
            let x = -1.0 + 2.0 * i as f64 / 19.0;
            (x, x * x * x + x * x + x)
        }))
    }

    fn replay(responses: &[&str]) -> ReplayBackend {
        ReplayBackend::new(responses.iter().map(|s| s.to_string()).collect())
    }

    #[test]
    fn oracle_seed_stops_early() {
        let mut script = vec!["f1(x) = c*sin(x)\nf2(x) = c*x^3 + c*x^2 + c*x"];
        script.extend([""; 59]);
        let record = run(&data(), &EngineConfig::default(), replay(&script)).unwrap();
        assert!(record.early_stopped);
        assert_eq!(record.budget.calls, 1);
        assert!(record.best.scores.r2_train > 0.99999);
        assert_eq!(record.best.skeleton.key, "c*x + c*x^2 + c*x^3");
    }

    #[test]
    fn seed_only_returns_best_seed() {
        let cfg = EngineConfig { max_iterations: 0, seed_calls: 2, ..Default::default() };
        let record = run(&data(), &cfg, replay(&["f1(x) = c*x", "f1(x) = c*x^2 + c*x"])).unwrap();
        assert_eq!(record.budget.calls, 2);
        assert_eq!(record.best.skeleton.key, "c*x + c*x^2");
        assert!(!record.early_stopped);
    }

    #[test]
    fn unparseable_seeds_fail() {
        let cfg = EngineConfig { seed_calls: 3, ..Default::default() };
        let err = run(&data(), &cfg, replay(&["nothing", "f1(x) = sin(", "f1(x) = q"])).unwrap_err();
        assert_eq!(err, EngineError::NoValidSeed { calls: 3 });
    }

    #[test]
    fn backend_errors_skip_the_call() {
        let cfg = EngineConfig { seed_calls: 2, max_iterations: 3, ..Default::default() };
        let record = run(&data(), &cfg, replay(&["f1(x) = c*x", "f1(x) = c*sin(x)"])).unwrap();
        assert_eq!(record.budget.calls, 5);
        assert_eq!(record.budget.failed_calls, 3);
        assert!(matches!(record.calls[4].error, Some(BackendError::Exhausted { served: 2 })));
    }

    #[test]
    fn duplicates_and_truncation() {
        let text = "f1(x) = c*x\nf2(x) = x*c\nf3(x) = 2*x\nf4(x) = ???\nf5(x) = c*x + c\nf6(x) = c\nf7(x) = c*x^2\nf8(x) = c*x^3";
        let cfg = EngineConfig { seed_calls: 1, max_iterations: 0, ..Default::default() };
        let record = run(&data(), &cfg, replay(&[text])).unwrap();
        let statuses: Vec<&ProposalStatus> = record.calls[0].proposals.iter().map(|p| &p.status).collect();
        assert!(matches!(statuses[0], ProposalStatus::Accepted { .. }));
        assert!(matches!(statuses[1], ProposalStatus::Duplicate { .. }));
        assert!(matches!(statuses[2], ProposalStatus::Duplicate { .. }));
        assert!(matches!(statuses[3], ProposalStatus::ParseError { .. }));
        assert!(matches!(statuses[6], ProposalStatus::Truncated));
        assert!(matches!(statuses[7], ProposalStatus::Truncated));
        assert_eq!(record.budget.parsed, 5);
        assert_eq!(record.budget.unique_fits, 3);
        assert_eq!(record.budget.duplicates, 2);
    }

    #[test]
    fn loop_prompt_carries_trajectory() {
        let cfg = EngineConfig { seed_calls: 1, max_iterations: 1, ..Default::default() };
        let record =
            run(&data(), &cfg, replay(&["f1(x) = c*x\nf2(x) = c*sin(x)\nf3(x) = c", "f1(x) = c*exp(x)"])).unwrap();
        let prompt = &record.calls[1].prompt;
        let shown: Vec<&str> = prompt.lines().filter(|l| l.starts_with("Function: ")).collect();
        assert_eq!(shown.len(), 3);
        assert!(shown[0].starts_with("Function: c, Error: "));
    }

    #[test]
    fn random_mode_budget() {
        let cfg = EngineConfig { mode: Mode::Random, ..Default::default() };
        let script: Vec<&str> = (0..60).map(|_| "Function: c*x\nFunction: c*x + c").collect();
        let record = run(&data(), &cfg, replay(&script)).unwrap();
        assert_eq!(record.budget.calls, 60);
        assert_eq!(record.budget.unique_fits, 2);
        assert!(record.budget.check(&cfg).is_ok());
        assert!(record.calls.iter().all(|c| c.header.phase == Phase::Random));
        let none: Vec<&str> = (0..60).map(|_| "no functions").collect();
        assert!(matches!(run(&data(), &cfg, replay(&none)), Err(EngineError::NoValidSeed { calls: 60 })));
    }

    #[test]
    fn replay_runs_are_identical() {
        let script: Vec<&str> = (0..60)
            .map(|i| if i % 2 == 0 { "f1(x) = c*sin(c*x)\nf2(x) = c*exp(c*x)" } else { "f1(x) = c*x^2 + c*cos(x)" })
            .collect();
        let a = run(&data(), &EngineConfig::default(), replay(&script)).unwrap();
        let b = run(&data(), &EngineConfig::default(), replay(&script)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn trajectory_keeps_k_best_unique() {
        let record = {
            let cfg = EngineConfig { seed_calls: 1, max_iterations: 0, top_k: 2, ..Default::default() };
            run(&data(), &cfg, replay(&["f1(x) = c\nf2(x) = c*x\nf3(x) = c*x^2 + c*x"])).unwrap()
        };
        assert_eq!(record.trajectory.len(), 2);
        assert!(record.trajectory[0].error() <= record.trajectory[1].error());
        assert_eq!(record.trajectory[0].key(), record.best.key());
    }
}
