//! Run configuration files.
//!
//! Every section is optional and every field has a default; unknown keys
//! are rejected so typos surface instead of silently falling back.

use std::path::{Path, PathBuf};

use icsr_core::engine::{EngineConfig, Mode};
use icsr_core::fit::FitConfig;
use icsr_core::llm::{SamplingParams, TemperatureSchedule};
use icsr_core::score::ScoreConfig;
use serde::{Deserialize, Serialize};

use crate::live::LiveOptions;
use crate::Error;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfigFile {
    pub engine: EngineSection,
    pub sampling: SamplingParams,
    pub fit: FitConfig,
    pub score: ScoreConfig,
    pub backend: BackendSection,
    /// Equation or suite names; `all` selects the whole catalog.
    pub benchmarks: Vec<String>,
    pub output: Option<PathBuf>,
    /// Method seeds; empty means 1 to 5.
    pub seeds: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineSection {
    pub seed_calls: usize,
    pub max_iterations: usize,
    pub top_k: usize,
    pub functions_per_call: usize,
    pub early_stop_r2: f64,
    pub mode: Mode,
    pub schedule: TemperatureSchedule,
}

impl Default for EngineSection {
    fn default() -> Self {
        let e = EngineConfig::default();
        EngineSection {
            seed_calls: e.seed_calls,
            max_iterations: e.max_iterations,
            top_k: e.top_k,
            functions_per_call: e.functions_per_call,
            early_stop_r2: e.early_stop_r2,
            mode: e.mode,
            schedule: e.schedule,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Live,
    Replay,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendSection {
    pub kind: BackendKind,
    pub model: String,
    pub replay_file: Option<PathBuf>,
    pub live: LiveOptions,
}

impl Default for BackendSection {
    fn default() -> Self {
        BackendSection {
            kind: BackendKind::Live,
            model: EngineConfig::default().model,
            replay_file: None,
            live: LiveOptions::default(),
        }
    }
}

pub const DEFAULT_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

impl RunConfigFile {
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    pub fn engine_config(&self) -> EngineConfig {
        let e = &self.engine;
        EngineConfig {
            seed_calls: e.seed_calls,
            max_iterations: e.max_iterations,
            top_k: e.top_k,
            functions_per_call: e.functions_per_call,
            early_stop_r2: e.early_stop_r2,
            score: self.score,
            fit: self.fit,
            sampling: self.sampling,
            schedule: e.schedule,
            model: self.backend.model.clone(),
            seed: 0,
            mode: e.mode,
        }
    }

    pub fn seeds(&self) -> Vec<u64> {
        if self.seeds.is_empty() {
            DEFAULT_SEEDS.to_vec()
        } else {
            self.seeds.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let c = RunConfigFile::from_json("{}").unwrap();
        assert_eq!(c.engine_config(), EngineConfig::default());
        assert_eq!(c.seeds(), vec![1, 2, 3, 4, 5]);
        assert_eq!(c.backend.live.attempts, 3);
    }

    #[test]
    fn sections_override() {
        let c = RunConfigFile::from_json(
            r#"{"engine": {"seed_calls": 5, "mode": "seed-only"}, "score": {"lambda": 0},
                "backend": {"kind": "replay", "replay_file": "r.json"}, "seeds": [7]}"#,
        )
        .unwrap();
        let e = c.engine_config();
        assert_eq!((e.seed_calls, e.mode, e.score.lambda), (5, Mode::SeedOnly, 0.0));
        assert_eq!(c.backend.kind, BackendKind::Replay);
        assert_eq!(c.seeds(), vec![7]);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfigFile::from_json(r#"{"engine": {"seedcalls": 5}}"#).is_err());
        assert!(RunConfigFile::from_json(r#"{"plotting": {}}"#).is_err());
        assert!(RunConfigFile::from_json(r#"{"score": {"lamda": 0.1}}"#).is_err());
    }
}
