//! Accuracy and complexity scoring.
//!
//! The loop minimizes `err = 1 / r` where
//! `r = 1 / (1 + NMSE) + λ·exp(−C / L)` and
//! `NMSE = Σ(y − ŷ)² / (Σy² + ε)`. Reported quality is the coefficient of
//! determination, optionally after dropping the worst predictions.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::ComplexityConvention;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ScoreError {
    #[error("predictions ({predictions}) and targets ({targets}) differ in length")]
    LengthMismatch { predictions: usize, targets: usize },
    #[error("need at least {needed} points, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("trim fraction {0} outside [0, 1)")]
    TrimFraction(f64),
    #[error("invalid score configuration: {0}")]
    Config(&'static str),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreConfig {
    /// Weight of the complexity bonus.
    pub lambda: f64,
    /// Length scale of the complexity bonus.
    pub max_length: f64,
    /// Regularizer in the NMSE denominator.
    pub epsilon: f64,
    /// Fraction of worst test predictions dropped before R².
    pub trim_fraction: f64,
    pub complexity: ComplexityConvention,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        ScoreConfig {
            lambda: 0.05,
            max_length: 30.0,
            epsilon: 1e-9,
            trim_fraction: 0.05,
            complexity: ComplexityConvention::AllNodes,
        }
    }
}

impl ScoreConfig {
    pub fn validate(&self) -> Result<(), ScoreError> {
        if !(self.lambda >= 0.0) {
            return Err(ScoreError::Config("lambda must be >= 0"));
        }
        if !(self.max_length > 0.0) {
            return Err(ScoreError::Config("max_length must be > 0"));
        }
        if !(self.epsilon > 0.0) {
            return Err(ScoreError::Config("epsilon must be > 0"));
        }
        if !(0.0..1.0).contains(&self.trim_fraction) {
            return Err(ScoreError::TrimFraction(self.trim_fraction));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub nmse: f64,
    pub fitness: f64,
    pub error: f64,
    pub r2_train: f64,
    pub complexity: usize,
}

fn check_lengths(predictions: &[f64], targets: &[f64], needed: usize) -> Result<(), ScoreError> {
    if predictions.len() != targets.len() {
        return Err(ScoreError::LengthMismatch { predictions: predictions.len(), targets: targets.len() });
    }
    if targets.len() < needed {
        return Err(ScoreError::TooFew { needed, got: targets.len() });
    }
    Ok(())
}

fn sse(predictions: &[f64], targets: &[f64]) -> f64 {
    predictions.iter().zip(targets).map(|(p, y)| (y - p) * (y - p)).sum()
}

pub fn nmse(predictions: &[f64], targets: &[f64], epsilon: f64) -> Result<f64, ScoreError> {
    check_lengths(predictions, targets, 1)?;
    let energy: f64 = targets.iter().map(|y| y * y).sum();
    Ok(sse(predictions, targets) / (energy + epsilon))
}

/// Returns `(r, err)`.
pub fn fitness(nmse: f64, complexity: usize, config: &ScoreConfig) -> (f64, f64) {
    let r = 1.0 / (1.0 + nmse) + config.lambda * libm::exp(-(complexity as f64) / config.max_length);
    (r, 1.0 / r)
}

/// Coefficient of determination.
///
/// Constant targets have no variance to explain: the result is `1.0` for an
/// exact match and `f64::NEG_INFINITY` otherwise.
pub fn r_squared(predictions: &[f64], targets: &[f64]) -> Result<f64, ScoreError> {
    check_lengths(predictions, targets, 2)?;
    let mean = targets.iter().sum::<f64>() / targets.len() as f64;
    let total: f64 = targets.iter().map(|y| (y - mean) * (y - mean)).sum();
    let residual = sse(predictions, targets);
    if total == 0.0 {
        return Ok(if residual == 0.0 { 1.0 } else { f64::NEG_INFINITY });
    }
    Ok(1.0 - residual / total)
}

/// Number of points `r_squared_trimmed` drops out of `n`.
pub fn trim_count(n: usize, trim_fraction: f64) -> usize {
    libm::floor(trim_fraction * n as f64) as usize
}

/// R² after dropping the `floor(trim_fraction·n)` points with the largest
/// squared error; the target mean is recomputed on what remains.
pub fn r_squared_trimmed(predictions: &[f64], targets: &[f64], trim_fraction: f64) -> Result<f64, ScoreError> {
    if !(0.0..1.0).contains(&trim_fraction) {
        return Err(ScoreError::TrimFraction(trim_fraction));
    }
    check_lengths(predictions, targets, 2)?;
    let drop = trim_count(targets.len(), trim_fraction);
    if drop == 0 {
        return r_squared(predictions, targets);
    }
    let mut order: Vec<usize> = (0..targets.len()).collect();
    let err = |i: usize| (targets[i] - predictions[i]) * (targets[i] - predictions[i]);
    // worst first, ties broken by index
    order.sort_by(|&a, &b| err(b).total_cmp(&err(a)).then(a.cmp(&b)));
    let mut keep: Vec<usize> = order[drop..].to_vec();
    keep.sort_unstable();
    let p: Vec<f64> = keep.iter().map(|&i| predictions[i]).collect();
    let y: Vec<f64> = keep.iter().map(|&i| targets[i]).collect();
    r_squared(&p, &y)
}

/// Full train-set scores for a fitted candidate.
pub fn score(
    predictions: &[f64],
    targets: &[f64],
    complexity: usize,
    config: &ScoreConfig,
) -> Result<Scores, ScoreError> {
    let nmse = nmse(predictions, targets, config.epsilon)?;
    let (fitness, error) = fitness(nmse, complexity, config);
    let r2_train = if targets.len() >= 2 { r_squared(predictions, targets)? } else { f64::NAN };
    Ok(Scores { nmse, fitness, error, r2_train, complexity })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-9;

    #[test]
    fn nmse_examples() {
        assert_eq!(nmse(&[1.0, 2.0], &[1.0, 2.0], 1e-9).unwrap(), 0.0);
        let v = nmse(&[0.0, 0.0], &[2.0, 4.0], 1e-9).unwrap();
        assert!((v - 20.0 / (20.0 + 1e-9)).abs() < TOL);
        assert!((v - 1.0).abs() < 1e-9);
        assert_eq!(nmse(&[0.0, 0.0], &[0.0, 0.0], 1e-9).unwrap(), 0.0);
        assert!(matches!(nmse(&[0.0], &[0.0, 1.0], 1e-9), Err(ScoreError::LengthMismatch { .. })));
    }

    #[test]
    fn fitness_examples() {
        let cfg = ScoreConfig::default();
        // Reference values computed independently: 1 + 0.05*exp(-1), 1 + 0.05*exp(-0.2).
        let (r, err) = fitness(0.0, 30, &cfg);
        assert!((r - 1.018_393_972_058_572).abs() < TOL);
        assert!((err - 1.0 / 1.018_393_972_058_572).abs() < TOL);
        assert!((err - 0.981938).abs() < 1e-6);
        let (r, err) = fitness(0.0, 6, &cfg);
        assert!((r - 1.040_936_537_653_899).abs() < TOL);
        assert!((err - 0.960674).abs() < 1e-6);
        let cfg0 = ScoreConfig { lambda: 0.0, ..cfg };
        assert_eq!(fitness(0.0, 17, &cfg0), (1.0, 1.0));
    }

    #[test]
    fn r_squared_examples() {
        assert_eq!(r_squared(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0);
        assert_eq!(r_squared(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert!((r_squared(&[1.0, 2.0, 4.0], &[1.0, 2.0, 3.0]).unwrap() - 0.5).abs() < TOL);
        assert_eq!(r_squared(&[1.0, 1.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(r_squared(&[1.0, 2.0], &[1.0, 1.0]).unwrap(), f64::NEG_INFINITY);
        assert!(matches!(r_squared(&[1.0], &[1.0]), Err(ScoreError::TooFew { .. })));
    }

    #[test]
    fn trimming() {
        assert_eq!(trim_count(20, 0.05), 1);
        assert_eq!(trim_count(19, 0.05), 0);
        assert_eq!(trim_count(200, 0.05), 10);
        let y: Vec<f64> = (0..20).map(|i| libm::sin(i as f64)).collect();
        let mut p = y.clone();
        p[7] += 100.0;
        assert!(r_squared(&p, &y).unwrap() < 0.0);
        assert_eq!(r_squared_trimmed(&p, &y, 0.05).unwrap(), 1.0);
        let q: Vec<f64> = y.iter().map(|v| v * 0.9).collect();
        assert_eq!(r_squared_trimmed(&q, &y, 0.0).unwrap(), r_squared(&q, &y).unwrap());
        assert!(matches!(r_squared_trimmed(&q, &y, 1.0), Err(ScoreError::TrimFraction(_))));
    }

    #[test]
    fn config_validation() {
        assert!(ScoreConfig::default().validate().is_ok());
        assert!(ScoreConfig { lambda: -1.0, ..Default::default() }.validate().is_err());
        assert!(ScoreConfig { epsilon: 0.0, ..Default::default() }.validate().is_err());
        assert!(ScoreConfig { trim_fraction: 1.0, ..Default::default() }.validate().is_err());
        assert!(ScoreConfig { max_length: 0.0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn score_combines_metrics() {
        let s = score(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], 6, &ScoreConfig::default()).unwrap();
        assert_eq!(s.nmse, 0.0);
        assert_eq!(s.r2_train, 1.0);
        assert!((s.error - 0.960674).abs() < 1e-6);
        assert_eq!(s.complexity, 6);
    }
}
