//! Coefficient fitting by multi-start Levenberg–Marquardt.
//!
//! Residuals are `y − f(x; c)`; the Jacobian comes from central differences
//! with step `max(1e-6, 1e-6·|c|)`. A point where the model is undefined
//! contributes a fixed residual of [`UNDEFINED_PENALTY`] while iterating, so a
//! restart can walk out of a bad region, but the returned coefficients must
//! be defined on every point.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Dataset;
use crate::expr::{evaluate, Expr, Skeleton};

pub const UNDEFINED_PENALTY: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub restarts: usize,
    pub max_iterations: usize,
    /// Start restart 0 from literal values found in the source expression.
    pub warm_start: bool,
    pub gradient_tolerance: f64,
    pub step_tolerance: f64,
    pub residual_tolerance: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            restarts: 5,
            max_iterations: 200,
            warm_start: true,
            gradient_tolerance: 1e-8,
            step_tolerance: 1e-8,
            residual_tolerance: 1e-8,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<(), FitError> {
        if self.restarts == 0 {
            return Err(FitError::Config("restarts must be >= 1"));
        }
        let tolerances = [self.gradient_tolerance, self.step_tolerance, self.residual_tolerance];
        if tolerances.iter().any(|t| !(*t > 0.0)) {
            return Err(FitError::Config("tolerances must be > 0"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum FitError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("model is undefined on {undefined} of {total} training points for every restart")]
    Undefined { undefined: usize, total: usize },
    #[error("invalid fit configuration: {0}")]
    Config(&'static str),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub coefficients: Vec<f64>,
    /// Sum of squared residuals at `coefficients`.
    pub sse: f64,
    pub converged: bool,
    /// Index of the winning restart.
    pub restart: usize,
    /// Final SSE of every restart, `None` where the restart ended on
    /// coefficients undefined somewhere on the data.
    pub restart_sse: Vec<Option<f64>>,
}

impl FitResult {
    pub fn restarts_run(&self) -> usize {
        self.restart_sse.len()
    }
}

/// Residual vector with the penalty substituted for undefined points.
/// Returns the residuals and how many points were undefined.
pub fn residuals(expr: &Expr, coefficients: &[f64], data: &Dataset) -> (Vec<f64>, usize) {
    let mut undefined = 0;
    let r = data
        .points()
        .zip(&data.y)
        .map(|(p, y)| match evaluate(expr, coefficients, p) {
            Some(v) => y - v,
            None => {
                undefined += 1;
                UNDEFINED_PENALTY
            }
        })
        .collect();
    (r, undefined)
}

/// Central-difference Jacobian of the residuals, row-major `n × m`.
pub fn jacobian(expr: &Expr, coefficients: &[f64], data: &Dataset) -> Vec<f64> {
    let n = data.len();
    let m = coefficients.len();
    let mut jac = vec![0.0; n * m];
    let mut probe = coefficients.to_vec();
    for j in 0..m {
        let c = coefficients[j];
        let h = f64::max(1e-6, 1e-6 * libm::fabs(c));
        probe[j] = c + h;
        let (plus, _) = residuals(expr, &probe, data);
        probe[j] = c - h;
        let (minus, _) = residuals(expr, &probe, data);
        probe[j] = c;
        for i in 0..n {
            jac[i * m + j] = (plus[i] - minus[i]) / (2.0 * h);
        }
    }
    jac
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Solves `a·x = b` for symmetric positive definite `a` (row-major `m × m`).
fn cholesky_solve(a: &[f64], b: &[f64], m: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..=i {
            let mut s = a[i * m + j];
            for k in 0..j {
                s -= l[i * m + k] * l[j * m + k];
            }
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l[i * m + i] = libm::sqrt(s);
            } else {
                l[i * m + j] = s / l[j * m + j];
            }
        }
    }
    let mut y = vec![0.0; m];
    for i in 0..m {
        let s: f64 = (0..i).map(|k| l[i * m + k] * y[k]).sum();
        y[i] = (b[i] - s) / l[i * m + i];
    }
    let mut x = vec![0.0; m];
    for i in (0..m).rev() {
        let s: f64 = (i + 1..m).map(|k| l[k * m + i] * x[k]).sum();
        x[i] = (y[i] - s) / l[i * m + i];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

struct Outcome {
    coefficients: Vec<f64>,
    converged: bool,
}

fn levenberg_marquardt(expr: &Expr, data: &Dataset, init: Vec<f64>, config: &FitConfig) -> Outcome {
    let m = init.len();
    let n = data.len();
    let mut c = init;
    let (mut r, _) = residuals(expr, &c, data);
    let mut cost = sum_sq(&r);
    let mut mu = -1.0;
    let mut nu = 2.0;

    for _ in 0..config.max_iterations {
        if cost == 0.0 {
            return Outcome { coefficients: c, converged: true };
        }
        let jac = jacobian(expr, &c, data);
        let mut a = vec![0.0; m * m];
        let mut g = vec![0.0; m];
        for i in 0..n {
            let row = &jac[i * m..(i + 1) * m];
            for j in 0..m {
                g[j] += row[j] * r[i];
                for k in 0..=j {
                    a[j * m + k] += row[j] * row[k];
                }
            }
        }
        for j in 0..m {
            for k in 0..j {
                a[k * m + j] = a[j * m + k];
            }
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Outcome { coefficients: c, converged: false };
        }
        if g.iter().fold(0.0f64, |acc, v| acc.max(libm::fabs(*v))) <= config.gradient_tolerance {
            return Outcome { coefficients: c, converged: true };
        }
        let diag: Vec<f64> = (0..m).map(|j| a[j * m + j].max(1e-12)).collect();
        if mu < 0.0 {
            mu = 1e-3 * diag.iter().fold(0.0f64, |acc, v| acc.max(*v));
        }

        let mut accepted = false;
        while !accepted {
            let mut damped = a.clone();
            for j in 0..m {
                damped[j * m + j] += mu * diag[j];
            }
            let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
            let Some(step) = cholesky_solve(&damped, &rhs, m) else {
                mu *= nu;
                nu *= 2.0;
                if mu > 1e30 {
                    return Outcome { coefficients: c, converged: false };
                }
                continue;
            };
            let step_norm = libm::sqrt(sum_sq(&step));
            let c_norm = libm::sqrt(sum_sq(&c));
            if step_norm <= config.step_tolerance * (c_norm + config.step_tolerance) {
                return Outcome { coefficients: c, converged: true };
            }
            let trial: Vec<f64> = c.iter().zip(&step).map(|(a, b)| a + b).collect();
            let (trial_r, _) = residuals(expr, &trial, data);
            let trial_cost = sum_sq(&trial_r);
            let predicted: f64 = (0..m).map(|j| step[j] * (mu * diag[j] * step[j] - g[j])).sum();
            if trial_cost.is_finite() && trial_cost < cost && predicted > 0.0 {
                let rho = (cost - trial_cost) / predicted;
                let reduction = cost - trial_cost;
                c = trial;
                r = trial_r;
                let previous = cost;
                cost = trial_cost;
                let t = 2.0 * rho - 1.0;
                mu *= f64::max(1.0 / 3.0, 1.0 - t * t * t);
                nu = 2.0;
                accepted = true;
                if reduction <= config.residual_tolerance * previous {
                    return Outcome { coefficients: c, converged: true };
                }
            } else {
                mu *= nu;
                nu *= 2.0;
                if mu > 1e30 {
                    return Outcome { coefficients: c, converged: false };
                }
            }
        }
    }
    Outcome { coefficients: c, converged: false }
}

/// Fits `skeleton`'s placeholders to `data`.
///
/// Restart 0 starts from the skeleton's warm-start hints where present (when
/// enabled); every other slot and restart draws from a standard normal. The
/// restart with the lowest SSE among those defined on every point wins.
pub fn fit<R: Rng + ?Sized>(
    skeleton: &Skeleton,
    data: &Dataset,
    config: &FitConfig,
    rng: &mut R,
) -> Result<FitResult, FitError> {
    fit_expr(&skeleton.expr, &skeleton.warm_start(), data, config, rng)
}

/// As [`fit`], for a bare expression with explicit hints (one per slot).
pub fn fit_expr<R: Rng + ?Sized>(
    expr: &Expr,
    hints: &[Option<f64>],
    data: &Dataset,
    config: &FitConfig,
    rng: &mut R,
) -> Result<FitResult, FitError> {
    if data.is_empty() {
        return Err(FitError::EmptyDataset);
    }
    let m = expr.coef_count();
    if m == 0 {
        let (r, undefined) = residuals(expr, &[], data);
        if undefined > 0 {
            return Err(FitError::Undefined { undefined, total: data.len() });
        }
        return Ok(FitResult {
            coefficients: Vec::new(),
            sse: sum_sq(&r),
            converged: true,
            restart: 0,
            restart_sse: Vec::new(),
        });
    }

    let mut best: Option<(usize, Outcome, f64)> = None;
    let mut restart_sse = Vec::with_capacity(config.restarts);
    let mut fewest_undefined = usize::MAX;
    for restart in 0..config.restarts.max(1) {
        let init: Vec<f64> = (0..m)
            .map(|j| match hints.get(j).copied().flatten() {
                Some(v) if restart == 0 && config.warm_start => v,
                _ => rng.sample(StandardNormal),
            })
            .collect();
        let outcome = levenberg_marquardt(expr, data, init, config);
        let (r, undefined) = residuals(expr, &outcome.coefficients, data);
        fewest_undefined = fewest_undefined.min(undefined);
        let sse = if undefined == 0 && outcome.coefficients.iter().all(|c| c.is_finite()) {
            sum_sq(&r)
        } else {
            f64::INFINITY
        };
        restart_sse.push(sse.is_finite().then_some(sse));
        if sse.is_finite() && best.as_ref().is_none_or(|(_, _, s)| sse < *s) {
            best = Some((restart, outcome, sse));
        }
    }
    match best {
        Some((restart, outcome, sse)) => Ok(FitResult {
            coefficients: outcome.coefficients,
            sse,
            converged: outcome.converged,
            restart,
            restart_sse,
        }),
        None => Err(FitError::Undefined { undefined: fewest_undefined, total: data.len() }),
    }
}
