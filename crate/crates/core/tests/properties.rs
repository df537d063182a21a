use icsr_core::engine::{run, Candidate, EngineConfig, Origin, Phase, ProposalStatus, Trajectory};
use icsr_core::expr::{canonicalize, complexity, evaluate, parse, render, BinaryOp, Expr, UnaryOp};
use icsr_core::fit::FitResult;
use icsr_core::llm::{BackendError, ChatBackend, CompletionRequest, CompletionResponse};
use icsr_core::score::{fitness, nmse, r_squared, r_squared_trimmed, ScoreConfig, Scores};
use icsr_core::Dataset;
use proptest::prelude::*;
use std::collections::HashSet;

const UNARY: [UnaryOp; 12] = [
    UnaryOp::Neg,
    UnaryOp::Sqrt,
    UnaryOp::Exp,
    UnaryOp::Log,
    UnaryOp::Abs,
    UnaryOp::Sin,
    UnaryOp::Cos,
    UnaryOp::Tan,
    UnaryOp::Sinh,
    UnaryOp::Cosh,
    UnaryOp::Tanh,
    UnaryOp::Erf,
];
const BINARY: [BinaryOp; 5] = [BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div, BinaryOp::Pow];

fn expr_strategy(dimensionality: usize) -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0..dimensionality).prop_map(Expr::Var),
        Just(Expr::Coef),
        prop::sample::select(vec![0.5, 1.0, 2.0, 3.0, 2.5, 0.125]).prop_map(Expr::Lit),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (prop::sample::select(UNARY.to_vec()), inner.clone()).prop_map(|(op, a)| Expr::unary(op, a)),
            (prop::sample::select(BINARY.to_vec()), inner.clone(), inner).prop_map(|(op, a, b)| Expr::binary(op, a, b)),
        ]
    })
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn render_parse_round_trip(e in expr_strategy(2), one_dim in any::<bool>()) {
        let d = if one_dim && e.min_dimensionality() <= 1 { 1 } else { 2 };
        let text = render(&e, d);
        let back = parse(&text, d).map_err(|err| TestCaseError::fail(format!("{text}: {err}")))?;
        prop_assert_eq!(&back, &e, "{}", text);
        prop_assert_eq!(complexity(&back), complexity(&e));
    }

    #[test]
    fn canonical_form_evaluates_the_same(
        e in expr_strategy(2),
        coefs in prop::collection::vec(-2.0f64..2.0, 16),
        point in prop::collection::vec(-2.0f64..2.0, 2),
    ) {
        let m = e.coef_count();
        let coefs = &coefs[..m.min(16)];
        prop_assume!(m <= 16);
        let skeleton = canonicalize(&e);
        let Some(original) = evaluate(&e, coefs, &point) else { return Ok(()) };
        // Skip ill-conditioned points, where reassociating sums or products
        // legitimately changes more than the last few bits.
        let nudged: Vec<f64> = coefs.iter().map(|c| c * (1.0 + 1e-13)).collect();
        let mut shifted = point.clone();
        shifted.iter_mut().for_each(|x| *x *= 1.0 + 1e-13);
        for probe in [evaluate(&e, &nudged, &point), evaluate(&e, coefs, &shifted)] {
            match probe {
                Some(v) if close(v, original, 1e-11) => {}
                _ => return Ok(()),
            }
        }
        let mapped = skeleton.map_coefficients(coefs).expect("bindings defined where the source is");
        prop_assert_eq!(mapped.len(), skeleton.expr.coef_count());
        let canonical = evaluate(&skeleton.expr, &mapped, &point);
        prop_assert!(canonical.is_some_and(|v| close(v, original, 1e-12)), "{} -> {}: {:?} vs {}", render(&e, 2), skeleton.key, canonical, original);
    }

    #[test]
    fn canonical_key_is_stable(e in expr_strategy(2)) {
        let s = canonicalize(&e);
        let again = canonicalize(&s.expr);
        prop_assert_eq!(&again.key, &s.key);
        let d = if e.min_dimensionality() <= 1 { 1 } else { 2 };
        prop_assert_eq!(&canonicalize(&parse(&render(&e, d), d).unwrap()).key, &s.key);
    }

    #[test]
    fn evaluate_is_total(
        e in expr_strategy(2),
        coefs in prop::collection::vec(prop_oneof![any::<f64>(), -1e3f64..1e3], 0..8),
        point in prop::collection::vec(any::<f64>(), 2),
    ) {
        if let Some(v) = evaluate(&e, &coefs, &point) {
            prop_assert!(v.is_finite());
        }
    }

    #[test]
    fn error_grows_with_nmse_and_complexity(
        nmse in 0.0f64..1e6,
        delta in 1e-6f64..1e3,
        c in 0usize..200,
        lambda in 0.0f64..1.0,
    ) {
        let cfg = ScoreConfig { lambda, ..Default::default() };
        let (_, base) = fitness(nmse, c, &cfg);
        let (_, worse_fit) = fitness(nmse + delta, c, &cfg);
        let (_, more_complex) = fitness(nmse, c + 1, &cfg);
        prop_assert!(worse_fit > base);
        prop_assert!(more_complex >= base);
        if lambda > 0.0 {
            prop_assert!(more_complex > base);
        }
    }

    #[test]
    fn r2_never_exceeds_one(
        y in prop::collection::vec(-10.0f64..10.0, 20..60),
        noise in prop::collection::vec(-1.0f64..1.0, 60),
    ) {
        let p: Vec<f64> = y.iter().zip(&noise).map(|(a, n)| a + n).collect();
        let full = r_squared_trimmed(&p, &y, 0.0).unwrap();
        let trimmed = r_squared_trimmed(&p, &y, 0.05).unwrap();
        prop_assert!(full <= 1.0 && trimmed <= 1.0);
        prop_assert_eq!(r_squared(&y, &y).unwrap(), 1.0);
        if noise[..y.len()].iter().any(|n| *n != 0.0) {
            prop_assert!(full < 1.0);
        }
    }

    /// Dropping the worst point raises R² exactly when that point's share
    /// of the squared error is at least its share of the target variance.
    #[test]
    fn trimming_the_worst_point_raises_r2_when_it_dominates_the_error(
        y in prop::collection::vec(-10.0f64..10.0, 20..40),
        noise in prop::collection::vec(-1.0f64..1.0, 40),
        spike in 0.0f64..20.0,
    ) {
        let n = y.len();
        let mut p: Vec<f64> = y.iter().zip(&noise).map(|(a, e)| a + e).collect();
        p[0] += spike;
        let err: Vec<f64> = p.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).collect();
        let worst = (0..n).max_by(|&i, &j| err[i].total_cmp(&err[j])).unwrap();
        let mean = y.iter().sum::<f64>() / n as f64;
        let sst: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
        let sse: f64 = err.iter().sum();
        let sst_drop = (y[worst] - mean) * (y[worst] - mean) * n as f64 / (n - 1) as f64;
        let full = r_squared(&p, &y).unwrap();
        let trimmed = r_squared_trimmed(&p, &y, 0.05).unwrap();
        let error_share = err[worst] / sse;
        let variance_share = sst_drop / sst;
        if error_share > variance_share + 1e-9 {
            prop_assert!(trimmed >= full - 1e-12, "{trimmed} < {full}");
        } else if error_share < variance_share - 1e-9 {
            prop_assert!(trimmed <= full + 1e-12, "{trimmed} > {full}");
        }
    }

    #[test]
    fn nmse_is_scale_invariant(
        y in prop::collection::vec(-10.0f64..10.0, 5..40),
        noise in prop::collection::vec(-1.0f64..1.0, 40),
        scale in prop_oneof![-1e3f64..-1e-3, 1e-3f64..1e3],
    ) {
        prop_assume!(y.iter().any(|v| v.abs() > 1e-3));
        let p: Vec<f64> = y.iter().zip(&noise).map(|(a, e)| a + e).collect();
        let base = nmse(&p, &y, 0.0).unwrap();
        let sp: Vec<f64> = p.iter().map(|v| v * scale).collect();
        let sy: Vec<f64> = y.iter().map(|v| v * scale).collect();
        prop_assert!(close(nmse(&sp, &sy, 0.0).unwrap(), base, 1e-12));
    }
}

/// Above-average error alone is not enough: here the dropped point also
/// carries most of the target variance, so trimming lowers R².
#[test]
fn trimming_can_lower_r2() {
    let y = [0.0, 1.0, 2.0, 10.0];
    let p = [0.5, 0.5, 2.5, 9.0];
    let full = r_squared(&p, &y).unwrap();
    let trimmed = r_squared_trimmed(&p, &y, 0.25).unwrap();
    assert!((full - (1.0 - 1.75 / 62.75)).abs() < 1e-12);
    assert!((trimmed - 0.625).abs() < 1e-12);
}

fn candidate(key: &str, error: f64) -> Candidate {
    let skeleton = canonicalize(&Expr::Coef);
    let skeleton = icsr_core::Skeleton { key: key.to_string(), ..skeleton };
    Candidate {
        raw: key.to_string(),
        skeleton,
        fit: FitResult { coefficients: vec![0.0], sse: 0.0, converged: true, restart: 0, restart_sse: vec![Some(0.0)] },
        scores: Scores { nmse: 0.0, fitness: 1.0 / error, error, r2_train: 0.0, complexity: 1 },
        origin: Origin { phase: Phase::Loop, call: 0 },
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn trajectory_invariants(
        k in 1usize..8,
        steps in prop::collection::vec((0usize..40, 0.5f64..2.0), 500),
    ) {
        let mut t = Trajectory::new(k);
        let mut best = f64::INFINITY;
        for (key, err) in steps {
            t.insert(candidate(&format!("k{key}"), err));
            best = best.min(err);
            let entries = t.entries();
            prop_assert!(entries.len() <= k);
            prop_assert!(entries.windows(2).all(|w| w[0].error() <= w[1].error()));
            let keys: HashSet<&str> = entries.iter().map(|c| c.key()).collect();
            prop_assert_eq!(keys.len(), entries.len());
            prop_assert_eq!(t.best().unwrap().error(), best);
        }
    }
}

/// Emits five random functions from a fixed pool per call.
struct PoolBackend {
    state: u64,
}

const POOL: [&str; 12] = [
    "c*x",
    "c*x + c",
    "x*c",
    "c*x^2 + c*x",
    "c*sin(x)",
    "sin(c*x)*c",
    "c*exp(x)",
    "c*x^3 + c",
    "c*cos(x) + c*x",
    "log(x)",
    "c/x",
    "c*x^2",
];

impl ChatBackend for PoolBackend {
    fn complete(&mut self, _request: &CompletionRequest) -> Result<CompletionResponse, BackendError> {
        let mut text = String::new();
        for i in 0..5 {
            self.state = self.state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let pick = POOL[(self.state >> 33) as usize % POOL.len()];
            text.push_str(&format!("f{}(x) = {pick}\n", i + 1));
        }
        Ok(CompletionResponse { text, ..Default::default() })
    }
}

#[test]
fn engine_fits_each_key_once_and_best_never_worsens() {
    let data = Dataset::from_pairs((0..20).map(|i| {
        let x = 0.1 + i as f64 / 10.0;
        (x, 1.5 * x * x - x)
    }));
    for state in 0..5 {
        let cfg = EngineConfig { early_stop_r2: 2.0, ..Default::default() };
        let record = run(&data, &cfg, PoolBackend { state }).unwrap();
        assert_eq!(record.budget.calls, 60);
        let mut fitted = HashSet::new();
        for call in &record.calls {
            for p in &call.proposals {
                if let ProposalStatus::Accepted { key, .. } | ProposalStatus::FitFailed { key, .. } = &p.status {
                    assert!(fitted.insert(key.clone()), "{key} fitted twice");
                }
            }
        }
        assert_eq!(fitted.len(), record.budget.unique_fits);
        let bests: Vec<f64> = record.calls.iter().filter_map(|c| c.best_error).collect();
        assert!(bests.windows(2).all(|w| w[1] <= w[0]));
        assert!(record.trajectory.len() <= cfg.top_k);
        assert!(record.budget.check(&cfg).is_ok());
    }
}
