use alloc::vec::Vec;

use super::{BinaryOp, Expr};

/// Evaluates `expr` at `point` with placeholders bound left-to-right to
/// `coefficients`.
///
/// Returns `None` whenever any intermediate value is non-finite: domain
/// violations (`log(-1)`, `sqrt(-1)`, negative base with non-integer
/// exponent), division by zero and overflow all land here. Missing
/// coefficients or variables are also `None`.
pub fn evaluate(expr: &Expr, coefficients: &[f64], point: &[f64]) -> Option<f64> {
    let mut slot = 0;
    eval(expr, coefficients, point, &mut slot)
}

/// Evaluates over a row-major point matrix with `dimensionality` columns.
pub fn evaluate_all(expr: &Expr, coefficients: &[f64], points: &[f64], dimensionality: usize) -> Vec<Option<f64>> {
    points.chunks_exact(dimensionality.max(1)).map(|p| evaluate(expr, coefficients, p)).collect()
}

fn eval(expr: &Expr, coefs: &[f64], point: &[f64], slot: &mut usize) -> Option<f64> {
    let v = match expr {
        Expr::Var(i) => *point.get(*i)?,
        Expr::Coef => {
            let v = *coefs.get(*slot)?;
            *slot += 1;
            v
        }
        Expr::Lit(v) => *v,
        Expr::Unary(op, a) => op.apply(eval(a, coefs, point, slot)?),
        Expr::Binary(op, a, b) => {
            let a = eval(a, coefs, point, slot)?;
            let b = eval(b, coefs, point, slot)?;
            match op {
                BinaryOp::Add => a + b,
                BinaryOp::Sub => a - b,
                BinaryOp::Mul => a * b,
                BinaryOp::Div => {
                    if b == 0.0 {
                        return None;
                    }
                    a / b
                }
                BinaryOp::Pow => libm::pow(a, b),
            }
        }
    };
    v.is_finite().then_some(v)
}
