//! Expression language for candidate functional forms.
//!
//! An [`Expr`] is a plain tree over variables, coefficient placeholders and
//! numeric literals. Placeholders carry no index: their slot number is their
//! position in a left-to-right traversal, so `c*x + c` has slots 0 and 1.

mod canon;
mod eval;
mod parse;
mod render;

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use canon::{canonicalize, Skeleton};
pub use eval::{evaluate, evaluate_all};
pub use parse::{parse, parse_with, ParseError, ParseErrorKind};
pub use render::{format_sig, render, render_fitted};

/// Unary operators, including negation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnaryOp {
    Neg,
    Sqrt,
    Exp,
    Log,
    Abs,
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Erf,
}

impl UnaryOp {
    /// Function name as written in expressions. Negation has none.
    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Exp => "exp",
            UnaryOp::Log => "log",
            UnaryOp::Abs => "abs",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Tan => "tan",
            UnaryOp::Sinh => "sinh",
            UnaryOp::Cosh => "cosh",
            UnaryOp::Tanh => "tanh",
            UnaryOp::Erf => "erf",
        }
    }

    pub(crate) fn apply(self, v: f64) -> f64 {
        match self {
            UnaryOp::Neg => -v,
            UnaryOp::Sqrt => libm::sqrt(v),
            UnaryOp::Exp => libm::exp(v),
            UnaryOp::Log => libm::log(v),
            UnaryOp::Abs => libm::fabs(v),
            UnaryOp::Sin => libm::sin(v),
            UnaryOp::Cos => libm::cos(v),
            UnaryOp::Tan => libm::tan(v),
            UnaryOp::Sinh => libm::sinh(v),
            UnaryOp::Cosh => libm::cosh(v),
            UnaryOp::Tanh => libm::tanh(v),
            UnaryOp::Erf => libm::erf(v),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Pow => "^",
        }
    }
}

/// Expression tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    /// Input variable by index, `0..dimensionality`.
    Var(usize),
    /// Tunable coefficient slot.
    Coef,
    /// Numeric literal as written.
    Lit(f64),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn unary(op: UnaryOp, arg: Expr) -> Expr {
        Expr::Unary(op, Box::new(arg))
    }

    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    /// Number of coefficient placeholders.
    pub fn coef_count(&self) -> usize {
        match self {
            Expr::Coef => 1,
            Expr::Var(_) | Expr::Lit(_) => 0,
            Expr::Unary(_, a) => a.coef_count(),
            Expr::Binary(_, a, b) => a.coef_count() + b.coef_count(),
        }
    }

    /// Highest variable index used plus one, or 0 when the tree has no variables.
    pub fn min_dimensionality(&self) -> usize {
        match self {
            Expr::Var(i) => i + 1,
            Expr::Coef | Expr::Lit(_) => 0,
            Expr::Unary(_, a) => a.min_dimensionality(),
            Expr::Binary(_, a, b) => a.min_dimensionality().max(b.min_dimensionality()),
        }
    }

    pub fn has_var(&self) -> bool {
        match self {
            Expr::Var(_) => true,
            Expr::Coef | Expr::Lit(_) => false,
            Expr::Unary(_, a) => a.has_var(),
            Expr::Binary(_, a, b) => a.has_var() || b.has_var(),
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Expr::Var(_) | Expr::Coef | Expr::Lit(_))
    }
}

/// How nodes of an expression tree are counted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComplexityConvention {
    /// Every node counts 1: operators, variables, placeholders and literals.
    #[default]
    AllNodes,
    /// Only operator (internal) nodes count; leaves are free.
    Operators,
}

/// Node count of `expr` under the default [`ComplexityConvention::AllNodes`].
pub fn complexity(expr: &Expr) -> usize {
    complexity_with(expr, ComplexityConvention::AllNodes)
}

pub fn complexity_with(expr: &Expr, convention: ComplexityConvention) -> usize {
    let leaf = match convention {
        ComplexityConvention::AllNodes => 1,
        ComplexityConvention::Operators => 0,
    };
    match expr {
        Expr::Var(_) | Expr::Coef | Expr::Lit(_) => leaf,
        Expr::Unary(_, a) => 1 + complexity_with(a, convention),
        Expr::Binary(_, a, b) => 1 + complexity_with(a, convention) + complexity_with(b, convention),
    }
}

/// Function names the parser accepts, mapped to operators.
///
/// Defaults to the seed-prompt vocabulary plus `erf`. Extra names (aliases such
/// as `ln`) can be registered with [`Vocabulary::with_alias`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    functions: Vec<(String, UnaryOp)>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        let ops = [
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
        Vocabulary { functions: ops.iter().map(|op| (String::from(op.name()), *op)).collect() }
    }
}

impl Vocabulary {
    pub fn with_alias(mut self, name: &str, op: UnaryOp) -> Self {
        self.functions.retain(|(n, _)| n != name);
        self.functions.push((String::from(name), op));
        self
    }

    pub fn lookup(&self, name: &str) -> Option<UnaryOp> {
        self.functions.iter().find(|(n, _)| n == name).map(|(_, op)| *op)
    }
}

/// Variable names for a dimensionality: `x` for one input, `x1`, `x2` otherwise.
pub fn variable_names(dimensionality: usize) -> Vec<String> {
    if dimensionality == 1 {
        alloc::vec![String::from("x")]
    } else {
        (1..=dimensionality).map(|i| alloc::format!("x{i}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complexity_examples() {
        assert_eq!(complexity(&parse("sqrt(x)", 1).unwrap()), 2);
        assert_eq!(complexity(&parse("x^3 + x^2 + x", 1).unwrap()), 9);
        assert_eq!(complexity(&parse("c", 1).unwrap()), 1);
        assert_eq!(complexity(&parse("c*sin(x) + c", 1).unwrap()), 6);
        assert_eq!(complexity(&parse("-x", 1).unwrap()), 2);
    }

    #[test]
    fn operator_convention_skips_leaves() {
        let e = parse("x^3 + x^2 + x", 1).unwrap();
        assert_eq!(complexity_with(&e, ComplexityConvention::Operators), 4);
        assert_eq!(complexity_with(&Expr::Coef, ComplexityConvention::Operators), 0);
    }

    #[test]
    fn vocabulary_alias() {
        let vocab = Vocabulary::default().with_alias("ln", UnaryOp::Log);
        let e = parse_with("ln(x)", 1, &vocab).unwrap();
        assert_eq!(e, Expr::unary(UnaryOp::Log, Expr::Var(0)));
        assert!(parse("ln(x)", 1).is_err());
    }
}
