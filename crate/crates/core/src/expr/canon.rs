//! Canonical skeletons: equivalence classes of functional forms.
//!
//! Rewrites, applied bottom-up:
//!
//! * every subtree without variables collapses into one placeholder, so
//!   literals become placeholders and `c+c`, `c*c`, `exp(c)`, `-c` all become `c`;
//! * integer literal exponents (`x^2`, `x^-1`) stay literal, they are part of
//!   the form rather than tunable constants;
//! * `+`/`-` chains and `*`/`/` chains are flattened, their constant operands
//!   merged into a single placeholder, the rest sorted by rendered text;
//! * a negated product with a constant factor absorbs the sign into that factor.
//!
//! Each canonical placeholder keeps a *binding*: an expression over the
//! original slots (as `Var(i)`) and literals that yields its value. Bindings
//! give warm-start hints and map original coefficients to canonical ones.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{evaluate, render, BinaryOp, Expr, UnaryOp};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Skeleton {
    /// Canonical tree; placeholders numbered left-to-right.
    pub expr: Expr,
    /// One binding per placeholder of `expr`, over the source tree's slots.
    pub bindings: Vec<Expr>,
    /// Equivalence-class key.
    pub key: String,
}

impl Skeleton {
    pub fn slots(&self) -> usize {
        self.bindings.len()
    }

    /// Initial values implied by literals in the source expression. Slots that
    /// depend on a source placeholder have no hint.
    pub fn warm_start(&self) -> Vec<Option<f64>> {
        self.bindings.iter().map(|b| if b.has_var() { None } else { evaluate(b, &[], &[]) }).collect()
    }

    /// Canonical coefficients equivalent to `source` coefficients of the
    /// original expression. `None` if a binding is undefined there.
    pub fn map_coefficients(&self, source: &[f64]) -> Option<Vec<f64>> {
        self.bindings.iter().map(|b| evaluate(b, &[], source)).collect()
    }
}

enum Node {
    Var(usize),
    Lit(f64),
    Const(Expr),
    Unary(UnaryOp, Box<Node>),
    Binary(BinaryOp, Box<Node>, Box<Node>),
}

impl Node {
    fn binary(op: BinaryOp, a: Node, b: Node) -> Node {
        Node::Binary(op, Box::new(a), Box::new(b))
    }

    fn into_parts(self, bindings: &mut Vec<Expr>) -> Expr {
        match self {
            Node::Var(i) => Expr::Var(i),
            Node::Lit(v) => Expr::Lit(v),
            Node::Const(b) => {
                bindings.push(b);
                Expr::Coef
            }
            Node::Unary(op, a) => Expr::unary(op, a.into_parts(bindings)),
            Node::Binary(op, a, b) => {
                let a = a.into_parts(bindings);
                let b = b.into_parts(bindings);
                Expr::binary(op, a, b)
            }
        }
    }

    fn shape(&self) -> Expr {
        match self {
            Node::Var(i) => Expr::Var(*i),
            Node::Lit(v) => Expr::Lit(*v),
            Node::Const(_) => Expr::Coef,
            Node::Unary(op, a) => Expr::unary(*op, a.shape()),
            Node::Binary(op, a, b) => Expr::binary(*op, a.shape(), b.shape()),
        }
    }

    fn sort_key(&self) -> String {
        render(&self.shape(), 2)
    }
}

pub fn canonicalize(expr: &Expr) -> Skeleton {
    let mut slot = 0;
    let node = canon(expr, &mut slot);
    let mut bindings = Vec::new();
    let expr = node.into_parts(&mut bindings);
    let dims = if expr.min_dimensionality() <= 1 { 1 } else { 2 };
    let key = render(&expr, dims);
    Skeleton { expr, bindings, key }
}

fn integer_exponent(e: &Expr) -> Option<f64> {
    match e {
        Expr::Lit(v) if libm::trunc(*v) == *v => Some(*v),
        Expr::Unary(UnaryOp::Neg, a) => integer_exponent(a).map(|v| -v),
        _ => None,
    }
}

fn canon(e: &Expr, slot: &mut usize) -> Node {
    match e {
        Expr::Var(i) => Node::Var(*i),
        Expr::Coef => {
            *slot += 1;
            Node::Const(Expr::Var(*slot - 1))
        }
        Expr::Lit(v) => Node::Const(Expr::Lit(*v)),
        Expr::Unary(UnaryOp::Neg, _) | Expr::Binary(BinaryOp::Add | BinaryOp::Sub, ..) => sum(e, slot),
        Expr::Unary(op, a) => match canon(a, slot) {
            Node::Const(b) => Node::Const(Expr::unary(*op, b)),
            a => Node::Unary(*op, Box::new(a)),
        },
        Expr::Binary(BinaryOp::Mul | BinaryOp::Div, ..) => product(e, slot),
        Expr::Binary(BinaryOp::Pow, a, b) => {
            let base = canon(a, slot);
            let exponent = match integer_exponent(b) {
                Some(v) => Node::Lit(v),
                None => canon(b, slot),
            };
            match (base, exponent) {
                (Node::Const(x), Node::Const(y)) => Node::Const(Expr::binary(BinaryOp::Pow, x, y)),
                (Node::Const(x), Node::Lit(v)) => Node::Const(Expr::binary(BinaryOp::Pow, x, Expr::Lit(v))),
                (x, y) => Node::binary(BinaryOp::Pow, x, y),
            }
        }
    }
}

fn collect_terms<'a>(e: &'a Expr, positive: bool, out: &mut Vec<(bool, &'a Expr)>) {
    match e {
        Expr::Binary(BinaryOp::Add, a, b) => {
            collect_terms(a, positive, out);
            collect_terms(b, positive, out);
        }
        Expr::Binary(BinaryOp::Sub, a, b) => {
            collect_terms(a, positive, out);
            collect_terms(b, !positive, out);
        }
        Expr::Unary(UnaryOp::Neg, a) => collect_terms(a, !positive, out),
        _ => out.push((positive, e)),
    }
}

/// Flips the sign of the leading constant factor of a canonical product.
fn negate_leading_const(node: &mut Node) -> bool {
    match node {
        Node::Const(b) => {
            let inner = core::mem::replace(b, Expr::Lit(0.0));
            *b = Expr::unary(UnaryOp::Neg, inner);
            true
        }
        Node::Binary(BinaryOp::Mul | BinaryOp::Div, a, _) => negate_leading_const(a),
        _ => false,
    }
}

/// Folds signed constant bindings with `combine`/`invert`; `lead_inverse`
/// handles an inverted first operand (`-b` for sums, `1/b` for products).
fn merge_consts(
    parts: Vec<(bool, Expr)>,
    combine: BinaryOp,
    invert: BinaryOp,
    lead_inverse: fn(Expr) -> Expr,
) -> Option<Expr> {
    let mut acc: Option<Expr> = None;
    for (positive, b) in parts {
        acc = Some(match (acc, positive) {
            (None, true) => b,
            (None, false) => lead_inverse(b),
            (Some(a), true) => Expr::binary(combine, a, b),
            (Some(a), false) => Expr::binary(invert, a, b),
        });
    }
    acc
}

fn sum(e: &Expr, slot: &mut usize) -> Node {
    let mut raw = Vec::new();
    collect_terms(e, true, &mut raw);
    let mut consts = Vec::new();
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (positive, t) in raw {
        let (positive, node) = strip_negations(positive, canon(t, slot));
        match node {
            Node::Const(b) => consts.push((positive, b)),
            mut n => {
                if positive || negate_leading_const(&mut n) {
                    pos.push(n);
                } else {
                    neg.push(n);
                }
            }
        }
    }
    let constant = merge_consts(consts, BinaryOp::Add, BinaryOp::Sub, |b| Expr::unary(UnaryOp::Neg, b));
    if pos.is_empty() && neg.is_empty() {
        return Node::Const(constant.expect("chain has at least one term"));
    }
    sort_nodes(&mut pos);
    sort_nodes(&mut neg);
    let mut pos = pos.into_iter();
    let mut neg = neg.into_iter();
    let mut constant = constant.map(Node::Const);
    let mut acc = match (pos.next(), constant.take()) {
        (Some(p), c) => {
            constant = c;
            p
        }
        (None, Some(c)) => c,
        (None, None) => Node::Unary(UnaryOp::Neg, Box::new(neg.next().expect("non-empty"))),
    };
    for p in pos {
        acc = Node::binary(BinaryOp::Add, acc, p);
    }
    for n in neg {
        acc = Node::binary(BinaryOp::Sub, acc, n);
    }
    if let Some(c) = constant {
        acc = Node::binary(BinaryOp::Add, acc, c);
    }
    acc
}

/// Peels negations a nested chain returned, flipping `positive` per layer.
fn strip_negations(mut positive: bool, mut node: Node) -> (bool, Node) {
    while let Node::Unary(UnaryOp::Neg, inner) = node {
        positive = !positive;
        node = *inner;
    }
    (positive, node)
}

fn collect_factors<'a>(e: &'a Expr, numerator: bool, negations: &mut usize, out: &mut Vec<(bool, &'a Expr)>) {
    match e {
        Expr::Binary(BinaryOp::Mul, a, b) => {
            collect_factors(a, numerator, negations, out);
            collect_factors(b, numerator, negations, out);
        }
        Expr::Binary(BinaryOp::Div, a, b) => {
            collect_factors(a, numerator, negations, out);
            collect_factors(b, !numerator, negations, out);
        }
        Expr::Unary(UnaryOp::Neg, a) => {
            *negations += 1;
            collect_factors(a, numerator, negations, out);
        }
        _ => out.push((numerator, e)),
    }
}

fn product(e: &Expr, slot: &mut usize) -> Node {
    let mut raw = Vec::new();
    let mut negations = 0;
    collect_factors(e, true, &mut negations, &mut raw);
    let mut consts = Vec::new();
    let mut num = Vec::new();
    let mut den = Vec::new();
    for (numerator, f) in raw {
        let (sign, node) = strip_negations(true, canon(f, slot));
        if !sign {
            negations += 1;
        }
        match node {
            Node::Const(b) => consts.push((numerator, b)),
            n if numerator => num.push(n),
            n => den.push(n),
        }
    }
    let mut constant =
        merge_consts(consts, BinaryOp::Mul, BinaryOp::Div, |b| Expr::binary(BinaryOp::Div, Expr::Lit(1.0), b));
    let negative = negations % 2 == 1;
    if negative {
        if let Some(c) = constant.take() {
            constant = Some(Expr::unary(UnaryOp::Neg, c));
        }
    }
    if num.is_empty() && den.is_empty() {
        return Node::Const(constant.expect("chain has at least one factor"));
    }
    sort_nodes(&mut num);
    sort_nodes(&mut den);
    let mut factors = constant.map(Node::Const).into_iter().chain(num);
    let mut acc = factors.next();
    for f in factors {
        acc = Some(match acc {
            Some(a) => Node::binary(BinaryOp::Mul, a, f),
            None => f,
        });
    }
    let mut acc = match acc {
        Some(a) => a,
        // only denominators left: 1/x style with the 1 already folded away
        None => Node::Const(Expr::Lit(1.0)),
    };
    let mut den = den.into_iter();
    if let Some(first) = den.next() {
        let d = den.fold(first, |a, f| Node::binary(BinaryOp::Mul, a, f));
        acc = Node::binary(BinaryOp::Div, acc, d);
    }
    let has_const = matches!(&acc, Node::Const(_)) || leading_is_const(&acc);
    if negative && !has_const {
        acc = Node::Unary(UnaryOp::Neg, Box::new(acc));
    }
    acc
}

fn leading_is_const(node: &Node) -> bool {
    match node {
        Node::Const(_) => true,
        Node::Binary(BinaryOp::Mul | BinaryOp::Div, a, _) => leading_is_const(a),
        _ => false,
    }
}

fn sort_nodes(nodes: &mut Vec<Node>) {
    let mut keyed: Vec<(String, Node)> = nodes.drain(..).map(|n| (n.sort_key(), n)).collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    nodes.extend(keyed.into_iter().map(|(_, n)| n));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn key(text: &str) -> String {
        canonicalize(&parse(text, 1).unwrap()).key
    }

    #[test]
    fn operand_order_is_irrelevant() {
        assert_eq!(key("c + c*x"), key("c*x + c"));
        assert_eq!(key("x*c + sin(x)"), key("sin(x) + c*x"));
        assert_eq!(key("x*c*x"), key("c*x*x"));
    }

    #[test]
    fn literals_become_hinted_placeholders() {
        let s = canonicalize(&parse("2.5*x", 1).unwrap());
        assert_eq!(s.key, "c*x");
        assert_eq!(s.warm_start(), alloc::vec![Some(2.5)]);
    }

    #[test]
    fn placeholder_absorption() {
        assert_eq!(key("c*c*x"), "c*x");
        assert_eq!(key("c + c + x"), "x + c");
        assert_eq!(key("exp(c)*x"), "c*x");
        assert_eq!(key("-c*x"), "c*x");
        assert_eq!(key("x/c"), "c*x");
        assert_eq!(key("c/c*x - c + c"), "c*x + c");
        assert_eq!(key("x - c*x"), key("c*x + x"));
        assert_eq!(key("c - x"), "c - x");
        assert_eq!(key("c^2*x"), "c*x");
    }

    #[test]
    fn integer_exponents_stay_structural() {
        let s = canonicalize(&parse("3*x^2 + x^-1", 1).unwrap());
        assert_eq!(s.key, "c*x^2 + x^(-1)");
        assert_eq!(s.warm_start(), alloc::vec![Some(3.0)]);
        let s = canonicalize(&parse("x^0.426", 1).unwrap());
        assert_eq!(s.key, "x^c");
        assert_eq!(s.warm_start(), alloc::vec![Some(0.426)]);
    }

    #[test]
    fn constant_folding_keeps_hints() {
        let s = canonicalize(&parse("2*3*x + c", 1).unwrap());
        assert_eq!(s.key, "c*x + c");
        assert_eq!(s.warm_start(), alloc::vec![Some(6.0), None]);
        let s = canonicalize(&parse("(c*2)*x", 1).unwrap());
        assert_eq!(s.warm_start(), alloc::vec![None]);
        assert_eq!(s.map_coefficients(&[1.5]), Some(alloc::vec![3.0]));
    }

    #[test]
    fn pure_constant() {
        let s = canonicalize(&parse("c + c", 1).unwrap());
        assert_eq!(s.key, "c");
        assert_eq!(s.map_coefficients(&[1.0, 2.0]), Some(alloc::vec![3.0]));
    }

    #[test]
    fn negated_products_without_constants() {
        assert_eq!(key("-(x*sin(x))"), "-(sin(x)*x)");
        assert_eq!(key("(-x)*(-x)"), "x*x");
        assert_eq!(key("-x - sin(x)"), "-sin(x) - x");
    }

    #[test]
    fn two_dimensional_key() {
        let s = canonicalize(&parse("x2*c + x1", 2).unwrap());
        assert_eq!(s.key, "c*x2 + x1");
    }
}
