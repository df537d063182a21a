use alloc::format;
use alloc::string::String;

use super::{BinaryOp, Expr, UnaryOp};

/// Renders a skeleton; placeholders print as `c`.
///
/// Variables are named for `dimensionality` (`x`, or `x1`, `x2`). The output
/// parses back to a structurally identical tree.
pub fn render(expr: &Expr, dimensionality: usize) -> String {
    let mut w = Writer { coefs: None, slot: 0, one_dim: dimensionality <= 1, out: String::new() };
    w.expr(expr);
    w.out
}

/// Renders with placeholders substituted by `coefficients` at six significant
/// digits. Slots past the end of `coefficients` print as `c`.
pub fn render_fitted(expr: &Expr, coefficients: &[f64], dimensionality: usize) -> String {
    let mut w = Writer { coefs: Some(coefficients), slot: 0, one_dim: dimensionality <= 1, out: String::new() };
    w.expr(expr);
    w.out
}

/// Formats `value` with `digits` significant digits, keeping trailing zeros
/// (`2` -> `2.00000`). Very large or small magnitudes switch to exponent form.
pub fn format_sig(value: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if !value.is_finite() {
        return format!("{value}");
    }
    if value == 0.0 {
        return format!("{:.*}", digits - 1, 0.0);
    }
    let mut exp = libm::floor(libm::log10(libm::fabs(value))) as i32;
    for _ in 0..2 {
        if exp < -5 || exp >= digits as i32 {
            return format!("{:.*e}", digits - 1, value);
        }
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        let s = format!("{value:.decimals$}");
        // rounding may carry into a new leading digit (9.999996 -> 10.0000)
        let rounded: f64 = s.parse().unwrap_or(value);
        if libm::fabs(rounded) >= libm::pow(10.0, f64::from(exp + 1)) {
            exp += 1;
            continue;
        }
        return s;
    }
    format!("{:.*e}", digits - 1, value)
}

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Binary(BinaryOp::Add | BinaryOp::Sub, ..) => 1,
        Expr::Binary(BinaryOp::Mul | BinaryOp::Div, ..) => 2,
        Expr::Unary(UnaryOp::Neg, _) => 3,
        Expr::Binary(BinaryOp::Pow, ..) => 4,
        Expr::Lit(v) if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) => 0,
        _ => 5,
    }
}

fn is_neg(e: &Expr) -> bool {
    matches!(e, Expr::Unary(UnaryOp::Neg, _))
}

struct Writer<'a> {
    coefs: Option<&'a [f64]>,
    slot: usize,
    one_dim: bool,
    out: String,
}

impl Writer<'_> {
    fn child(&mut self, e: &Expr, parens: bool) {
        // negative literals bring their own parentheses
        if parens && precedence(e) != 0 {
            self.out.push('(');
            self.expr(e);
            self.out.push(')');
        } else {
            self.expr(e);
        }
    }

    fn expr(&mut self, e: &Expr) {
        match e {
            Expr::Var(i) => {
                if self.one_dim {
                    self.out.push('x');
                } else {
                    self.out.push_str(&format!("x{}", i + 1));
                }
            }
            Expr::Coef => {
                match self.coefs.and_then(|c| c.get(self.slot)) {
                    Some(v) if *v < 0.0 => {
                        self.out.push('(');
                        self.out.push_str(&format_sig(*v, 6));
                        self.out.push(')');
                    }
                    Some(v) => self.out.push_str(&format_sig(*v, 6)),
                    None => self.out.push('c'),
                }
                self.slot += 1;
            }
            Expr::Lit(v) => {
                if precedence(e) == 0 {
                    self.out.push_str(&format!("({v})"));
                } else {
                    self.out.push_str(&format!("{v}"));
                }
            }
            Expr::Unary(UnaryOp::Neg, a) => {
                self.out.push('-');
                self.child(a, precedence(a) < 3 || is_neg(a));
            }
            Expr::Unary(op, a) => {
                self.out.push_str(op.name());
                self.out.push('(');
                self.expr(a);
                self.out.push(')');
            }
            Expr::Binary(op, a, b) => {
                let (left_parens, right_parens) = match op {
                    BinaryOp::Add | BinaryOp::Sub => (precedence(a) < 1, precedence(b) <= 1 || is_neg(b)),
                    BinaryOp::Mul | BinaryOp::Div => (precedence(a) < 2, precedence(b) <= 2 || is_neg(b)),
                    BinaryOp::Pow => (precedence(a) < 5, precedence(b) < 4),
                };
                self.child(a, left_parens);
                if matches!(op, BinaryOp::Add | BinaryOp::Sub) {
                    self.out.push(' ');
                    self.out.push_str(op.symbol());
                    self.out.push(' ');
                } else {
                    self.out.push_str(op.symbol());
                }
                self.child(b, right_parens);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn examples() {
        let e = parse("c*x + c", 1).unwrap();
        assert_eq!(render(&e, 1), "c*x + c");
        assert_eq!(render_fitted(&e, &[2.0, 1.0], 1), "2.00000*x + 1.00000");
        assert_eq!(render(&parse("x1^x2", 2).unwrap(), 2), "x1^x2");
    }

    #[test]
    fn parenthesization() {
        for (src, want) in [
            ("(x + c)*x", "(x + c)*x"),
            ("x - (x - c)", "x - (x - c)"),
            ("x/(c*x)", "x/(c*x)"),
            ("(x^2)^3", "(x^2)^3"),
            ("x^2^3", "x^2^3"),
            ("(-x)^2", "(-x)^2"),
            ("-x^2", "-x^2"),
            ("x - -x", "x - (-x)"),
            ("-(x + c)", "-(x + c)"),
            ("--x", "-(-x)"),
            ("x^-c", "x^(-c)"),
            ("sin(x*c)/c", "sin(x*c)/c"),
        ] {
            let e = parse(src, 1).unwrap();
            let r = render(&e, 1);
            assert_eq!(r, want, "{src}");
            assert_eq!(parse(&r, 1).unwrap(), e, "{src}");
        }
    }

    #[test]
    fn negative_fitted_coefficients_are_parenthesized() {
        let e = parse("c*x + c", 1).unwrap();
        assert_eq!(render_fitted(&e, &[-3.0, 0.5], 1), "(-3.00000)*x + 0.500000");
    }

    #[test]
    fn significant_digits() {
        assert_eq!(format_sig(2.0, 6), "2.00000");
        assert_eq!(format_sig(0.981938, 6), "0.981938");
        assert_eq!(format_sig(123456.7, 6), "123457");
        assert_eq!(format_sig(9.999996, 6), "10.0000");
        assert_eq!(format_sig(0.0, 6), "0.00000");
        assert_eq!(format_sig(1.5e-9, 3), "1.50e-9");
        assert_eq!(format_sig(-42.0, 3), "-42.0");
        assert_eq!(format_sig(2.5e12, 6), "2.50000e12");
    }
}
