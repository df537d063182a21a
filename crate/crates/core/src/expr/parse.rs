//! Recursive-descent parser for model-written expressions.
//!
//! Precedence, loosest first: `+ -`, `* /`, unary minus, `^`. Power is
//! right-associative and its exponent may carry a unary minus (`x^-2`).
//! `**` is accepted as a synonym for `^`.

use alloc::string::String;

use thiserror::Error;

use super::{BinaryOp, Expr, UnaryOp, Vocabulary};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{kind} at byte {pos}")]
pub struct ParseError {
    pub pos: usize,
    pub kind: ParseErrorKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected character {0:?}")]
    UnexpectedChar(char),
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("unexpected token {0:?}")]
    UnexpectedToken(String),
    #[error("unbalanced parentheses")]
    Unbalanced,
    #[error("unknown identifier {0:?}")]
    UnknownIdentifier(String),
    #[error("variable {0:?} is not valid for this dimensionality")]
    WrongVariable(String),
    #[error("unsupported dimensionality {0}")]
    Dimensionality(usize),
    #[error("malformed number {0:?}")]
    BadNumber(String),
}

#[derive(Clone, Debug, PartialEq)]
enum Tok<'a> {
    Num(f64),
    Ident(&'a str),
    Op(char),
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn next(&mut self) -> Result<(usize, Tok<'a>), ParseError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && (bytes[self.pos] as char).is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(&b) = bytes.get(self.pos) else {
            return Ok((start, Tok::End));
        };
        let ch = b as char;
        if ch.is_ascii_digit() || ch == '.' {
            return self.number(start).map(|t| (start, t));
        }
        if ch.is_ascii_alphabetic() || ch == '_' {
            while self.pos < bytes.len() {
                let c = bytes[self.pos] as char;
                if c.is_ascii_alphanumeric() || c == '_' {
                    self.pos += 1;
                } else {
                    break;
                }
            }
            return Ok((start, Tok::Ident(&self.src[start..self.pos])));
        }
        self.pos += 1;
        let tok = match ch {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '*' if bytes.get(self.pos) == Some(&b'*') => {
                self.pos += 1;
                Tok::Op('^')
            }
            '+' | '-' | '*' | '/' | '^' => Tok::Op(ch),
            _ => {
                // Report the full (possibly multi-byte) character.
                let c = self.src[start..].chars().next().unwrap_or(ch);
                return Err(ParseError { pos: start, kind: ParseErrorKind::UnexpectedChar(c) });
            }
        };
        Ok((start, tok))
    }

    fn number(&mut self, start: usize) -> Result<Tok<'a>, ParseError> {
        let bytes = self.src.as_bytes();
        let digits = |lx: &mut Self| {
            while lx.pos < bytes.len() && bytes[lx.pos].is_ascii_digit() {
                lx.pos += 1;
            }
        };
        digits(self);
        if bytes.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(bytes.get(self.pos), Some(b'e') | Some(b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(bytes.get(self.pos), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            if bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
                digits(self);
            } else {
                // `2exp(x)` style: the `e` starts an identifier, not an exponent.
                self.pos = save;
            }
        }
        let text = &self.src[start..self.pos];
        text.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(Tok::Num)
            .ok_or_else(|| ParseError { pos: start, kind: ParseErrorKind::BadNumber(String::from(text)) })
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    peeked: Option<(usize, Tok<'a>)>,
    dimensionality: usize,
    vocab: &'a Vocabulary,
    depth: usize,
}

/// Guards against stack exhaustion on adversarial input.
const MAX_DEPTH: usize = 256;

impl<'a> Parser<'a> {
    fn peek(&mut self) -> Result<&(usize, Tok<'a>), ParseError> {
        if self.peeked.is_none() {
            self.peeked = Some(self.lexer.next()?);
        }
        Ok(self.peeked.as_ref().unwrap())
    }

    fn bump(&mut self) -> Result<(usize, Tok<'a>), ParseError> {
        match self.peeked.take() {
            Some(t) => Ok(t),
            None => self.lexer.next(),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek()?.1 {
                Tok::Op('+') => BinaryOp::Add,
                Tok::Op('-') => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek()?.1 {
                Tok::Op('*') => BinaryOp::Mul,
                Tok::Op('/') => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            let pos = self.peek()?.0;
            return Err(ParseError { pos, kind: ParseErrorKind::Unbalanced });
        }
        let out = match self.peek()?.1 {
            Tok::Op('-') => {
                self.bump()?;
                self.unary().map(|e| Expr::unary(UnaryOp::Neg, e))
            }
            Tok::Op('+') => {
                self.bump()?;
                self.unary()
            }
            _ => self.power(),
        };
        self.depth -= 1;
        out
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.peek()?.1 == Tok::Op('^') {
            self.bump()?;
            let exponent = self.unary()?;
            return Ok(Expr::binary(BinaryOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let (pos, tok) = self.bump()?;
        match tok {
            Tok::Num(v) => Ok(Expr::Lit(v)),
            Tok::LParen => {
                let inner = self.expr()?;
                self.close_paren(pos)?;
                Ok(inner)
            }
            Tok::Ident(name) => self.identifier(pos, name),
            Tok::End => Err(ParseError { pos, kind: ParseErrorKind::UnexpectedEnd }),
            Tok::RParen => Err(ParseError { pos, kind: ParseErrorKind::Unbalanced }),
            Tok::Op(c) => Err(ParseError { pos, kind: ParseErrorKind::UnexpectedToken(String::from(c)) }),
        }
    }

    fn close_paren(&mut self, open: usize) -> Result<(), ParseError> {
        match self.bump()? {
            (_, Tok::RParen) => Ok(()),
            (_, Tok::End) => Err(ParseError { pos: open, kind: ParseErrorKind::Unbalanced }),
            (pos, t) => Err(ParseError { pos, kind: ParseErrorKind::UnexpectedToken(token_text(&t)) }),
        }
    }

    fn identifier(&mut self, pos: usize, name: &str) -> Result<Expr, ParseError> {
        if is_coefficient(name) {
            return Ok(Expr::Coef);
        }
        if let Some(index) = variable_index(name) {
            return match index {
                Some(i) if self.dimensionality >= 2 && i < self.dimensionality => Ok(Expr::Var(i)),
                None if self.dimensionality == 1 => Ok(Expr::Var(0)),
                _ => Err(ParseError { pos, kind: ParseErrorKind::WrongVariable(String::from(name)) }),
            };
        }
        if let Some(op) = self.vocab.lookup(name) {
            let (open, tok) = self.bump()?;
            if tok != Tok::LParen {
                return Err(ParseError { pos: open, kind: ParseErrorKind::UnexpectedToken(token_text(&tok)) });
            }
            let arg = self.expr()?;
            self.close_paren(open)?;
            return Ok(Expr::unary(op, arg));
        }
        Err(ParseError { pos, kind: ParseErrorKind::UnknownIdentifier(String::from(name)) })
    }
}

fn token_text(t: &Tok<'_>) -> String {
    match t {
        Tok::Num(v) => alloc::format!("{v}"),
        Tok::Ident(s) => String::from(*s),
        Tok::Op(c) => String::from(*c),
        Tok::LParen => String::from("("),
        Tok::RParen => String::from(")"),
        Tok::End => String::new(),
    }
}

/// `c`, `c1`, `c_2`, ... all denote a fresh placeholder.
fn is_coefficient(name: &str) -> bool {
    let Some(rest) = name.strip_prefix('c') else { return false };
    let rest = rest.strip_prefix('_').unwrap_or(rest);
    (rest.is_empty() && !name.ends_with('_')) || (!rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()))
}

/// `Some(None)` for bare `x`, `Some(Some(i))` for `x<i+1>` / `x_<i+1>`.
fn variable_index(name: &str) -> Option<Option<usize>> {
    let rest = name.strip_prefix('x')?;
    if rest.is_empty() {
        return Some(None);
    }
    let rest = rest.strip_prefix('_').unwrap_or(rest);
    let n: usize = rest.parse().ok()?;
    if n == 0 || rest.starts_with('0') {
        return None;
    }
    Some(Some(n - 1))
}

/// Parse with the default vocabulary.
pub fn parse(text: &str, dimensionality: usize) -> Result<Expr, ParseError> {
    parse_with(text, dimensionality, &Vocabulary::default())
}

pub fn parse_with(text: &str, dimensionality: usize, vocab: &Vocabulary) -> Result<Expr, ParseError> {
    if !(1..=2).contains(&dimensionality) {
        return Err(ParseError { pos: 0, kind: ParseErrorKind::Dimensionality(dimensionality) });
    }
    let mut p = Parser { lexer: Lexer { src: text, pos: 0 }, peeked: None, dimensionality, vocab, depth: 0 };
    let e = p.expr()?;
    match p.bump()? {
        (_, Tok::End) => Ok(e),
        (pos, Tok::RParen) => Err(ParseError { pos, kind: ParseErrorKind::Unbalanced }),
        (pos, t) => Err(ParseError { pos, kind: ParseErrorKind::UnexpectedToken(token_text(&t)) }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::complexity;

    fn v(i: usize) -> Expr {
        Expr::Var(i)
    }

    #[test]
    fn sine_with_offset() {
        let e = parse("c*sin(x) + c", 1).unwrap();
        let want = Expr::binary(
            BinaryOp::Add,
            Expr::binary(BinaryOp::Mul, Expr::Coef, Expr::unary(UnaryOp::Sin, v(0))),
            Expr::Coef,
        );
        assert_eq!(e, want);
        assert_eq!(complexity(&e), 6);
        assert_eq!(e.coef_count(), 2);
    }

    #[test]
    fn single_variable() {
        let e = parse("x", 1).unwrap();
        assert_eq!(e, v(0));
        assert_eq!(complexity(&e), 1);
        assert_eq!(e.coef_count(), 0);
    }

    #[test]
    fn two_dimensional_power() {
        let e = parse("x1^x2", 2).unwrap();
        assert_eq!(e, Expr::binary(BinaryOp::Pow, v(0), v(1)));
        assert_eq!(complexity(&e), 3);
        assert_eq!(parse("x_1^x_2", 2).unwrap(), e);
    }

    #[test]
    fn precedence() {
        // -x^2 is -(x^2)
        let e = parse("-x^2", 1).unwrap();
        assert_eq!(e, Expr::unary(UnaryOp::Neg, Expr::binary(BinaryOp::Pow, v(0), Expr::Lit(2.0))));
        // right-associative power
        let e = parse("x^2^3", 1).unwrap();
        assert_eq!(e, Expr::binary(BinaryOp::Pow, v(0), Expr::binary(BinaryOp::Pow, Expr::Lit(2.0), Expr::Lit(3.0))));
        // left-associative subtraction and division
        let e = parse("x - c - x", 1).unwrap();
        assert_eq!(e, Expr::binary(BinaryOp::Sub, Expr::binary(BinaryOp::Sub, v(0), Expr::Coef), v(0)));
        let e = parse("x / c * x", 1).unwrap();
        assert_eq!(e, Expr::binary(BinaryOp::Mul, Expr::binary(BinaryOp::Div, v(0), Expr::Coef), v(0)));
        // unary minus binds tighter than *
        let e = parse("-c*x", 1).unwrap();
        assert_eq!(e, Expr::binary(BinaryOp::Mul, Expr::unary(UnaryOp::Neg, Expr::Coef), v(0)));
        assert_eq!(parse("x**2", 1).unwrap(), parse("x^2", 1).unwrap());
        assert_eq!(parse("x^-c", 1).unwrap(), Expr::binary(BinaryOp::Pow, v(0), Expr::unary(UnaryOp::Neg, Expr::Coef)));
    }

    #[test]
    fn literals() {
        assert_eq!(parse("2.5", 1).unwrap(), Expr::Lit(2.5));
        assert_eq!(parse(".5", 1).unwrap(), Expr::Lit(0.5));
        assert_eq!(parse("1e-3", 1).unwrap(), Expr::Lit(1e-3));
        assert_eq!(parse("2exp(x)", 1).unwrap_err().kind, ParseErrorKind::UnexpectedToken("exp".into()));
    }

    #[test]
    fn numbered_coefficients_are_placeholders() {
        assert_eq!(parse("c1*x + c_2", 1).unwrap(), parse("c*x + c", 1).unwrap());
        assert!(parse("cos", 1).is_err());
    }

    #[test]
    fn errors_carry_position() {
        let err = parse("(x + c", 1).unwrap_err();
        assert_eq!(err, ParseError { pos: 0, kind: ParseErrorKind::Unbalanced });
        let err = parse("x + c)", 1).unwrap_err();
        assert_eq!(err, ParseError { pos: 5, kind: ParseErrorKind::Unbalanced });
        let err = parse("c*foo(x)", 1).unwrap_err();
        assert_eq!(err, ParseError { pos: 2, kind: ParseErrorKind::UnknownIdentifier("foo".into()) });
        let err = parse("x1 + c", 1).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::WrongVariable("x1".into()));
        let err = parse("x + c", 2).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::WrongVariable("x".into()));
        let err = parse("x3", 2).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::WrongVariable("x3".into()));
        assert_eq!(parse("x +", 1).unwrap_err().kind, ParseErrorKind::UnexpectedEnd);
        assert_eq!(parse("x $ 2", 1).unwrap_err().kind, ParseErrorKind::UnexpectedChar('$'));
        assert_eq!(parse("", 1).unwrap_err().kind, ParseErrorKind::UnexpectedEnd);
        assert_eq!(parse("x", 3).unwrap_err().kind, ParseErrorKind::Dimensionality(3));
    }

    #[test]
    fn deep_nesting_is_rejected_not_overflowing() {
        let text = alloc::format!("{}x", "-".repeat(10_000));
        assert!(parse(&text, 1).is_err());
    }
}
