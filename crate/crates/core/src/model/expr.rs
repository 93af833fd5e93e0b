//! A small rational-expression language in one variable `v`.
//!
//! Grammar (whitespace is ignored):
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := ('-' | '+') unary | power
//! power := atom ('^' unary)?
//! atom  := number | identifier | '(' expr ')'
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-v^2`
//! is `-(v^2)`. Identifiers other than `v` are named parameters, resolved
//! to their (positive) values at parse time.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var,
    Param { name: String, value: f64 },
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
}

impl Expr {
    /// Parses `source`, resolving identifiers against `params`.
    pub fn parse(source: &str, params: &BTreeMap<String, f64>) -> Result<Expr> {
        let tokens = tokenize(source)?;
        let mut parser = Parser {
            tokens,
            pos: 0,
            end: source.len(),
            params,
        };
        let expr = parser.expr()?;
        if let Some(tok) = parser.peek() {
            return Err(Error::Syntax {
                offset: tok.offset,
                message: format!("unexpected {}", tok.kind.describe()),
            });
        }
        Ok(expr)
    }

    pub fn eval(&self, v: f64) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var => v,
            Expr::Param { value, .. } => *value,
            Expr::Neg(a) => -a.eval(v),
            Expr::Add(a, b) => a.eval(v) + b.eval(v),
            Expr::Sub(a, b) => a.eval(v) - b.eval(v),
            Expr::Mul(a, b) => a.eval(v) * b.eval(v),
            Expr::Div(a, b) => a.eval(v) / b.eval(v),
            Expr::Pow(a, b) => {
                let base = a.eval(v);
                let exp = b.eval(v);
                if exp.fract() == 0.0 && exp.abs() <= i32::MAX as f64 {
                    base.powi(exp as i32)
                } else {
                    base.powf(exp)
                }
            }
        }
    }

    /// True when the expression does not depend on `v`.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Const(_) | Expr::Param { .. } => true,
            Expr::Var => false,
            Expr::Neg(a) => a.is_constant(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => a.is_constant() && b.is_constant(),
        }
    }

    /// Symbolic derivative with respect to `v`.
    ///
    /// Powers are only differentiable when the exponent is constant; the
    /// grammar has no logarithm to express the general rule.
    pub fn derivative(&self) -> Result<Expr> {
        Ok(match self {
            Expr::Const(_) | Expr::Param { .. } => Expr::Const(0.0),
            Expr::Var => Expr::Const(1.0),
            Expr::Neg(a) => neg(a.derivative()?),
            Expr::Add(a, b) => add(a.derivative()?, b.derivative()?),
            Expr::Sub(a, b) => sub(a.derivative()?, b.derivative()?),
            Expr::Mul(a, b) => add(
                mul(a.derivative()?, (**b).clone()),
                mul((**a).clone(), b.derivative()?),
            ),
            Expr::Div(a, b) => {
                // (a'b - ab') / b^2
                let num = sub(
                    mul(a.derivative()?, (**b).clone()),
                    mul((**a).clone(), b.derivative()?),
                );
                div(num, pow((**b).clone(), Expr::Const(2.0)))
            }
            Expr::Pow(a, b) => {
                if !b.is_constant() {
                    return Err(Error::NotDifferentiable(format!(
                        "exponent `{b}` depends on v"
                    )));
                }
                let n = b.eval(0.0);
                let lowered = pow((**a).clone(), Expr::Const(n - 1.0));
                mul(mul(Expr::Const(n), lowered), a.derivative()?)
            }
        })
    }
}

fn is_zero(e: &Expr) -> bool {
    matches!(e, Expr::Const(c) if *c == 0.0)
}

fn is_one(e: &Expr) -> bool {
    matches!(e, Expr::Const(c) if *c == 1.0)
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(-c),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        _ if is_zero(&a) => b,
        _ if is_zero(&b) => a,
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x + y),
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        _ if is_zero(&b) => a,
        _ if is_zero(&a) => neg(b),
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x - y),
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        _ if is_zero(&a) || is_zero(&b) => Expr::Const(0.0),
        _ if is_one(&a) => b,
        _ if is_one(&b) => a,
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x * y),
        _ => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) {
        return Expr::Const(0.0);
    }
    if is_one(&b) {
        return a;
    }
    Expr::Div(Box::new(a), Box::new(b))
}

fn pow(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        _ if is_zero(&b) => Expr::Const(1.0),
        _ if is_one(&b) => a,
        _ => Expr::Pow(Box::new(a), Box::new(b)),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => {
                if *c < 0.0 {
                    write!(f, "({c})")
                } else {
                    write!(f, "{c}")
                }
            }
            Expr::Var => write!(f, "v"),
            Expr::Param { name, .. } => write!(f, "{name}"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a} ^ {b})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

impl TokenKind {
    fn describe(&self) -> String {
        match self {
            TokenKind::Number(x) => format!("number {x}"),
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Plus => "`+`".into(),
            TokenKind::Minus => "`-`".into(),
            TokenKind::Star => "`*`".into(),
            TokenKind::Slash => "`/`".into(),
            TokenKind::Caret => "`^`".into(),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    offset: usize,
}

fn tokenize(source: &str) -> Result<Vec<Token>> {
    let bytes = source.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let kind = match c {
            b' ' | b'\t' | b'\r' | b'\n' => {
                i += 1;
                continue;
            }
            b'+' => TokenKind::Plus,
            b'-' => TokenKind::Minus,
            b'*' => TokenKind::Star,
            b'/' => TokenKind::Slash,
            b'^' => TokenKind::Caret,
            b'(' => TokenKind::LParen,
            b')' => TokenKind::RParen,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let text = &source[start..i];
                let value = text.parse::<f64>().map_err(|_| Error::Syntax {
                    offset: start,
                    message: format!("malformed number `{text}`"),
                })?;
                tokens.push(Token {
                    kind: TokenKind::Number(value),
                    offset: start,
                });
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                tokens.push(Token {
                    kind: TokenKind::Ident(source[start..i].to_string()),
                    offset: start,
                });
                continue;
            }
            _ => {
                let ch = source[start..].chars().next().unwrap_or('?');
                return Err(Error::Syntax {
                    offset: start,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        };
        tokens.push(Token {
            kind,
            offset: start,
        });
        i += 1;
    }
    Ok(tokens)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    end: usize,
    params: &'a BTreeMap<String, f64>,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next_offset(&self) -> usize {
        self.peek().map_or(self.end, |t| t.offset)
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek().is_some_and(|t| &t.kind == kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(&TokenKind::Plus) {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(&TokenKind::Minus) {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(&TokenKind::Star) {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(&TokenKind::Slash) {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(&TokenKind::Minus) {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat(&TokenKind::Plus) {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat(&TokenKind::Caret) {
            let exponent = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let offset = self.next_offset();
        let Some(tok) = self.peek().cloned() else {
            return Err(Error::Syntax {
                offset,
                message: "expected operand, found end of input".into(),
            });
        };
        self.pos += 1;
        match tok.kind {
            TokenKind::Number(x) => Ok(Expr::Const(x)),
            TokenKind::Ident(name) if name == "v" => Ok(Expr::Var),
            TokenKind::Ident(name) => match self.params.get(&name) {
                Some(&value) => Ok(Expr::Param { name, value }),
                None => Err(Error::UnknownIdentifier {
                    name,
                    offset: tok.offset,
                }),
            },
            TokenKind::LParen => {
                let inner = self.expr()?;
                if !self.eat(&TokenKind::RParen) {
                    return Err(Error::Syntax {
                        offset: self.next_offset(),
                        message: "expected `)`".into(),
                    });
                }
                Ok(inner)
            }
            other => Err(Error::Syntax {
                offset: tok.offset,
                message: format!("expected operand, found {}", other.describe()),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<Expr> {
        let mut params = BTreeMap::new();
        params.insert("alpha".to_string(), 2.0);
        Expr::parse(s, &params)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(parse("-v^2").unwrap().eval(3.0), -9.0);
        assert_eq!(parse("2^3^2").unwrap().eval(0.0), 512.0);
        assert_eq!(parse("1 - 2 - 3").unwrap().eval(0.0), -4.0);
        assert_eq!(parse("8 / 4 / 2").unwrap().eval(0.0), 1.0);
        assert_eq!(parse("2 * (v + 1)").unwrap().eval(1.0), 4.0);
        assert_eq!(parse("v^-2").unwrap().eval(2.0), 0.25);
        assert_eq!(parse("1.5e1 + alpha").unwrap().eval(0.0), 17.0);
    }

    #[test]
    fn trailing_operator_reports_end_offset() {
        match parse("v + ") {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn syntax_error_positions() {
        assert!(matches!(
            parse("(v + 1"),
            Err(Error::Syntax { offset: 6, .. })
        ));
        assert!(matches!(
            parse("v $ 1"),
            Err(Error::Syntax { offset: 2, .. })
        ));
        assert!(matches!(parse("v 1"), Err(Error::Syntax { offset: 2, .. })));
        assert!(matches!(parse(""), Err(Error::Syntax { offset: 0, .. })));
    }

    #[test]
    fn unknown_identifier() {
        match parse("v + beta") {
            Err(Error::UnknownIdentifier { name, offset }) => {
                assert_eq!(name, "beta");
                assert_eq!(offset, 4);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn derivative_of_rational_expression() {
        let e = parse("alpha/v^2 - 1/v^3").unwrap();
        let d = e.derivative().unwrap();
        for v in [0.5f64, 1.0, 2.0, 3.7] {
            let exact = -4.0 / v.powi(3) + 3.0 / v.powi(4);
            assert!((d.eval(v) - exact).abs() < 1e-13 * exact.abs().max(1.0));
        }
    }

    #[test]
    fn product_and_quotient_rules() {
        let e = parse("(v + 1) * (v - 2) / (v * v + 1)").unwrap();
        let d = e.derivative().unwrap();
        let h = 1e-6;
        for v in [-1.3, 0.2, 2.5] {
            let fd = (e.eval(v + h) - e.eval(v - h)) / (2.0 * h);
            assert!((d.eval(v) - fd).abs() < 1e-8);
        }
    }

    #[test]
    fn variable_exponent_is_not_differentiable() {
        let e = parse("2^v").unwrap();
        assert!(matches!(e.derivative(), Err(Error::NotDifferentiable(_))));
        assert!(parse("v^(1 + alpha)").unwrap().derivative().is_ok());
    }

    #[test]
    fn display_reparses_to_same_values() {
        let e = parse("-v + v^2 / (alpha - 3)").unwrap();
        let printed = e.to_string();
        let again = parse(&printed).unwrap();
        for v in [-2.0, 0.0, 1.5] {
            assert_eq!(e.eval(v), again.eval(v));
        }
    }
}
