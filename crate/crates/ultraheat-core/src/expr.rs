//! The expression language for time-dependent edge weights.
//!
//! Grammar (EBNF), whitespace-insensitive:
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := "-" unary | power
//! power   := atom ("^" integer)*            (left-associative, integer exponent)
//! atom    := number | "t" | "pi" | "e"
//!          | ("sin" | "cos" | "exp") "(" expr ")"
//!          | "(" expr ")"
//! number  := decimal literal with optional fraction and exponent, e.g. 0.5, 1e-3
//! integer := digit+
//! ```
//!
//! Exponents are nonnegative integer literals and `2^3^2` parses as `(2^3)^2`.
//! There is no implicit multiplication.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Maximum nesting depth accepted by the parser. Keeps arbitrary byte input
/// from overflowing the stack.
const MAX_DEPTH: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
}

/// Parsed weight expression in the variable `t`.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Literal(f64),
    Time,
    Pi,
    E,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let mut parser = Parser {
            src: src.as_bytes(),
            pos: 0,
            depth: 0,
        };
        parser.skip_ws();
        let expr = parser.expression()?;
        parser.skip_ws();
        if parser.pos != parser.src.len() {
            return Err(parser.error("unexpected trailing input"));
        }
        Ok(expr)
    }

    /// Standard double-precision evaluation. Division by zero is an error.
    pub fn eval(&self, t: f64) -> Result<f64> {
        Ok(match self {
            Expr::Literal(x) => *x,
            Expr::Time => t,
            Expr::Pi => std::f64::consts::PI,
            Expr::E => std::f64::consts::E,
            Expr::Neg(e) => -e.eval(t)?,
            Expr::Add(a, b) => a.eval(t)? + b.eval(t)?,
            Expr::Sub(a, b) => a.eval(t)? - b.eval(t)?,
            Expr::Mul(a, b) => a.eval(t)? * b.eval(t)?,
            Expr::Div(a, b) => {
                let d = b.eval(t)?;
                if d == 0.0 {
                    return Err(Error::Eval("division by zero".into()));
                }
                a.eval(t)? / d
            }
            Expr::Pow(a, k) => a.eval(t)?.powi(*k as i32),
            Expr::Call(Func::Sin, e) => e.eval(t)?.sin(),
            Expr::Call(Func::Cos, e) => e.eval(t)?.cos(),
            Expr::Call(Func::Exp, e) => e.eval(t)?.exp(),
        })
    }
}

impl FromStr for Expr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Expr::parse(s)
    }
}

/// Fully parenthesized form; reparsing it yields an expression with identical
/// evaluation.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Literal(x) => write!(f, "{x:?}"),
            Expr::Time => write!(f, "t"),
            Expr::Pi => write!(f, "pi"),
            Expr::E => write!(f, "e"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, k) => write!(f, "({a}^{k})"),
            Expr::Call(Func::Sin, e) => write!(f, "sin({e})"),
            Expr::Call(Func::Cos, e) => write!(f, "cos({e})"),
            Expr::Call(Func::Exp, e) => write!(f, "exp({e})"),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    depth: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, message: &str) -> Error {
        Error::Parse {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn consume(&mut self, byte: u8) -> bool {
        if self.peek() == Some(byte) {
            self.pos += 1;
            self.skip_ws();
            true
        } else {
            false
        }
    }

    fn enter(&mut self) -> Result<()> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            Err(self.error("expression nests too deeply"))
        } else {
            Ok(())
        }
    }

    fn expression(&mut self) -> Result<Expr> {
        self.enter()?;
        let mut lhs = self.term()?;
        loop {
            if self.consume(b'+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.consume(b'-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                break;
            }
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.consume(b'*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.consume(b'/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                break;
            }
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        self.enter()?;
        let out = if self.consume(b'-') {
            Expr::Neg(Box::new(self.unary()?))
        } else {
            self.power()?
        };
        self.depth -= 1;
        Ok(out)
    }

    fn power(&mut self) -> Result<Expr> {
        let mut base = self.atom()?;
        while self.consume(b'^') {
            let k = self.integer_exponent()?;
            base = Expr::Pow(Box::new(base), k);
        }
        Ok(base)
    }

    fn integer_exponent(&mut self) -> Result<u32> {
        let start = self.pos;
        while self.peek().is_some_and(|b| b.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.error("expected an integer exponent after '^'"));
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        let k: u32 = text.parse().map_err(|_| Error::Parse {
            offset: start,
            message: "integer exponent out of range".into(),
        })?;
        self.skip_ws();
        Ok(k)
    }

    fn atom(&mut self) -> Result<Expr> {
        self.enter()?;
        let out = match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                self.skip_ws();
                let inner = self.expression()?;
                if !self.consume(b')') {
                    return Err(self.error("expected ')'"));
                }
                inner
            }
            Some(b) if b.is_ascii_digit() || b == b'.' => self.number()?,
            Some(b) if b.is_ascii_alphabetic() => self.identifier()?,
            _ => return Err(self.error("expected a number, identifier or '('")),
        };
        self.depth -= 1;
        Ok(out)
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.peek().is_some_and(|b| b.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.peek() == Some(b'.') {
            self.pos += 1;
            while self.peek().is_some_and(|b| b.is_ascii_digit()) {
                self.pos += 1;
            }
        }
        if matches!(self.peek(), Some(b'e') | Some(b'E')) {
            // Only an exponent when digits (with optional sign) follow;
            // otherwise the 'e' starts an identifier such as the constant e.
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            if self.peek().is_some_and(|b| b.is_ascii_digit()) {
                while self.peek().is_some_and(|b| b.is_ascii_digit()) {
                    self.pos += 1;
                }
            } else {
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii number");
        let value: f64 = text.parse().map_err(|_| Error::Parse {
            offset: start,
            message: format!("invalid number literal '{text}'"),
        })?;
        self.skip_ws();
        Ok(Expr::Literal(value))
    }

    fn identifier(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|b| b.is_ascii_alphanumeric() || b == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii identifier");
        let out = match name {
            "t" => Expr::Time,
            "pi" => Expr::Pi,
            "e" => Expr::E,
            "sin" | "cos" | "exp" => {
                let func = match name {
                    "sin" => Func::Sin,
                    "cos" => Func::Cos,
                    _ => Func::Exp,
                };
                self.skip_ws();
                if !self.consume(b'(') {
                    return Err(self.error("expected '(' after function name"));
                }
                let arg = self.expression()?;
                if !self.consume(b')') {
                    return Err(self.error("expected ')'"));
                }
                return Ok(Expr::Call(func, Box::new(arg)));
            }
            _ => {
                return Err(Error::Parse {
                    offset: start,
                    message: format!("unknown identifier '{name}'"),
                })
            }
        };
        self.skip_ws();
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_literals() {
        assert_eq!(Expr::parse("1").unwrap(), Expr::Literal(1.0));
        assert_eq!(Expr::parse(" 0.25 ").unwrap(), Expr::Literal(0.25));
        assert_eq!(Expr::parse("1e-3").unwrap(), Expr::Literal(1e-3));
    }

    #[test]
    fn precedence_shapes_the_ast() {
        let e = Expr::parse("1 + 0.5*sin(t)").unwrap();
        assert_eq!(
            e,
            Expr::Add(
                Box::new(Expr::Literal(1.0)),
                Box::new(Expr::Mul(
                    Box::new(Expr::Literal(0.5)),
                    Box::new(Expr::Call(Func::Sin, Box::new(Expr::Time)))
                ))
            )
        );
    }

    #[test]
    fn power_is_left_associative_with_integer_exponent() {
        let e = Expr::parse("2^3^2").unwrap();
        assert_eq!(e.eval(0.0).unwrap(), 64.0);
        assert!(Expr::parse("2^t").is_err());
        assert!(Expr::parse("2^-1").is_err());
    }

    #[test]
    fn eval_examples() {
        assert_eq!(Expr::parse("t").unwrap().eval(2.5).unwrap(), 2.5);
        assert_eq!(Expr::parse("1 + t/2").unwrap().eval(1.0).unwrap(), 1.5);
        // Calculator oracle: exp(-1) * cos(pi) = -e^{-1}.
        let v = Expr::parse("exp(-t)*cos(pi*t)").unwrap().eval(1.0).unwrap();
        assert!((v - -(-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn division_by_zero_is_an_error() {
        assert!(matches!(
            Expr::parse("1/(t - t)").unwrap().eval(3.0),
            Err(Error::Eval(_))
        ));
    }

    #[test]
    fn errors_carry_byte_offsets() {
        match Expr::parse("1 + foo") {
            Err(Error::Parse { offset, message }) => {
                assert_eq!(offset, 4);
                assert!(message.contains("foo"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        match Expr::parse("1 + ") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn deep_nesting_is_rejected_not_fatal() {
        let src = "(".repeat(10_000) + "1" + &")".repeat(10_000);
        assert!(Expr::parse(&src).is_err());
    }

    #[test]
    fn identical_source_gives_identical_ast() {
        let a = Expr::parse("exp(-t) * (1 + t^2)").unwrap();
        let b = Expr::parse("exp(-t) * (1 + t^2)").unwrap();
        assert_eq!(a, b);
    }

    fn leaf() -> impl Strategy<Value = Expr> {
        prop_oneof![
            (0.0..10.0f64).prop_map(Expr::Literal),
            Just(Expr::Time),
            Just(Expr::Pi),
            Just(Expr::E),
        ]
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        leaf().prop_recursive(4, 32, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(a.into(), b.into())),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Sub(a.into(), b.into())),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Mul(a.into(), b.into())),
                inner.clone().prop_map(|a| Expr::Neg(a.into())),
                (inner.clone(), 0u32..4).prop_map(|(a, k)| Expr::Pow(a.into(), k)),
                inner.clone().prop_map(|a| Expr::Call(Func::Sin, a.into())),
                inner.clone().prop_map(|a| Expr::Call(Func::Cos, a.into())),
            ]
        })
    }

    proptest! {
        #[test]
        fn parser_never_panics(src in ".*") {
            let _ = Expr::parse(&src);
        }

        #[test]
        fn parser_never_panics_on_ascii_soup(src in "[-+*/^()a-z0-9. ]{0,64}") {
            let _ = Expr::parse(&src);
        }

        #[test]
        fn pretty_print_round_trips(e in arb_expr()) {
            let printed = e.to_string();
            let reparsed = Expr::parse(&printed).expect("printed form must reparse");
            for i in 0..100 {
                let t = i as f64 / 99.0 * 3.0;
                match (e.eval(t), reparsed.eval(t)) {
                    (Ok(a), Ok(b)) => {
                        let scale = a.abs().max(1.0);
                        prop_assert!((a - b).abs() <= 1e-15 * scale);
                    }
                    (Err(_), Err(_)) => {}
                    (a, b) => prop_assert!(false, "eval mismatch: {a:?} vs {b:?}"),
                }
            }
        }
    }
}
