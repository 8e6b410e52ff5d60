//! Tiny expression grammar for user-supplied problem data.
//!
//! Supports sums, differences, products, quotients, integer powers, unary
//! minus, parentheses, the variables `x1`/`x2` (aliases `x`/`y`), the
//! constant `pi`, and the functions `sin` and `cos`. Enough to state
//! polynomial and trigonometric data like
//! `(1 + 0.04*pi^4) * sin(pi*x1) * sin(pi*x2)`.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::problem::ScalarFn;

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("unexpected character `{0}` at position {1}")]
    UnexpectedChar(char, usize),
    #[error("unexpected end of expression")]
    UnexpectedEnd,
    #[error("expected `{0}` at position {1}")]
    Expected(char, usize),
    #[error("unknown identifier `{0}` at position {1}")]
    UnknownIdent(String, usize),
    #[error("exponent must be a nonnegative integer at position {0}")]
    BadExponent(usize),
    #[error("trailing input at position {0}")]
    TrailingInput(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    X1,
    X2,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
}

impl Expr {
    pub fn eval(&self, x1: f64, x2: f64) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::X1 => x1,
            Expr::X2 => x2,
            Expr::Neg(e) => -e.eval(x1, x2),
            Expr::Add(a, b) => a.eval(x1, x2) + b.eval(x1, x2),
            Expr::Sub(a, b) => a.eval(x1, x2) - b.eval(x1, x2),
            Expr::Mul(a, b) => a.eval(x1, x2) * b.eval(x1, x2),
            Expr::Div(a, b) => a.eval(x1, x2) / b.eval(x1, x2),
            Expr::Pow(e, k) => e.eval(x1, x2).powi(*k as i32),
            Expr::Sin(e) => e.eval(x1, x2).sin(),
            Expr::Cos(e) => e.eval(x1, x2).cos(),
        }
    }

    /// Wraps the parsed expression as a shareable scalar function.
    pub fn into_fn(self) -> ScalarFn {
        Arc::new(move |x1, x2| self.eval(x1, x2))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::X1 => write!(f, "x1"),
            Expr::X2 => write!(f, "x2"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(e, k) => write!(f, "{e}^{k}"),
            Expr::Sin(e) => write!(f, "sin({e})"),
            Expr::Cos(e) => write!(f, "cos({e})"),
        }
    }
}

pub fn parse(input: &str) -> Result<Expr, ParseError> {
    let mut p = Parser {
        chars: input.char_indices().collect(),
        pos: 0,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.chars.len() {
        return Err(ParseError::TrailingInput(p.chars[p.pos].0));
    }
    Ok(e)
}

struct Parser {
    chars: Vec<(usize, char)>,
    pos: usize,
}

impl Parser {
    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].1.is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).map(|&(_, c)| c)
    }


    fn expect(&mut self, want: char) -> Result<(), ParseError> {
        match self.peek() {
            Some(c) if c == want => {
                self.pos += 1;
                Ok(())
            }
            Some(_) => Err(ParseError::Expected(want, self.chars[self.pos].0)),
            None => Err(ParseError::UnexpectedEnd),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some('+') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = Expr::Add(Box::new(lhs), Box::new(rhs));
                }
                Some('-') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some('*') => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
                }
                Some('/') => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    lhs = Expr::Div(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some('-') => {
                self.pos += 1;
                let inner = self.factor()?;
                Ok(Expr::Neg(Box::new(inner)))
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek() == Some('^') {
            self.pos += 1;
            let at = self
                .chars
                .get(self.pos)
                .map(|&(i, _)| i)
                .unwrap_or(usize::MAX);
            let mut digits = String::new();
            while let Some(c) = self.peek() {
                if c.is_ascii_digit() {
                    digits.push(c);
                    self.pos += 1;
                } else {
                    break;
                }
            }
            let k: u32 = digits.parse().map_err(|_| ParseError::BadExponent(at))?;
            return Ok(Expr::Pow(Box::new(base), k));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => Err(ParseError::UnexpectedEnd),
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            Some(c) => Err(ParseError::UnexpectedChar(c, self.chars[self.pos].0)),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start_idx = self.pos;
        let at = self.chars[self.pos].0;
        let mut text = String::new();
        let mut seen_e = false;
        while let Some(&(_, c)) = self.chars.get(self.pos) {
            if c.is_ascii_digit() || c == '.' {
                text.push(c);
                self.pos += 1;
            } else if (c == 'e' || c == 'E') && !seen_e {
                // exponent only when followed by a digit or sign
                match self.chars.get(self.pos + 1) {
                    Some(&(_, n)) if n.is_ascii_digit() || n == '+' || n == '-' => {
                        seen_e = true;
                        text.push(c);
                        self.pos += 1;
                        if n == '+' || n == '-' {
                            text.push(n);
                            self.pos += 1;
                        }
                    }
                    _ => break,
                }
            } else {
                break;
            }
        }
        text.parse::<f64>()
            .map(Expr::Const)
            .map_err(|_| ParseError::UnexpectedChar(self.chars[start_idx].1, at))
    }

    fn ident(&mut self) -> Result<Expr, ParseError> {
        let at = self.chars[self.pos].0;
        let mut name = String::new();
        while let Some(&(_, c)) = self.chars.get(self.pos) {
            if c.is_ascii_alphanumeric() || c == '_' {
                name.push(c);
                self.pos += 1;
            } else {
                break;
            }
        }
        match name.as_str() {
            "x1" | "x" => Ok(Expr::X1),
            "x2" | "y" => Ok(Expr::X2),
            "pi" => Ok(Expr::Const(std::f64::consts::PI)),
            "sin" => {
                self.expect('(')?;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(Expr::Sin(Box::new(e)))
            }
            "cos" => {
                self.expect('(')?;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(Expr::Cos(Box::new(e)))
            }
            _ => Err(ParseError::UnknownIdent(name, at)),
        }
    }
}
