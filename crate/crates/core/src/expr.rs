//! Integer arithmetic expressions describing the public function `f` and the
//! post-processing map `h` of an approximation.
//!
//! The grammar is deliberately small: integer literals, identifiers, unary
//! minus, `+`, `-`, `*` and parentheses. There is no division, so evaluation
//! over the integers is always defined and exact.
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary ("*" unary)*
//! unary   := "-" unary | primary
//! primary := INT | IDENT | "(" expr ")"
//! ```

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};

/// Abstract syntax tree of an integer expression.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Lit(i64),
    Var(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
}

/// How intermediate values are represented during evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Arithmetic {
    /// Checked 64-bit arithmetic; overflow is an error.
    #[default]
    Fixed,
    /// Arbitrary-precision intermediates; only the final value must fit in 64 bits.
    Wide,
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Int(i64),
    Ident(String),
    Plus,
    Minus,
    Star,
    LParen,
    RParen,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '+' => {
                out.push((pos, Token::Plus));
                i += 1;
            }
            '-' => {
                out.push((pos, Token::Minus));
                i += 1;
            }
            '*' => {
                out.push((pos, Token::Star));
                i += 1;
            }
            '(' => {
                out.push((pos, Token::LParen));
                i += 1;
            }
            ')' => {
                out.push((pos, Token::RParen));
                i += 1;
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].1.is_ascii_digit() {
                    i += 1;
                }
                let digits: String = chars[start..i].iter().map(|&(_, c)| c).collect();
                let value = digits.parse::<i64>().map_err(|_| Error::Syntax {
                    pos,
                    msg: format!("integer literal {digits} does not fit in 64 bits"),
                })?;
                out.push((pos, Token::Int(value)));
            }
            c if c.is_ascii_alphabetic() => {
                let start = i;
                while i < chars.len() && (chars[i].1.is_ascii_alphanumeric() || chars[i].1 == '_') {
                    i += 1;
                }
                let name: String = chars[start..i].iter().map(|&(_, c)| c).collect();
                out.push((pos, Token::Ident(name)));
            }
            other => return Err(Error::UnknownToken { pos, token: other }),
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    idx: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.idx).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.tokens
            .get(self.idx)
            .map(|(p, _)| *p)
            .unwrap_or(self.end)
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.idx += 1;
                    let rhs = self.term()?;
                    lhs = Expr::Add(Box::new(lhs), Box::new(rhs));
                }
                Some(Token::Minus) => {
                    self.idx += 1;
                    let rhs = self.term()?;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(Token::Star) = self.peek() {
            self.idx += 1;
            let rhs = self.unary()?;
            lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if let Some(Token::Minus) = self.peek() {
            self.idx += 1;
            let inner = self.unary()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr> {
        let pos = self.pos();
        match self.peek().cloned() {
            Some(Token::Int(v)) => {
                self.idx += 1;
                Ok(Expr::Lit(v))
            }
            Some(Token::Ident(name)) => {
                self.idx += 1;
                Ok(Expr::Var(name))
            }
            Some(Token::LParen) => {
                self.idx += 1;
                let inner = self.expr()?;
                match self.peek() {
                    Some(Token::RParen) => {
                        self.idx += 1;
                        Ok(inner)
                    }
                    _ => Err(Error::Syntax {
                        pos: self.pos(),
                        msg: "expected `)`".into(),
                    }),
                }
            }
            Some(tok) => Err(Error::Syntax {
                pos,
                msg: format!("unexpected token {tok:?}"),
            }),
            None => Err(Error::Syntax {
                pos,
                msg: "unexpected end of input".into(),
            }),
        }
    }
}

/// Parses an expression.
pub fn parse(text: &str) -> Result<Expr> {
    let tokens = tokenize(text)?;
    let mut parser = Parser {
        tokens,
        idx: 0,
        end: text.len(),
    };
    let expr = parser.expr()?;
    if parser.idx != parser.tokens.len() {
        return Err(Error::Syntax {
            pos: parser.pos(),
            msg: "trailing input after expression".into(),
        });
    }
    Ok(expr)
}

impl std::str::FromStr for Expr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse(s)
    }
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    /// Names of the variables occurring in the expression.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Lit(_) => {}
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Neg(e) => e.collect_vars(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// Replaces every occurrence of `name` with `with`.
    pub fn substitute(&self, name: &str, with: &Expr) -> Expr {
        match self {
            Expr::Lit(v) => Expr::Lit(*v),
            Expr::Var(v) if v == name => with.clone(),
            Expr::Var(v) => Expr::Var(v.clone()),
            Expr::Neg(e) => Expr::Neg(Box::new(e.substitute(name, with))),
            Expr::Add(a, b) => Expr::Add(
                Box::new(a.substitute(name, with)),
                Box::new(b.substitute(name, with)),
            ),
            Expr::Sub(a, b) => Expr::Sub(
                Box::new(a.substitute(name, with)),
                Box::new(b.substitute(name, with)),
            ),
            Expr::Mul(a, b) => Expr::Mul(
                Box::new(a.substitute(name, with)),
                Box::new(b.substitute(name, with)),
            ),
        }
    }

    /// Exact evaluation with checked 64-bit arithmetic.
    pub fn eval(&self, env: &HashMap<String, i64>) -> Result<i64> {
        match self {
            Expr::Lit(v) => Ok(*v),
            Expr::Var(v) => env
                .get(v)
                .copied()
                .ok_or_else(|| Error::UnboundVariable(v.clone())),
            Expr::Neg(e) => e.eval(env)?.checked_neg().ok_or_else(|| self.overflow()),
            Expr::Add(a, b) => a
                .eval(env)?
                .checked_add(b.eval(env)?)
                .ok_or_else(|| self.overflow()),
            Expr::Sub(a, b) => a
                .eval(env)?
                .checked_sub(b.eval(env)?)
                .ok_or_else(|| self.overflow()),
            Expr::Mul(a, b) => a
                .eval(env)?
                .checked_mul(b.eval(env)?)
                .ok_or_else(|| self.overflow()),
        }
    }

    /// Exact evaluation in arbitrary precision.
    pub fn eval_big(&self, env: &HashMap<String, i64>) -> Result<BigInt> {
        Ok(match self {
            Expr::Lit(v) => BigInt::from(*v),
            Expr::Var(v) => BigInt::from(
                *env.get(v)
                    .ok_or_else(|| Error::UnboundVariable(v.clone()))?,
            ),
            Expr::Neg(e) => -e.eval_big(env)?,
            Expr::Add(a, b) => a.eval_big(env)? + b.eval_big(env)?,
            Expr::Sub(a, b) => a.eval_big(env)? - b.eval_big(env)?,
            Expr::Mul(a, b) => a.eval_big(env)? * b.eval_big(env)?,
        })
    }

    fn overflow(&self) -> Error {
        Error::Overflow(self.to_string())
    }

    /// Interval analysis over box-shaped variable ranges.
    ///
    /// Returns the range of the root together with whether every
    /// intermediate node stays within `i64`.
    pub fn interval(&self, ranges: &HashMap<String, (i64, i64)>) -> Result<IntervalBounds> {
        let mut fits = true;
        let (lo, hi) = self.interval_rec(ranges, &mut fits)?;
        Ok(IntervalBounds {
            lo,
            hi,
            intermediates_fit: fits,
        })
    }

    fn interval_rec(
        &self,
        ranges: &HashMap<String, (i64, i64)>,
        fits: &mut bool,
    ) -> Result<(BigInt, BigInt)> {
        let (lo, hi) = match self {
            Expr::Lit(v) => (BigInt::from(*v), BigInt::from(*v)),
            Expr::Var(v) => {
                let &(a, b) = ranges
                    .get(v)
                    .ok_or_else(|| Error::UnboundVariable(v.clone()))?;
                (BigInt::from(a), BigInt::from(b))
            }
            Expr::Neg(e) => {
                let (a, b) = e.interval_rec(ranges, fits)?;
                (-b, -a)
            }
            Expr::Add(x, y) => {
                let (a, b) = x.interval_rec(ranges, fits)?;
                let (c, d) = y.interval_rec(ranges, fits)?;
                (a + c, b + d)
            }
            Expr::Sub(x, y) => {
                let (a, b) = x.interval_rec(ranges, fits)?;
                let (c, d) = y.interval_rec(ranges, fits)?;
                (a - d, b - c)
            }
            Expr::Mul(x, y) => {
                let (a, b) = x.interval_rec(ranges, fits)?;
                let (c, d) = y.interval_rec(ranges, fits)?;
                let products = [&a * &c, &a * &d, &b * &c, &b * &d];
                let lo = products.iter().min().cloned().unwrap_or_default();
                let hi = products.iter().max().cloned().unwrap_or_default();
                (lo, hi)
            }
        };
        if lo.to_i64().is_none() || hi.to_i64().is_none() {
            *fits = false;
        }
        Ok((lo, hi))
    }

    /// Compiles the expression against a fixed slot layout for fast repeated
    /// evaluation. Every free variable must appear in `slots`.
    pub fn compile(&self, slots: &[String], arithmetic: Arithmetic) -> Result<CompiledExpr> {
        let mut code = Vec::new();
        self.emit(slots, &mut code)?;
        Ok(CompiledExpr {
            code,
            arithmetic,
            text: self.to_string(),
        })
    }

    fn emit(&self, slots: &[String], code: &mut Vec<Op>) -> Result<()> {
        match self {
            Expr::Lit(v) => code.push(Op::Const(*v)),
            Expr::Var(v) => {
                let slot = slots
                    .iter()
                    .position(|s| s == v)
                    .ok_or_else(|| Error::UnboundVariable(v.clone()))?;
                code.push(Op::Load(slot));
            }
            Expr::Neg(e) => {
                e.emit(slots, code)?;
                code.push(Op::Neg);
            }
            Expr::Add(a, b) => {
                a.emit(slots, code)?;
                b.emit(slots, code)?;
                code.push(Op::Add);
            }
            Expr::Sub(a, b) => {
                a.emit(slots, code)?;
                b.emit(slots, code)?;
                code.push(Op::Sub);
            }
            Expr::Mul(a, b) => {
                a.emit(slots, code)?;
                b.emit(slots, code)?;
                code.push(Op::Mul);
            }
        }
        Ok(())
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Lit(v) if *v < 0 => 3,
            Expr::Lit(_) | Expr::Var(_) => 4,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let paren = self.precedence() < min;
        if paren {
            f.write_str("(")?;
        }
        match self {
            Expr::Lit(v) => write!(f, "{v}")?,
            Expr::Var(v) => f.write_str(v)?,
            Expr::Neg(e) => {
                f.write_str("-")?;
                e.fmt_prec(f, 3)?;
            }
            Expr::Add(a, b) => {
                a.fmt_prec(f, 1)?;
                f.write_str(" + ")?;
                b.fmt_prec(f, 2)?;
            }
            Expr::Sub(a, b) => {
                a.fmt_prec(f, 1)?;
                f.write_str(" - ")?;
                b.fmt_prec(f, 2)?;
            }
            Expr::Mul(a, b) => {
                a.fmt_prec(f, 2)?;
                f.write_str("*")?;
                b.fmt_prec(f, 3)?;
            }
        }
        if paren {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// Result of [`Expr::interval`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntervalBounds {
    pub lo: BigInt,
    pub hi: BigInt,
    pub intermediates_fit: bool,
}

impl IntervalBounds {
    pub fn root_fits(&self) -> bool {
        self.lo.to_i64().is_some() && self.hi.to_i64().is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    Const(i64),
    Load(usize),
    Neg,
    Add,
    Sub,
    Mul,
}

/// Stack-machine form of an [`Expr`] bound to a slot layout.
#[derive(Debug, Clone)]
pub struct CompiledExpr {
    code: Vec<Op>,
    arithmetic: Arithmetic,
    text: String,
}

impl CompiledExpr {
    pub fn eval(&self, slots: &[i64]) -> Result<i64> {
        match self.arithmetic {
            Arithmetic::Fixed => self.eval_fixed(slots),
            Arithmetic::Wide => self.eval_wide(slots),
        }
    }

    fn eval_fixed(&self, slots: &[i64]) -> Result<i64> {
        let mut stack: Vec<i64> = Vec::with_capacity(8);
        for op in &self.code {
            let v = match *op {
                Op::Const(c) => Some(c),
                Op::Load(s) => Some(slots[s]),
                Op::Neg => {
                    let a = stack.pop().expect("well-formed code");
                    a.checked_neg()
                }
                Op::Add | Op::Sub | Op::Mul => {
                    let b = stack.pop().expect("well-formed code");
                    let a = stack.pop().expect("well-formed code");
                    match op {
                        Op::Add => a.checked_add(b),
                        Op::Sub => a.checked_sub(b),
                        _ => a.checked_mul(b),
                    }
                }
            };
            stack.push(v.ok_or_else(|| Error::Overflow(self.text.clone()))?);
        }
        Ok(stack.pop().expect("well-formed code"))
    }

    fn eval_wide(&self, slots: &[i64]) -> Result<i64> {
        let mut stack: Vec<BigInt> = Vec::with_capacity(8);
        for op in &self.code {
            let v = match *op {
                Op::Const(c) => BigInt::from(c),
                Op::Load(s) => BigInt::from(slots[s]),
                Op::Neg => -stack.pop().expect("well-formed code"),
                Op::Add | Op::Sub | Op::Mul => {
                    let b = stack.pop().expect("well-formed code");
                    let a = stack.pop().expect("well-formed code");
                    match op {
                        Op::Add => a + b,
                        Op::Sub => a - b,
                        _ => a * b,
                    }
                }
            };
            stack.push(v);
        }
        stack
            .pop()
            .expect("well-formed code")
            .to_i64()
            .ok_or_else(|| Error::Overflow(self.text.clone()))
    }
}
