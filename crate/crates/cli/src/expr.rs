//! Closed-form data expressions.
//!
//! Sums and products of constants, `pi`, powers of `t`, and `cos`/`sin` of
//! affine arguments in `x`, `y` whose coefficients are integer multiples of
//! 2π, so every expression is periodic on the unit torus. For example
//!
//! ```text
//! 1 + 0.5*cos(2*pi*x) - 0.2*t^0.7*sin(4*pi*(x + y))
//! ```

use std::fmt;

use fracthj_core::torus::{Field, TorusGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct ExprError(pub String);

impl fmt::Display for ExprError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ExprError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ExprError> {
    Err(ExprError(msg.into()))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    X,
    Y,
    T,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, f64),
    Cos(Box<Expr>),
    Sin(Box<Expr>),
}

/// What a parsed expression may refer to.
#[derive(Debug, Clone, Copy)]
pub struct Scope {
    pub dim: usize,
    pub time: bool,
}

impl Expr {
    /// Parses and checks `src` against `scope`.
    pub fn parse(src: &str, scope: Scope) -> Result<Expr, ExprError> {
        let tokens = tokenize(src)?;
        let mut p = Parser { tokens, pos: 0 };
        let e = p.sum()?;
        if p.pos != p.tokens.len() {
            return err(format!("unexpected {} in {src:?}", p.tokens[p.pos]));
        }
        e.check(scope, false).map_err(|ExprError(m)| ExprError(format!("{m} in {src:?}")))?;
        Ok(e)
    }

    pub fn eval(&self, x: f64, y: f64, t: f64) -> f64 {
        use Expr::*;
        match self {
            Const(c) => *c,
            X => x,
            Y => y,
            T => t,
            Neg(a) => -a.eval(x, y, t),
            Add(a, b) => a.eval(x, y, t) + b.eval(x, y, t),
            Sub(a, b) => a.eval(x, y, t) - b.eval(x, y, t),
            Mul(a, b) => a.eval(x, y, t) * b.eval(x, y, t),
            Div(a, b) => a.eval(x, y, t) / b.eval(x, y, t),
            Pow(a, p) => pow(a.eval(x, y, t), *p),
            Cos(a) => a.eval(x, y, t).cos(),
            Sin(a) => a.eval(x, y, t).sin(),
        }
    }

    pub fn field(&self, grid: TorusGrid, t: f64) -> Field {
        Field::from_fn(grid, |p| self.eval(p[0], p[1], t))
    }

    fn has(&self, var: &Expr) -> bool {
        use Expr::*;
        match self {
            Const(_) => false,
            X | Y | T => self == var,
            Neg(a) | Pow(a, _) | Cos(a) | Sin(a) => a.has(var),
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) => a.has(var) || b.has(var),
        }
    }

    fn constant(&self) -> Option<f64> {
        if self.has(&Expr::X) || self.has(&Expr::Y) || self.has(&Expr::T) {
            None
        } else {
            Some(self.eval(0.0, 0.0, 0.0))
        }
    }

    /// (a, b, c) with self = a·x + b·y + c, if affine in space and free of t.
    fn affine(&self) -> Option<(f64, f64, f64)> {
        use Expr::*;
        match self {
            Const(c) => Some((0.0, 0.0, *c)),
            X => Some((1.0, 0.0, 0.0)),
            Y => Some((0.0, 1.0, 0.0)),
            T => None,
            Neg(a) => a.affine().map(|(p, q, r)| (-p, -q, -r)),
            Add(a, b) | Sub(a, b) => {
                let (p1, q1, r1) = a.affine()?;
                let (p2, q2, r2) = b.affine()?;
                let s = if matches!(self, Add(..)) { 1.0 } else { -1.0 };
                Some((p1 + s * p2, q1 + s * q2, r1 + s * r2))
            }
            Mul(a, b) => match (a.constant(), b.constant()) {
                (Some(c), _) => b.affine().map(|(p, q, r)| (c * p, c * q, c * r)),
                (_, Some(c)) => a.affine().map(|(p, q, r)| (c * p, c * q, c * r)),
                _ => None,
            },
            Div(a, b) => {
                let c = b.constant()?;
                a.affine().map(|(p, q, r)| (p / c, q / c, r / c))
            }
            Pow(..) | Cos(_) | Sin(_) => self.constant().map(|c| (0.0, 0.0, c)),
        }
    }

    fn check(&self, scope: Scope, in_trig: bool) -> Result<(), ExprError> {
        use Expr::*;
        match self {
            Const(c) if !c.is_finite() => err("non-finite constant"),
            Const(_) => Ok(()),
            X | Y if !in_trig => err("x and y may only appear inside cos or sin"),
            Y if scope.dim < 2 => err("y used in a one-dimensional problem"),
            X | Y => Ok(()),
            T if !scope.time => err("t is not allowed here"),
            T if in_trig => err("t may not appear inside cos or sin"),
            T => Ok(()),
            Neg(a) => a.check(scope, in_trig),
            Add(a, b) | Sub(a, b) | Mul(a, b) => {
                a.check(scope, in_trig)?;
                b.check(scope, in_trig)
            }
            Div(a, b) => match b.constant() {
                Some(c) if c != 0.0 => a.check(scope, in_trig),
                Some(_) => err("division by zero"),
                None => err("only division by constants is supported"),
            },
            Pow(a, p) => {
                if p.fract() != 0.0 && !matches!(**a, T | Const(_)) {
                    return err("non-integer powers are only allowed of t itself");
                }
                if *p < 0.0 && a.constant().is_none() {
                    return err("negative powers are only allowed of constants");
                }
                a.check(scope, in_trig)
            }
            Cos(a) | Sin(a) => {
                a.check(scope, true)?;
                let Some((p, q, _)) = a.affine() else {
                    return err("trigonometric arguments must be affine in x and y");
                };
                for c in [p, q] {
                    let k = c / (2.0 * std::f64::consts::PI);
                    if (k - k.round()).abs() > 1e-9 {
                        return err(format!("coefficient {c} is not an integer multiple of 2*pi, so the data is not periodic"));
                    }
                }
                Ok(())
            }
        }
    }
}

fn pow(b: f64, p: f64) -> f64 {
    if p.fract() == 0.0 && p.abs() <= i32::MAX as f64 {
        b.powi(p as i32)
    } else {
        b.powf(p)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Num(v) => write!(f, "number {v}"),
            Token::Ident(s) => write!(f, "{s:?}"),
            Token::Op(c) => write!(f, "'{c}'"),
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<Token>, ExprError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            // exponent part, as in 1e-3
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s: String = chars[start..i].iter().collect();
            let v = s.parse::<f64>().map_err(|_| ExprError(format!("bad number {s:?}")))?;
            out.push(Token::Num(v));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            out.push(Token::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            out.push(Token::Op(c));
            i += 1;
        } else {
            return err(format!("unexpected character '{c}' in {src:?}"));
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek_op(&self) -> Option<char> {
        match self.tokens.get(self.pos) {
            Some(Token::Op(c)) => Some(*c),
            _ => None,
        }
    }

    fn expect(&mut self, op: char) -> Result<(), ExprError> {
        if self.peek_op() == Some(op) {
            self.pos += 1;
            Ok(())
        } else {
            err(format!("expected '{op}'"))
        }
    }

    fn sum(&mut self) -> Result<Expr, ExprError> {
        let mut e = self.product()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let r = self.product()?;
            e = if op == '+' { Expr::Add(e.into(), r.into()) } else { Expr::Sub(e.into(), r.into()) };
        }
        Ok(e)
    }

    fn product(&mut self) -> Result<Expr, ExprError> {
        let mut e = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let r = self.unary()?;
            e = if op == '*' { Expr::Mul(e.into(), r.into()) } else { Expr::Div(e.into(), r.into()) };
        }
        Ok(e)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        match self.peek_op() {
            Some('-') => {
                self.pos += 1;
                Ok(Expr::Neg(self.unary()?.into()))
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.peek_op() != Some('^') {
            return Ok(base);
        }
        self.pos += 1;
        let exp = self.unary()?;
        match exp.constant() {
            Some(p) if p.is_finite() => Ok(Expr::Pow(base.into(), p)),
            _ => err("exponents must be constants"),
        }
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let Some(tok) = self.tokens.get(self.pos).cloned() else {
            return err("unexpected end of expression");
        };
        self.pos += 1;
        match tok {
            Token::Num(v) => Ok(Expr::Const(v)),
            Token::Op('(') => {
                let e = self.sum()?;
                self.expect(')')?;
                Ok(e)
            }
            Token::Ident(name) => match name.as_str() {
                "x" => Ok(Expr::X),
                "y" => Ok(Expr::Y),
                "t" => Ok(Expr::T),
                "pi" => Ok(Expr::Const(std::f64::consts::PI)),
                "cos" | "sin" => {
                    self.expect('(')?;
                    let a = self.sum()?;
                    self.expect(')')?;
                    Ok(if name == "cos" { Expr::Cos(a.into()) } else { Expr::Sin(a.into()) })
                }
                _ => err(format!("unknown name {name:?}")),
            },
            Token::Op(c) => err(format!("unexpected '{c}'")),
        }
    }
}
