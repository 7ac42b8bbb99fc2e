//! Closed-form scalar expressions in one variable.
//!
//! Used for user-defined dispersion symbols (variable `xi`) and initial
//! profiles (variable `x`). Evaluation runs in second-order forward mode so
//! a parsed symbol also yields its first and second derivatives.
//!
//! Grammar:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```

use crate::error::{Error, Result};
use std::fmt;

/// A value together with its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual2 {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Dual2 {
    pub fn constant(v: f64) -> Self {
        Dual2 { v, d1: 0.0, d2: 0.0 }
    }

    pub fn variable(v: f64) -> Self {
        Dual2 { v, d1: 1.0, d2: 0.0 }
    }

    fn is_constant(&self) -> bool {
        self.d1 == 0.0 && self.d2 == 0.0
    }

    /// Chain rule for `f(self)` given f, f', f'' at `self.v`.
    fn chain(self, f: f64, df: f64, d2f: f64) -> Self {
        Dual2 {
            v: f,
            d1: df * self.d1,
            d2: d2f * self.d1 * self.d1 + df * self.d2,
        }
    }

    fn add(self, o: Self) -> Self {
        Dual2 { v: self.v + o.v, d1: self.d1 + o.d1, d2: self.d2 + o.d2 }
    }

    fn sub(self, o: Self) -> Self {
        Dual2 { v: self.v - o.v, d1: self.d1 - o.d1, d2: self.d2 - o.d2 }
    }

    fn mul(self, o: Self) -> Self {
        Dual2 {
            v: self.v * o.v,
            d1: self.d1 * o.v + self.v * o.d1,
            d2: self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
        }
    }

    fn recip(self) -> Self {
        let inv = 1.0 / self.v;
        self.chain(inv, -inv * inv, 2.0 * inv * inv * inv)
    }

    fn div(self, o: Self) -> Self {
        self.mul(o.recip())
    }

    fn neg(self) -> Self {
        Dual2 { v: -self.v, d1: -self.d1, d2: -self.d2 }
    }

    fn powf(self, e: Self) -> Self {
        if e.is_constant() {
            let c = e.v;
            let f = self.v.powf(c);
            if c == 0.0 {
                return Dual2::constant(1.0);
            }
            let df = c * self.v.powf(c - 1.0);
            let d2f = if c == 1.0 { 0.0 } else { c * (c - 1.0) * self.v.powf(c - 2.0) };
            self.chain(f, df, d2f)
        } else {
            // a^b = exp(b ln a)
            e.mul(self.ln()).exp()
        }
    }

    fn exp(self) -> Self {
        let f = self.v.exp();
        self.chain(f, f, f)
    }

    fn ln(self) -> Self {
        let inv = 1.0 / self.v;
        self.chain(self.v.ln(), inv, -inv * inv)
    }

    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * s * s))
    }

    fn tanh(self) -> Self {
        let t = self.v.tanh();
        let s = 1.0 - t * t;
        self.chain(t, s, -2.0 * t * s)
    }

    fn sinh(self) -> Self {
        let (s, c) = (self.v.sinh(), self.v.cosh());
        self.chain(s, c, s)
    }

    fn cosh(self) -> Self {
        let (s, c) = (self.v.sinh(), self.v.cosh());
        self.chain(c, s, c)
    }

    fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }

    fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }

    fn abs(self) -> Self {
        let sg = if self.v < 0.0 { -1.0 } else { 1.0 };
        self.chain(self.v.abs(), sg, 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func {
    Tanh,
    Sqrt,
    Abs,
    Exp,
    Ln,
    Sin,
    Cos,
    Sinh,
    Cosh,
}

impl Func {
    fn lookup(name: &str) -> Option<Self> {
        Some(match name {
            "tanh" => Func::Tanh,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "exp" => Func::Exp,
            "ln" | "log" => Func::Ln,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            _ => return None,
        })
    }

    fn apply(self, x: Dual2) -> Dual2 {
        match self {
            Func::Tanh => x.tanh(),
            Func::Sqrt => x.sqrt(),
            Func::Abs => x.abs(),
            Func::Exp => x.exp(),
            Func::Ln => x.ln(),
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Sinh => x.sinh(),
            Func::Cosh => x.cosh(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var,
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

impl Node {
    fn eval(&self, x: Dual2) -> Dual2 {
        match self {
            Node::Num(c) => Dual2::constant(*c),
            Node::Var => x,
            Node::Neg(a) => a.eval(x).neg(),
            Node::Add(a, b) => a.eval(x).add(b.eval(x)),
            Node::Sub(a, b) => a.eval(x).sub(b.eval(x)),
            Node::Mul(a, b) => a.eval(x).mul(b.eval(x)),
            Node::Div(a, b) => a.eval(x).div(b.eval(x)),
            Node::Pow(a, b) => a.eval(x).powf(b.eval(x)),
            Node::Call(f, a) => f.apply(a.eval(x)),
        }
    }

    fn eval_f64(&self, x: f64) -> f64 {
        match self {
            Node::Num(c) => *c,
            Node::Var => x,
            Node::Neg(a) => -a.eval_f64(x),
            Node::Add(a, b) => a.eval_f64(x) + b.eval_f64(x),
            Node::Sub(a, b) => a.eval_f64(x) - b.eval_f64(x),
            Node::Mul(a, b) => a.eval_f64(x) * b.eval_f64(x),
            Node::Div(a, b) => a.eval_f64(x) / b.eval_f64(x),
            Node::Pow(a, b) => a.eval_f64(x).powf(b.eval_f64(x)),
            Node::Call(f, a) => f.apply(Dual2::constant(a.eval_f64(x))).v,
        }
    }
}

/// A parsed expression in a single named variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    source: String,
    var: String,
    root: Node,
}

impl Expr {
    /// Parses `source` with `var` as the free variable.
    pub fn parse(source: &str, var: &str) -> Result<Self> {
        let mut p = Parser { src: source.as_bytes(), pos: 0, var };
        let root = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(Expr { source: source.to_string(), var: var.to_string(), root })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn variable(&self) -> &str {
        &self.var
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.root.eval_f64(x)
    }

    /// Value and first two derivatives at `x`.
    pub fn eval_dual(&self, x: f64) -> Dual2 {
        self.root.eval(Dual2::variable(x))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    var: &'a str,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> Error {
        Error::Parse { offset: self.pos, message: message.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(b'/') {
                lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat(b'-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let exp = self.unary()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Node> {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.') {
            self.pos += 1;
        }
        if self.pos < self.src.len() && (self.src[self.pos] == b'e' || self.src[self.pos] == b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.src.len() && (self.src[self.pos] == b'+' || self.src[self.pos] == b'-') {
                self.pos += 1;
            }
            if self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            } else {
                // `2e` is a number followed by the constant e; let the caller fail on it
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        text.parse::<f64>()
            .map(Node::Num)
            .map_err(|_| Error::Parse { offset: start, message: format!("bad number `{text}`") })
    }

    fn ident(&mut self) -> Result<Node> {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        if name == self.var {
            return Ok(Node::Var);
        }
        match name {
            "pi" => return Ok(Node::Num(std::f64::consts::PI)),
            "e" => return Ok(Node::Num(std::f64::consts::E)),
            _ => {}
        }
        let Some(func) = Func::lookup(name) else {
            return Err(Error::Parse { offset: start, message: format!("unknown identifier `{name}`") });
        };
        if !self.eat(b'(') {
            return Err(self.error("expected `(` after function name"));
        }
        let arg = self.expr()?;
        if !self.eat(b')') {
            return Err(self.error("expected `)`"));
        }
        Ok(Node::Call(func, Box::new(arg)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn precedence_and_associativity() {
        let e = Expr::parse("1 + 2*3 - 4/2", "x").unwrap();
        assert_eq!(e.eval(0.0), 5.0);
        let e = Expr::parse("2^3^2", "x").unwrap();
        assert_eq!(e.eval(0.0), 512.0);
        let e = Expr::parse("-x^2", "x").unwrap();
        assert_eq!(e.eval(3.0), -9.0);
        let e = Expr::parse("2*-x", "x").unwrap();
        assert_eq!(e.eval(3.0), -6.0);
    }

    #[test]
    fn scientific_literals_and_constants() {
        let e = Expr::parse("1.5e-3 * 2E2 + pi - pi", "x").unwrap();
        assert!(close(e.eval(0.0), 0.3, 1e-15));
        assert!(close(Expr::parse("e", "x").unwrap().eval(0.0), std::f64::consts::E, 0.0));
    }

    #[test]
    fn derivatives_match_closed_forms() {
        // sqrt(tanh(xi)/xi) at xi = 0.7
        let e = Expr::parse("sqrt(tanh(xi)/xi)", "xi").unwrap();
        let d = e.eval_dual(0.7);
        let h = 1e-4;
        let f = |x: f64| (x.tanh() / x).sqrt();
        let d1 = (f(0.7 + h) - f(0.7 - h)) / (2.0 * h);
        let d2 = (f(0.7 + h) - 2.0 * f(0.7) + f(0.7 - h)) / (h * h);
        assert!(close(d.v, f(0.7), 1e-15));
        assert!(close(d.d1, d1, 1e-7));
        assert!(close(d.d2, d2, 1e-5));

        let e = Expr::parse("(1 + xi^2)^(0.25)", "xi").unwrap();
        let d = e.eval_dual(2.0);
        let expect_d1 = 0.5 * 2.0 * 5f64.powf(-0.75);
        let expect_d2 = 0.5 * 5f64.powf(-1.75) * (1.0 + (0.5 - 1.0) * 4.0);
        assert!(close(d.d1, expect_d1, 1e-14));
        assert!(close(d.d2, expect_d2, 1e-14));
    }

    #[test]
    fn variable_power() {
        let e = Expr::parse("x^x", "x").unwrap();
        let d = e.eval_dual(2.0);
        assert!(close(d.v, 4.0, 1e-15));
        assert!(close(d.d1, 4.0 * (2f64.ln() + 1.0), 1e-14));
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(matches!(Expr::parse("1 +", "x"), Err(Error::Parse { .. })));
        assert!(matches!(Expr::parse("foo(x)", "x"), Err(Error::Parse { .. })));
        assert!(matches!(Expr::parse("(x", "x"), Err(Error::Parse { .. })));
        assert!(matches!(Expr::parse("x y", "x"), Err(Error::Parse { .. })));
        assert!(matches!(Expr::parse("xi", "x"), Err(Error::Parse { .. })));
    }
}
