//! Small arithmetic expression language with symbolic differentiation.
//!
//! Grammar: `+ - * / ^`, parentheses, numeric literals, the constants `pi`
//! and `e`, named variables, and the functions `sin cos tan cot sec csc log
//! exp sqrt abs xcsc`. `log` is the natural logarithm of the absolute value.
//! `xcsc(x) = x / sin(x)` is the smooth extension through `x = 0` used by
//! compactified charts.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Cot,
    Sec,
    Csc,
    Log,
    Exp,
    Sqrt,
    Abs,
    Sign,
    /// `k`-th derivative of `x / sin x`.
    Xcsc(u8),
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "cot" => Func::Cot,
            "sec" => Func::Sec,
            "csc" => Func::Csc,
            "log" | "ln" => Func::Log,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "xcsc" => Func::Xcsc(0),
            _ => return None,
        })
    }

    fn name(&self) -> String {
        match self {
            Func::Sin => "sin".into(),
            Func::Cos => "cos".into(),
            Func::Tan => "tan".into(),
            Func::Cot => "cot".into(),
            Func::Sec => "sec".into(),
            Func::Csc => "csc".into(),
            Func::Log => "log".into(),
            Func::Exp => "exp".into(),
            Func::Sqrt => "sqrt".into(),
            Func::Abs => "abs".into(),
            Func::Sign => "sign".into(),
            Func::Xcsc(0) => "xcsc".into(),
            Func::Xcsc(k) => format!("xcsc_d{k}"),
        }
    }

    fn apply(&self, x: f64) -> f64 {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => x.tan(),
            Func::Cot => x.cos() / x.sin(),
            Func::Sec => 1.0 / x.cos(),
            Func::Csc => 1.0 / x.sin(),
            Func::Log => x.abs().ln(),
            Func::Exp => x.exp(),
            Func::Sqrt => x.sqrt(),
            Func::Abs => x.abs(),
            Func::Sign => {
                if x > 0.0 {
                    1.0
                } else if x < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            Func::Xcsc(k) => xcsc(*k, x),
        }
    }
}

/// `d^k/dx^k (x / sin x)`, using Taylor series near the removable singularity.
pub fn xcsc(k: u8, x: f64) -> f64 {
    const SERIES_RADIUS: f64 = 0.05;
    let x2 = x * x;
    match k {
        0 => {
            if x.abs() < SERIES_RADIUS {
                1.0 + x2 * (1.0 / 6.0 + x2 * (7.0 / 360.0 + x2 * (31.0 / 15120.0 + x2 * 127.0 / 604800.0)))
            } else {
                x / x.sin()
            }
        }
        1 => {
            if x.abs() < SERIES_RADIUS {
                x * (1.0 / 3.0 + x2 * (7.0 / 90.0 + x2 * (31.0 / 2520.0 + x2 * 127.0 / 75600.0)))
            } else {
                let s = x.sin();
                (s - x * x.cos()) / (s * s)
            }
        }
        2 => {
            if x.abs() < SERIES_RADIUS {
                1.0 / 3.0 + x2 * (7.0 / 30.0 + x2 * (31.0 / 504.0 + x2 * 127.0 / 10800.0))
            } else {
                let csc = 1.0 / x.sin();
                let cot = x.cos() / x.sin();
                -2.0 * csc * cot + x * csc * (cot * cot + csc * csc)
            }
        }
        _ => {
            let h = 1e-4;
            (xcsc(k - 1, x + h) - xcsc(k - 1, x - h)) / (2.0 * h)
        }
    }
}

/// Expression tree over indexed variables.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    PowI(Box<Expr>, i32),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn constant(c: f64) -> Expr {
        Expr::Const(c)
    }

    pub fn var(i: usize) -> Expr {
        Expr::Var(i)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == 0.0)
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == 1.0)
    }

    pub fn neg(a: Expr) -> Expr {
        match a {
            Expr::Const(c) => Expr::Const(-c),
            Expr::Neg(inner) => *inner,
            other => Expr::Neg(Box::new(other)),
        }
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (&a, &b) {
            (Expr::Const(x), Expr::Const(y)) => Expr::Const(x + y),
            _ if a.is_zero() => b,
            _ if b.is_zero() => a,
            (_, Expr::Neg(inner)) => Expr::Sub(Box::new(a.clone()), inner.clone()),
            _ => Expr::Add(Box::new(a), Box::new(b)),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (&a, &b) {
            (Expr::Const(x), Expr::Const(y)) => Expr::Const(x - y),
            _ if b.is_zero() => a,
            _ if a.is_zero() => Expr::neg(b),
            (_, Expr::Neg(inner)) => Expr::Add(Box::new(a.clone()), inner.clone()),
            _ => Expr::Sub(Box::new(a), Box::new(b)),
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (&a, &b) {
            (Expr::Const(x), Expr::Const(y)) => Expr::Const(x * y),
            _ if a.is_zero() || b.is_zero() => Expr::Const(0.0),
            _ if a.is_one() => b,
            _ if b.is_one() => a,
            (Expr::Const(c), _) if *c == -1.0 => Expr::neg(b),
            (_, Expr::Const(c)) if *c == -1.0 => Expr::neg(a),
            (_, Expr::Const(_)) => Expr::Mul(Box::new(b), Box::new(a)),
            _ => Expr::Mul(Box::new(a), Box::new(b)),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        match (&a, &b) {
            (Expr::Const(x), Expr::Const(y)) if *y != 0.0 => Expr::Const(x / y),
            _ if a.is_zero() => Expr::Const(0.0),
            _ if b.is_one() => a,
            _ => Expr::Div(Box::new(a), Box::new(b)),
        }
    }

    pub fn powi(a: Expr, n: i32) -> Expr {
        match (&a, n) {
            (_, 0) => Expr::Const(1.0),
            (_, 1) => a,
            (Expr::Const(c), _) => Expr::Const(c.powi(n)),
            _ => Expr::PowI(Box::new(a), n),
        }
    }

    pub fn pow(a: Expr, b: Expr) -> Expr {
        if let Some(c) = b.as_const() {
            if c.fract() == 0.0 && c.abs() <= i32::MAX as f64 {
                return Expr::powi(a, c as i32);
            }
        }
        match (&a, &b) {
            (Expr::Const(x), Expr::Const(y)) => Expr::Const(x.powf(*y)),
            _ => Expr::Pow(Box::new(a), Box::new(b)),
        }
    }

    pub fn call(f: Func, a: Expr) -> Expr {
        match a {
            Expr::Const(c) => Expr::Const(f.apply(c)),
            other => Expr::Call(f, Box::new(other)),
        }
    }

    pub fn eval(&self, vars: &[f64]) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => vars.get(*i).copied().unwrap_or(f64::NAN),
            Expr::Neg(a) => -a.eval(vars),
            Expr::Add(a, b) => a.eval(vars) + b.eval(vars),
            Expr::Sub(a, b) => a.eval(vars) - b.eval(vars),
            Expr::Mul(a, b) => a.eval(vars) * b.eval(vars),
            Expr::Div(a, b) => a.eval(vars) / b.eval(vars),
            Expr::PowI(a, n) => a.eval(vars).powi(*n),
            Expr::Pow(a, b) => a.eval(vars).powf(b.eval(vars)),
            Expr::Call(f, a) => f.apply(a.eval(vars)),
        }
    }

    /// Symbolic partial derivative with respect to variable `j`.
    pub fn diff(&self, j: usize) -> Expr {
        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Var(i) => Expr::Const(if *i == j { 1.0 } else { 0.0 }),
            Expr::Neg(a) => Expr::neg(a.diff(j)),
            Expr::Add(a, b) => Expr::add(a.diff(j), b.diff(j)),
            Expr::Sub(a, b) => Expr::sub(a.diff(j), b.diff(j)),
            Expr::Mul(a, b) => Expr::add(
                Expr::mul(a.diff(j), (**b).clone()),
                Expr::mul((**a).clone(), b.diff(j)),
            ),
            Expr::Div(a, b) => {
                let da = a.diff(j);
                let db = b.diff(j);
                if db.is_zero() {
                    Expr::div(da, (**b).clone())
                } else {
                    Expr::div(
                        Expr::sub(
                            Expr::mul(da, (**b).clone()),
                            Expr::mul((**a).clone(), db),
                        ),
                        Expr::powi((**b).clone(), 2),
                    )
                }
            }
            Expr::PowI(a, n) => Expr::mul(
                Expr::mul(Expr::Const(*n as f64), Expr::powi((**a).clone(), n - 1)),
                a.diff(j),
            ),
            Expr::Pow(a, b) => {
                // d(a^b) = a^b (b' ln a + b a' / a)
                let da = a.diff(j);
                let db = b.diff(j);
                let term_b = Expr::mul(db, Expr::call(Func::Log, (**a).clone()));
                let term_a = Expr::div(Expr::mul((**b).clone(), da), (**a).clone());
                Expr::mul(self.clone(), Expr::add(term_b, term_a))
            }
            Expr::Call(f, a) => {
                let da = a.diff(j);
                if da.is_zero() {
                    return Expr::Const(0.0);
                }
                let u = (**a).clone();
                let outer = match f {
                    Func::Sin => Expr::call(Func::Cos, u),
                    Func::Cos => Expr::neg(Expr::call(Func::Sin, u)),
                    Func::Tan => Expr::powi(Expr::call(Func::Sec, u), 2),
                    Func::Cot => Expr::neg(Expr::powi(Expr::call(Func::Csc, u), 2)),
                    Func::Sec => Expr::mul(
                        Expr::call(Func::Sec, u.clone()),
                        Expr::call(Func::Tan, u),
                    ),
                    Func::Csc => Expr::neg(Expr::mul(
                        Expr::call(Func::Csc, u.clone()),
                        Expr::call(Func::Cot, u),
                    )),
                    Func::Log => Expr::div(Expr::Const(1.0), u),
                    Func::Exp => Expr::call(Func::Exp, u),
                    Func::Sqrt => Expr::div(
                        Expr::Const(0.5),
                        Expr::call(Func::Sqrt, u),
                    ),
                    Func::Abs => Expr::call(Func::Sign, u),
                    Func::Sign => Expr::Const(0.0),
                    Func::Xcsc(k) => Expr::call(Func::Xcsc(k + 1), u),
                };
                Expr::mul(outer, da)
            }
        }
    }

    /// Largest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        self.visit_vars(&mut |i| best = Some(best.map_or(i, |b| b.max(i))));
        best
    }

    pub fn uses_var(&self, j: usize) -> bool {
        let mut found = false;
        self.visit_vars(&mut |i| found |= i == j);
        found
    }

    /// True when every variable referenced is in `allowed`.
    pub fn only_uses(&self, allowed: &[usize]) -> bool {
        let mut ok = true;
        self.visit_vars(&mut |i| ok &= allowed.contains(&i));
        ok
    }

    fn visit_vars(&self, f: &mut dyn FnMut(usize)) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(i) => f(*i),
            Expr::Neg(a) | Expr::PowI(a, _) | Expr::Call(_, a) => a.visit_vars(f),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => {
                a.visit_vars(f);
                b.visit_vars(f);
            }
        }
    }

    /// Replace every `Var(i)` by `map(i)`.
    pub fn remap_vars(&self, map: &dyn Fn(usize) -> Expr) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Var(i) => map(*i),
            Expr::Neg(a) => Expr::neg(a.remap_vars(map)),
            Expr::Add(a, b) => Expr::add(a.remap_vars(map), b.remap_vars(map)),
            Expr::Sub(a, b) => Expr::sub(a.remap_vars(map), b.remap_vars(map)),
            Expr::Mul(a, b) => Expr::mul(a.remap_vars(map), b.remap_vars(map)),
            Expr::Div(a, b) => Expr::div(a.remap_vars(map), b.remap_vars(map)),
            Expr::PowI(a, n) => Expr::powi(a.remap_vars(map), *n),
            Expr::Pow(a, b) => Expr::pow(a.remap_vars(map), b.remap_vars(map)),
            Expr::Call(f, a) => Expr::call(*f, a.remap_vars(map)),
        }
    }

    /// Render with the given variable names (falls back to `x{i}`).
    pub fn display_with<'a>(&'a self, names: &'a [String]) -> impl fmt::Display + 'a {
        Named { expr: self, names }
    }
}

struct Named<'a> {
    expr: &'a Expr,
    names: &'a [String],
}

impl fmt::Display for Named<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(self.expr, self.names, f)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(self, &[], f)
    }
}

fn write_expr(e: &Expr, names: &[String], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e {
        Expr::Const(c) => {
            if *c < 0.0 {
                write!(f, "({c:?})")
            } else {
                write!(f, "{c:?}")
            }
        }
        Expr::Var(i) => match names.get(*i) {
            Some(n) => write!(f, "{n}"),
            None => write!(f, "x{i}"),
        },
        Expr::Neg(a) => {
            write!(f, "(-")?;
            write_expr(a, names, f)?;
            write!(f, ")")
        }
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
            let op = match e {
                Expr::Add(..) => "+",
                Expr::Sub(..) => "-",
                Expr::Mul(..) => "*",
                Expr::Div(..) => "/",
                _ => "^",
            };
            write!(f, "(")?;
            write_expr(a, names, f)?;
            write!(f, " {op} ")?;
            write_expr(b, names, f)?;
            write!(f, ")")
        }
        Expr::PowI(a, n) => {
            write!(f, "(")?;
            write_expr(a, names, f)?;
            write!(f, "^{n})")
        }
        Expr::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            write_expr(a, names, f)?;
            write!(f, ")")
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && ((bytes[i] as char).is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            let v: f64 = text.parse().map_err(|_| Error::Parse {
                expr: src.to_string(),
                pos: start,
                msg: format!("bad number `{text}`"),
            })?;
            out.push((start, Tok::Num(v)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(src[start..i].to_string())));
        } else if "+-*/^(),".contains(c) {
            out.push((i, Tok::Op(c)));
            i += 1;
        } else {
            return Err(Error::Parse {
                expr: src.to_string(),
                pos: i,
                msg: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<(usize, Tok)>,
    pos: usize,
    names: &'a [&'a str],
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map_or(self.src.len(), |(p, _)| *p)
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            expr: self.src.to_string(),
            pos: self.here(),
            msg: msg.into(),
        }
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::add(lhs, self.term()?);
            } else if self.eat('-') {
                lhs = Expr::sub(lhs, self.term()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::mul(lhs, self.unary()?);
            } else if self.eat('/') {
                lhs = Expr::div(lhs, self.unary()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            Ok(Expr::neg(self.unary()?))
        } else if self.eat('+') {
            self.unary()
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat('^') {
            let exponent = self.unary()?;
            Ok(Expr::pow(base, exponent))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        let tok = self.peek().cloned().ok_or_else(|| self.err("unexpected end of input"))?;
        match tok {
            Tok::Num(v) => {
                self.pos += 1;
                Ok(Expr::Const(v))
            }
            Tok::Op('(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(self.err("expected `)`"));
                }
                Ok(e)
            }
            Tok::Ident(name) => {
                self.pos += 1;
                if let Some(i) = self.names.iter().position(|n| *n == name) {
                    return Ok(Expr::Var(i));
                }
                if self.peek() == Some(&Tok::Op('(')) {
                    let func = Func::from_name(&name).ok_or_else(|| Error::UnknownSymbol {
                        name: name.clone(),
                        expr: self.src.to_string(),
                    })?;
                    self.pos += 1;
                    let arg = self.expr()?;
                    if !self.eat(')') {
                        return Err(self.err("expected `)` after function argument"));
                    }
                    return Ok(Expr::call(func, arg));
                }
                match name.as_str() {
                    "pi" => Ok(Expr::Const(std::f64::consts::PI)),
                    "e" => Ok(Expr::Const(std::f64::consts::E)),
                    _ => Err(Error::UnknownSymbol {
                        name,
                        expr: self.src.to_string(),
                    }),
                }
            }
            Tok::Op(c) => Err(self.err(format!("unexpected `{c}`"))),
        }
    }
}

/// Parse `src` with variables named by `names` (index = position).
pub fn parse(src: &str, names: &[&str]) -> Result<Expr> {
    let toks = tokenize(src)?;
    if toks.is_empty() {
        return Err(Error::Parse {
            expr: src.to_string(),
            pos: 0,
            msg: "empty expression".into(),
        });
    }
    let mut p = Parser {
        src,
        toks,
        pos: 0,
        names,
    };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(p.err("trailing input"));
    }
    Ok(e)
}
