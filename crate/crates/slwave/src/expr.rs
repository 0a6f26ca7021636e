//! Arithmetic expressions over `x` and `t`.
//!
//! Grammar:
//!
//! ```text
//! expr   = term (('+' | '-') term)*
//! term   = unary (('*' | '/') unary)*
//! unary  = '-' unary | power
//! power  = atom ('^' unary)?
//! atom   = number | 'x' | 't' | 'pi' | ident '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! Functions: `sin`, `cos`, `exp`, `log`, `sqrt`, `pow(a, b)` and the
//! Heaviside step `H(a)` with `H(0) = 1`. A step whose argument is affine in
//! `x` becomes a breakpoint when the expression is turned into a
//! [`PiecewiseSmoothFn`]; inside each piece the step is a constant.
//!
//! A product whose left factor is exactly zero is zero, so masks such as
//! `H(x - a) * g(x)` stay finite where `g` overflows.

use std::fmt;
use std::sync::Arc;

use slwave_core::coefficients::PiecewiseSmoothFn;
use slwave_core::Profile;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    X,
    T,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
    Log(Box<Expr>),
    Sqrt(Box<Expr>),
    /// Step number `.0` in source order.
    Step(usize, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at column {}", self.msg, self.pos + 1)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
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
            let v: f64 = text.parse().map_err(|_| ParseError {
                pos: start,
                msg: format!("bad number '{text}'"),
            })?;
            out.push((start, Tok::Num(v)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(src[start..i].to_string())));
        } else if "+-*/^(),".contains(c) {
            out.push((i, Tok::Op(c)));
            i += 1;
        } else {
            return Err(ParseError {
                pos: i,
                msg: format!("unexpected character '{c}'"),
            });
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
    steps: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|t| &t.1)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |t| t.0)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            pos: self.pos(),
            msg: msg.into(),
        })
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, op: char) -> Result<(), ParseError> {
        if self.eat(op) {
            Ok(())
        } else {
            self.err(format!("expected '{op}'"))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        let base = self.atom()?;
        if self.eat('^') {
            return Ok(Expr::Pow(Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn args(&mut self) -> Result<Vec<Expr>, ParseError> {
        self.expect('(')?;
        let mut out = vec![self.expr()?];
        while self.eat(',') {
            out.push(self.expr()?);
        }
        self.expect(')')?;
        Ok(out)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let pos = self.pos();
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.at += 1;
                Ok(Expr::Num(v))
            }
            Some(Tok::Op('(')) => {
                self.at += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.at += 1;
                match name.as_str() {
                    "x" => return Ok(Expr::X),
                    "t" => return Ok(Expr::T),
                    "pi" => return Ok(Expr::Num(std::f64::consts::PI)),
                    _ => {}
                }
                let arity = match name.as_str() {
                    "sin" | "cos" | "exp" | "log" | "sqrt" | "H" => 1,
                    "pow" => 2,
                    _ => {
                        return Err(ParseError {
                            pos,
                            msg: format!("unknown name '{name}'"),
                        })
                    }
                };
                let mut args = self.args()?;
                if args.len() != arity {
                    return Err(ParseError {
                        pos,
                        msg: format!("{name} takes {arity} argument(s), got {}", args.len()),
                    });
                }
                let a = Box::new(args.remove(0));
                Ok(match name.as_str() {
                    "sin" => Expr::Sin(a),
                    "cos" => Expr::Cos(a),
                    "exp" => Expr::Exp(a),
                    "log" => Expr::Log(a),
                    "sqrt" => Expr::Sqrt(a),
                    "pow" => Expr::Pow(a, Box::new(args.remove(0))),
                    _ => {
                        self.steps += 1;
                        Expr::Step(self.steps - 1, a)
                    }
                })
            }
            Some(Tok::Op(c)) => self.err(format!("unexpected '{c}'")),
            None => self.err("unexpected end of expression"),
        }
    }
}

/// Parses an expression.
pub fn parse(src: &str) -> Result<Expr, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser {
        toks,
        at: 0,
        end: src.len(),
        steps: 0,
    };
    let e = p.expr()?;
    if p.at != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(e)
}

fn num(v: f64) -> Expr {
    Expr::Num(v)
}

fn is_num(e: &Expr, v: f64) -> bool {
    matches!(e, Expr::Num(w) if *w == v)
}

fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        _ if is_num(&a, 0.0) => b,
        _ if is_num(&b, 0.0) => a,
        (Expr::Num(u), Expr::Num(v)) => num(u + v),
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        _ if is_num(&b, 0.0) => a,
        _ if is_num(&a, 0.0) => neg(b),
        (Expr::Num(u), Expr::Num(v)) => num(u - v),
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        _ if is_num(&a, 0.0) || is_num(&b, 0.0) => num(0.0),
        _ if is_num(&a, 1.0) => b,
        _ if is_num(&b, 1.0) => a,
        (Expr::Num(u), Expr::Num(v)) => num(u * v),
        _ => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    if is_num(&a, 0.0) {
        return num(0.0);
    }
    if is_num(&b, 1.0) {
        return a;
    }
    Expr::Div(Box::new(a), Box::new(b))
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(v) => num(-v),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

impl Expr {
    pub fn uses_t(&self) -> bool {
        self.any(&|e| matches!(e, Expr::T))
    }

    pub fn uses_x(&self) -> bool {
        self.any(&|e| matches!(e, Expr::X))
    }

    fn any(&self, pred: &dyn Fn(&Expr) -> bool) -> bool {
        if pred(self) {
            return true;
        }
        match self {
            Expr::Num(_) | Expr::X | Expr::T => false,
            Expr::Neg(a)
            | Expr::Sin(a)
            | Expr::Cos(a)
            | Expr::Exp(a)
            | Expr::Log(a)
            | Expr::Sqrt(a)
            | Expr::Step(_, a) => a.any(pred),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.any(pred) || b.any(pred)
            }
        }
    }

    /// Value at `(t, x)`; `steps[i]`, when given, overrides step `i`.
    pub fn eval_with(&self, t: f64, x: f64, steps: Option<&[bool]>) -> f64 {
        let ev = |e: &Expr| e.eval_with(t, x, steps);
        match self {
            Expr::Num(v) => *v,
            Expr::X => x,
            Expr::T => t,
            Expr::Neg(a) => -ev(a),
            Expr::Add(a, b) => ev(a) + ev(b),
            Expr::Sub(a, b) => ev(a) - ev(b),
            Expr::Mul(a, b) => {
                let l = ev(a);
                if l == 0.0 {
                    0.0
                } else {
                    l * ev(b)
                }
            }
            Expr::Div(a, b) => ev(a) / ev(b),
            Expr::Pow(a, b) => ev(a).powf(ev(b)),
            Expr::Sin(a) => ev(a).sin(),
            Expr::Cos(a) => ev(a).cos(),
            Expr::Exp(a) => ev(a).exp(),
            Expr::Log(a) => ev(a).ln(),
            Expr::Sqrt(a) => ev(a).sqrt(),
            Expr::Step(i, a) => {
                let on = match steps {
                    Some(s) => s[*i],
                    None => ev(a) >= 0.0,
                };
                if on {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn eval(&self, t: f64, x: f64) -> f64 {
        self.eval_with(t, x, None)
    }

    /// `∂/∂x`, treating every step as locally constant.
    pub fn dx(&self) -> Expr {
        match self {
            Expr::Num(_) | Expr::T | Expr::Step(..) => num(0.0),
            Expr::X => num(1.0),
            Expr::Neg(a) => neg(a.dx()),
            Expr::Add(a, b) => add(a.dx(), b.dx()),
            Expr::Sub(a, b) => sub(a.dx(), b.dx()),
            Expr::Mul(a, b) => add(mul((**a).clone(), b.dx()), mul(a.dx(), (**b).clone())),
            Expr::Div(a, b) => div(
                sub(mul(a.dx(), (**b).clone()), mul((**a).clone(), b.dx())),
                Expr::Pow(b.clone(), Box::new(num(2.0))),
            ),
            Expr::Pow(a, b) => {
                if !b.uses_x() {
                    mul(
                        mul((**b).clone(), Expr::Pow(a.clone(), Box::new(sub((**b).clone(), num(1.0))))),
                        a.dx(),
                    )
                } else {
                    mul(
                        self.clone(),
                        add(
                            mul(b.dx(), Expr::Log(a.clone())),
                            div(mul((**b).clone(), a.dx()), (**a).clone()),
                        ),
                    )
                }
            }
            Expr::Sin(a) => mul(Expr::Cos(a.clone()), a.dx()),
            Expr::Cos(a) => neg(mul(Expr::Sin(a.clone()), a.dx())),
            Expr::Exp(a) => mul(self.clone(), a.dx()),
            Expr::Log(a) => div(a.dx(), (**a).clone()),
            Expr::Sqrt(a) => div(a.dx(), mul(num(2.0), self.clone())),
        }
    }

    fn collect_steps<'a>(&'a self, out: &mut Vec<(usize, &'a Expr)>) {
        match self {
            Expr::Num(_) | Expr::X | Expr::T => {}
            Expr::Step(i, a) => {
                out.push((*i, a));
                a.collect_steps(out);
            }
            Expr::Neg(a) | Expr::Sin(a) | Expr::Cos(a) | Expr::Exp(a) | Expr::Log(a) | Expr::Sqrt(a) => {
                a.collect_steps(out)
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.collect_steps(out);
                b.collect_steps(out);
            }
        }
    }
}

/// A step `H(s·(x - at))` with `s = ±1`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct StepSite {
    index: usize,
    at: f64,
    rising: bool,
}

fn step_sites(e: &Expr) -> Result<(usize, Vec<StepSite>), String> {
    let mut found = Vec::new();
    e.collect_steps(&mut found);
    let count = found.iter().map(|(i, _)| i + 1).max().unwrap_or(0);
    let mut out = Vec::new();
    for (index, arg) in found {
        if arg.uses_t() {
            return Err("H(...) may depend on x only".into());
        }
        if arg.collect_nested() {
            return Err("H(...) may not be nested".into());
        }
        let a0 = arg.eval(0.0, 0.0);
        if !arg.uses_x() {
            let at = if a0 >= 0.0 { f64::NEG_INFINITY } else { f64::INFINITY };
            out.push(StepSite { index, at, rising: true });
            continue;
        }
        let a1 = arg.eval(0.0, 1.0);
        let slope = a1 - a0;
        let affine = [0.25, 0.5, 0.75]
            .iter()
            .all(|&x| (arg.eval(0.0, x) - (a0 + slope * x)).abs() <= 1e-12 * (1.0 + a0.abs() + slope.abs()));
        if !affine || slope == 0.0 || !slope.is_finite() {
            return Err("H(...) needs an argument affine in x with nonzero slope".into());
        }
        out.push(StepSite {
            index,
            at: -a0 / slope,
            rising: slope > 0.0,
        });
    }
    Ok((count, out))
}

impl Expr {
    fn collect_nested(&self) -> bool {
        let mut inner = Vec::new();
        self.collect_steps(&mut inner);
        !inner.is_empty()
    }
}

struct PieceProfile {
    f: Arc<Expr>,
    df: Arc<Expr>,
    steps: Vec<bool>,
}

impl Profile for PieceProfile {
    fn value(&self, x: f64) -> f64 {
        self.f.eval_with(0.0, x, Some(&self.steps))
    }

    fn derivative(&self, x: f64) -> f64 {
        self.df.eval_with(0.0, x, Some(&self.steps))
    }
}

/// An expression in `x`, split at its steps.
#[derive(Debug, Clone)]
pub struct XFunction {
    pub expr: Expr,
    pub dx: Expr,
    pub dxx: Expr,
    breakpoints: Vec<f64>,
    /// Step states on each piece.
    states: Vec<Vec<bool>>,
}

impl XFunction {
    pub fn new(expr: Expr) -> Result<Self, String> {
        if expr.uses_t() {
            return Err("expression may not depend on t".into());
        }
        let (count, sites) = step_sites(&expr)?;
        let mut breakpoints: Vec<f64> = sites.iter().map(|s| s.at).filter(|a| *a > 0.0 && *a < 1.0).collect();
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        let mut edges = vec![0.0];
        edges.extend(&breakpoints);
        edges.push(1.0);
        let states = edges
            .windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                let mut s = vec![false; count];
                for site in &sites {
                    s[site.index] = (mid >= site.at) == site.rising;
                }
                s
            })
            .collect();
        let dx = expr.dx();
        let dxx = dx.dx();
        Ok(XFunction {
            expr,
            dx,
            dxx,
            breakpoints,
            states,
        })
    }

    pub fn parse(src: &str) -> Result<Self, String> {
        let e = parse(src).map_err(|e| e.to_string())?;
        Self::new(e)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    fn piece(&self, x: f64) -> usize {
        self.breakpoints.partition_point(|&b| b <= x)
    }

    pub fn value(&self, x: f64) -> f64 {
        self.expr.eval_with(0.0, x, Some(&self.states[self.piece(x)]))
    }

    pub fn first(&self, x: f64) -> f64 {
        self.dx.eval_with(0.0, x, Some(&self.states[self.piece(x)]))
    }

    pub fn second(&self, x: f64) -> f64 {
        self.dxx.eval_with(0.0, x, Some(&self.states[self.piece(x)]))
    }

    pub fn to_piecewise(&self) -> PiecewiseSmoothFn {
        let f = Arc::new(self.expr.clone());
        let df = Arc::new(self.dx.clone());
        let pieces = self
            .states
            .iter()
            .map(|s| {
                Arc::new(PieceProfile {
                    f: f.clone(),
                    df: df.clone(),
                    steps: s.clone(),
                }) as Arc<dyn Profile>
            })
            .collect();
        PiecewiseSmoothFn::new(self.breakpoints.clone(), pieces).expect("sorted interior breakpoints")
    }
}
