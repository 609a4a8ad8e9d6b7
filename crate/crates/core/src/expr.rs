//! Closed-form scalar expressions in `(t, r)` and named parameters.
//!
//! Grammar:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := unary ('^' factor)?
//! unary  := '-'? atom
//! atom   := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! `^` is right associative and binds tighter than unary minus applies to
//! its left operand only through `unary`, so `-x^2` reads as `(-x)^2`.

use std::collections::BTreeMap;
use std::fmt;

use crate::ad::{Jet2, Real};
use crate::error::{Error, Result};

/// Parameter bindings.
pub type Params = BTreeMap<String, f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }
}

/// Expression tree. `t` and `r` are the coordinates; every other bare
/// identifier except `pi` is a named parameter, resolved at evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum Expression {
    Num(f64),
    Pi,
    T,
    R,
    Param(String),
    Neg(Box<Expression>),
    Bin(BinOp, Box<Expression>, Box<Expression>),
    Call(Func, Box<Expression>),
}

/// Evaluation environment: coordinate values, extra named variables and
/// constant parameters, looked up in that order.
pub struct Env<'a, S> {
    pub t: S,
    pub r: S,
    pub vars: &'a [(&'a str, S)],
    pub params: &'a Params,
}

impl Expression {
    pub fn zero() -> Self {
        Expression::Num(0.0)
    }

    pub fn parse(source: &str) -> Result<Expression> {
        Parser::new(source).parse_all()
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expression::Num(x) if *x == 0.0)
    }

    /// Names of all parameters referenced.
    pub fn parameters(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_params(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_params(&self, out: &mut Vec<String>) {
        match self {
            Expression::Param(n) => out.push(n.clone()),
            Expression::Neg(a) | Expression::Call(_, a) => a.collect_params(out),
            Expression::Bin(_, a, b) => {
                a.collect_params(out);
                b.collect_params(out);
            }
            _ => {}
        }
    }

    /// True when the expression depends on neither the coordinates nor any
    /// of the environment's extra variables.
    fn is_constant_in<S>(&self, env: &Env<S>) -> bool {
        match self {
            Expression::T | Expression::R => false,
            Expression::Param(n) => !env.vars.iter().any(|(v, _)| v == n),
            Expression::Neg(a) | Expression::Call(_, a) => a.is_constant_in(env),
            Expression::Bin(_, a, b) => a.is_constant_in(env) && b.is_constant_in(env),
            _ => true,
        }
    }

    /// Generic evaluation.
    pub fn eval<S: Real>(&self, env: &Env<S>) -> Result<S> {
        Ok(match self {
            Expression::Num(x) => S::cst(*x),
            Expression::Pi => S::cst(std::f64::consts::PI),
            Expression::T => env.t,
            Expression::R => env.r,
            Expression::Param(name) => {
                if let Some((_, v)) = env.vars.iter().find(|(n, _)| n == name) {
                    *v
                } else if let Some(v) = env.params.get(name) {
                    S::cst(*v)
                } else {
                    return Err(Error::UnboundParameter(name.clone()));
                }
            }
            Expression::Neg(a) => -a.eval(env)?,
            Expression::Bin(op, a, b) => {
                let x = a.eval(env)?;
                match op {
                    BinOp::Add => x + b.eval(env)?,
                    BinOp::Sub => x - b.eval(env)?,
                    BinOp::Mul => x * b.eval(env)?,
                    BinOp::Div => {
                        let y = b.eval(env)?;
                        if y.val() == 0.0 {
                            return Err(Error::Domain("division by zero".into()));
                        }
                        x / y
                    }
                    BinOp::Pow => return eval_pow(x, b, env),
                }
            }
            Expression::Call(f, a) => {
                let x = a.eval(env)?;
                let v = x.val();
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Tan => {
                        if v.cos() == 0.0 {
                            return Err(Error::Domain(format!("tan({v}) is undefined")));
                        }
                        x.tan()
                    }
                    Func::Exp => x.exp(),
                    Func::Ln => {
                        if v <= 0.0 {
                            return Err(Error::Domain(format!("ln of non-positive value {v}")));
                        }
                        x.ln()
                    }
                    Func::Sqrt => {
                        if v <= 0.0 {
                            return Err(Error::Domain(format!("sqrt of non-positive value {v}")));
                        }
                        x.sqrt()
                    }
                    Func::Abs => x.abs(),
                }
            }
        })
    }

    /// Value and partials to second order at `(t, r)`.
    pub fn eval_jet2(&self, t: f64, r: f64, params: &Params) -> Result<Jet2> {
        self.eval(&Env {
            t: Jet2::var_t(t),
            r: Jet2::var_r(r),
            vars: &[],
            params,
        })
    }

    pub fn eval_f64(&self, t: f64, r: f64, params: &Params) -> Result<f64> {
        self.eval(&Env {
            t,
            r,
            vars: &[],
            params,
        })
    }

    /// Symbolic partial derivative with respect to `t`, `r` or a named
    /// variable.
    pub fn derivative(&self, var: &str) -> Expression {
        use Expression as E;
        match self {
            E::Num(_) | E::Pi => E::zero(),
            E::T => num(if var == "t" { 1.0 } else { 0.0 }),
            E::R => num(if var == "r" { 1.0 } else { 0.0 }),
            E::Param(n) => num(if n == var { 1.0 } else { 0.0 }),
            E::Neg(a) => neg(a.derivative(var)),
            E::Bin(op, a, b) => {
                let (da, db) = (a.derivative(var), b.derivative(var));
                let (a, b) = ((**a).clone(), (**b).clone());
                match op {
                    BinOp::Add => add(da, db),
                    BinOp::Sub => sub(da, db),
                    BinOp::Mul => add(mul(da, b.clone()), mul(a, db)),
                    BinOp::Div => div(
                        sub(mul(da, b.clone()), mul(a, db)),
                        pow(b.clone(), num(2.0)),
                    ),
                    BinOp::Pow => {
                        if db.is_zero() {
                            let lowered = sub(b.clone(), num(1.0));
                            mul(mul(b, pow(a, lowered)), da)
                        } else {
                            let this = pow(a.clone(), b.clone());
                            mul(
                                this,
                                add(mul(db, call(Func::Ln, a.clone())), div(mul(b, da), a)),
                            )
                        }
                    }
                }
            }
            E::Call(f, a) => {
                let da = a.derivative(var);
                let a = (**a).clone();
                let outer = match f {
                    Func::Sin => call(Func::Cos, a),
                    Func::Cos => neg(call(Func::Sin, a)),
                    Func::Tan => add(num(1.0), pow(call(Func::Tan, a), num(2.0))),
                    Func::Exp => call(Func::Exp, a),
                    Func::Ln => div(num(1.0), a),
                    Func::Sqrt => div(num(0.5), call(Func::Sqrt, a)),
                    Func::Abs => div(a.clone(), call(Func::Abs, a)),
                };
                mul(outer, da)
            }
        }
    }

    /// Replaces every occurrence of parameter `name` by `with`.
    pub fn substitute(&self, name: &str, with: &Expression) -> Expression {
        use Expression as E;
        match self {
            E::Param(n) if n == name => with.clone(),
            E::Neg(a) => neg(a.substitute(name, with)),
            E::Bin(op, a, b) => {
                let (a, b) = (a.substitute(name, with), b.substitute(name, with));
                match op {
                    BinOp::Add => add(a, b),
                    BinOp::Sub => sub(a, b),
                    BinOp::Mul => mul(a, b),
                    BinOp::Div => div(a, b),
                    BinOp::Pow => pow(a, b),
                }
            }
            E::Call(f, a) => call(*f, a.substitute(name, with)),
            other => other.clone(),
        }
    }
}

fn eval_pow<S: Real>(x: S, exponent: &Expression, env: &Env<S>) -> Result<S> {
    let constant = if exponent.is_constant_in(env) {
        Some(exponent.eval(&Env {
            t: 0.0,
            r: 0.0,
            vars: &[],
            params: env.params,
        })?)
    } else {
        None
    };
    if let Some(p) = &constant {
        if p.fract() == 0.0 && p.abs() <= 64.0 {
            if *p < 0.0 && x.val() == 0.0 {
                return Err(Error::Domain("zero raised to a negative power".into()));
            }
            return Ok(x.powi(*p as i32));
        }
        if x.val() <= 0.0 {
            return Err(Error::Domain(format!(
                "non-positive base {} with fractional exponent {p}",
                x.val()
            )));
        }
        return Ok(x.powf(*p));
    }
    let y = exponent.eval(env)?;
    if x.val() <= 0.0 {
        return Err(Error::Domain(format!(
            "non-positive base {} with non-constant exponent",
            x.val()
        )));
    }
    Ok((y * x.ln()).exp())
}

/// Literal constructor.
pub fn num(x: f64) -> Expression {
    Expression::Num(x)
}

pub fn neg(a: Expression) -> Expression {
    match a {
        Expression::Num(x) => num(-x),
        Expression::Neg(inner) => *inner,
        other => Expression::Neg(Box::new(other)),
    }
}

pub fn add(a: Expression, b: Expression) -> Expression {
    match (&a, &b) {
        (Expression::Num(x), Expression::Num(y)) => num(x + y),
        _ if a.is_zero() => b,
        _ if b.is_zero() => a,
        _ => Expression::Bin(BinOp::Add, Box::new(a), Box::new(b)),
    }
}

pub fn sub(a: Expression, b: Expression) -> Expression {
    match (&a, &b) {
        (Expression::Num(x), Expression::Num(y)) => num(x - y),
        _ if b.is_zero() => a,
        _ if a.is_zero() => neg(b),
        _ => Expression::Bin(BinOp::Sub, Box::new(a), Box::new(b)),
    }
}

pub fn mul(a: Expression, b: Expression) -> Expression {
    match (&a, &b) {
        (Expression::Num(x), Expression::Num(y)) => num(x * y),
        _ if a.is_zero() || b.is_zero() => Expression::zero(),
        (Expression::Num(x), _) if *x == 1.0 => b,
        (_, Expression::Num(y)) if *y == 1.0 => a,
        _ => Expression::Bin(BinOp::Mul, Box::new(a), Box::new(b)),
    }
}

pub fn div(a: Expression, b: Expression) -> Expression {
    match (&a, &b) {
        _ if a.is_zero() => Expression::zero(),
        (_, Expression::Num(y)) if *y == 1.0 => a,
        _ => Expression::Bin(BinOp::Div, Box::new(a), Box::new(b)),
    }
}

pub fn pow(a: Expression, b: Expression) -> Expression {
    match (&a, &b) {
        (_, Expression::Num(y)) if *y == 0.0 => num(1.0),
        (_, Expression::Num(y)) if *y == 1.0 => a,
        _ => Expression::Bin(BinOp::Pow, Box::new(a), Box::new(b)),
    }
}

pub fn call(f: Func, a: Expression) -> Expression {
    Expression::Call(f, Box::new(a))
}

impl std::ops::Add for Expression {
    type Output = Expression;
    fn add(self, o: Expression) -> Expression {
        add(self, o)
    }
}
impl std::ops::Sub for Expression {
    type Output = Expression;
    fn sub(self, o: Expression) -> Expression {
        sub(self, o)
    }
}
impl std::ops::Mul for Expression {
    type Output = Expression;
    fn mul(self, o: Expression) -> Expression {
        mul(self, o)
    }
}
impl std::ops::Div for Expression {
    type Output = Expression;
    fn div(self, o: Expression) -> Expression {
        div(self, o)
    }
}
impl std::ops::Neg for Expression {
    type Output = Expression;
    fn neg(self) -> Expression {
        neg(self)
    }
}

// Printing: precedence levels 1 (+ -), 2 (* /), 3 (^), 4 (unary), 5 (atom).
fn prec(e: &Expression) -> u8 {
    match e {
        Expression::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
        Expression::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
        Expression::Bin(BinOp::Pow, ..) => 3,
        Expression::Neg(_) => 4,
        Expression::Num(x) if *x < 0.0 || x.is_nan() => 4,
        _ => 5,
    }
}

fn write_wrapped(f: &mut fmt::Formatter<'_>, e: &Expression, min: u8) -> fmt::Result {
    if prec(e) < min {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expression::Num(x) => {
                if *x < 0.0 {
                    write!(f, "-{}", -x)
                } else {
                    write!(f, "{x}")
                }
            }
            Expression::Pi => write!(f, "pi"),
            Expression::T => write!(f, "t"),
            Expression::R => write!(f, "r"),
            Expression::Param(n) => write!(f, "{n}"),
            Expression::Neg(a) => {
                write!(f, "-")?;
                // The operand of unary minus must be an atom.
                write_wrapped(f, a, 5)
            }
            Expression::Bin(op, a, b) => {
                let (sym, lmin, rmin) = match op {
                    BinOp::Add => ("+", 1, 2),
                    BinOp::Sub => ("-", 1, 2),
                    BinOp::Mul => ("*", 2, 3),
                    BinOp::Div => ("/", 2, 3),
                    BinOp::Pow => ("^", 4, 3),
                };
                write_wrapped(f, a, lmin)?;
                write!(f, "{sym}")?;
                write_wrapped(f, b, rmin)
            }
            Expression::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

fn expected(position: usize, items: &[&str]) -> Error {
    Error::Syntax {
        position,
        expected: items.iter().map(|s| s.to_string()).collect(),
    }
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser {
            src: src.as_bytes(),
            pos: 0,
        }
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

    fn parse_all(mut self) -> Result<Expression> {
        if self.peek().is_none() {
            return Err(expected(self.pos, &["expression"]));
        }
        let e = self.expr()?;
        if self.peek().is_some() {
            return Err(expected(self.pos, &["operator", "end of input"]));
        }
        Ok(e)
    }

    fn expr(&mut self) -> Result<Expression> {
        let mut lhs = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            let op = if c == b'+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expression::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expression> {
        let mut lhs = self.factor()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.factor()?;
            let op = if c == b'*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expression::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expression> {
        let base = self.unary()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exponent = self.factor()?;
            return Ok(Expression::Bin(
                BinOp::Pow,
                Box::new(base),
                Box::new(exponent),
            ));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<Expression> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            let a = self.atom()?;
            return Ok(Expression::Neg(Box::new(a)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expression> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(expected(self.pos, &["')'"]));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                if self.peek() == Some(b'(') {
                    let func = Func::from_name(name)
                        .ok_or_else(|| Error::UnknownIdentifier(name.to_string()))?;
                    self.pos += 1;
                    let arg = self.expr()?;
                    if self.peek() != Some(b')') {
                        return Err(expected(self.pos, &["')'"]));
                    }
                    self.pos += 1;
                    return Ok(Expression::Call(func, Box::new(arg)));
                }
                if Func::from_name(name).is_some() {
                    return Err(expected(self.pos, &["'('"]));
                }
                Ok(match name {
                    "t" => Expression::T,
                    "r" => Expression::R,
                    "pi" => Expression::Pi,
                    _ => Expression::Param(name.to_string()),
                })
            }
            _ => Err(expected(self.pos, &["number", "identifier", "'('", "'-'"])),
        }
    }

    fn number(&mut self) -> Result<Expression> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut n = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            return Err(expected(start, &["digit"]));
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse::<f64>()
            .map(Expression::Num)
            .map_err(|_| expected(start, &["number"]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p(s: &str) -> Expression {
        Expression::parse(s).unwrap()
    }

    #[test]
    fn parses_example_coefficient() {
        let mut params = Params::new();
        params.insert("alpha".into(), 3.0);
        let j = p("2*r*(alpha-2)").eval_jet2(0.4, 1.7, &params).unwrap();
        assert_relative_eq!(j.value, 2.0 * 1.7);
        assert_relative_eq!(j.d_r, 2.0);
    }

    #[test]
    fn zero_is_constant_zero_jet() {
        let j = p("0").eval_jet2(1.0, 2.0, &Params::new()).unwrap();
        assert_eq!(j, Jet2::default());
    }

    #[test]
    fn bilinear_jet() {
        let j = p("t*r").eval_jet2(2.0, 3.0, &Params::new()).unwrap();
        assert_eq!(
            (j.value, j.d_t, j.d_r, j.d_tr, j.d_tt, j.d_rr),
            (6.0, 3.0, 2.0, 1.0, 0.0, 0.0)
        );
    }

    #[test]
    fn sine_at_origin() {
        let j = p("sin(t)").eval_jet2(0.0, 5.0, &Params::new()).unwrap();
        assert_eq!((j.value, j.d_t, j.d_tt), (0.0, 1.0, 0.0));
    }

    #[test]
    fn right_associative_power_and_unary_binding() {
        let ps = Params::new();
        assert_eq!(p("2^3^2").eval_f64(0.0, 0.0, &ps).unwrap(), 512.0);
        assert_eq!(p("-t^2").eval_f64(3.0, 0.0, &ps).unwrap(), 9.0);
        assert_eq!(p("0-t^2").eval_f64(3.0, 0.0, &ps).unwrap(), -9.0);
        assert_eq!(p("2^-1").eval_f64(0.0, 0.0, &ps).unwrap(), 0.5);
    }

    #[test]
    fn syntax_errors_carry_position() {
        match Expression::parse("t + * r") {
            Err(Error::Syntax { position, .. }) => assert_eq!(position, 4),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            Expression::parse("(t"),
            Err(Error::Syntax { position: 2, .. })
        ));
        assert!(matches!(Expression::parse(""), Err(Error::Syntax { .. })));
        assert!(matches!(
            Expression::parse("t r"),
            Err(Error::Syntax { position: 2, .. })
        ));
    }

    #[test]
    fn unknown_function_is_reported() {
        assert_eq!(
            Expression::parse("foo(t)"),
            Err(Error::UnknownIdentifier("foo".into()))
        );
    }

    #[test]
    fn unbound_and_domain_errors() {
        let ps = Params::new();
        assert_eq!(
            p("beta*t").eval_f64(1.0, 1.0, &ps),
            Err(Error::UnboundParameter("beta".into()))
        );
        assert!(matches!(
            p("ln(t)").eval_jet2(-1.0, 0.0, &ps),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            p("sqrt(r)").eval_jet2(0.0, 0.0, &ps),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            p("1/(t-1)").eval_jet2(1.0, 0.0, &ps),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            p("t^0.5").eval_f64(-1.0, 0.0, &ps),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn exponential_matches_central_differences() {
        let e = p("exp((r-t)^2)");
        let ps = Params::new();
        let j = e.eval_jet2(1.0, 2.0, &ps).unwrap();
        let h = 1e-5;
        let f = |t: f64, r: f64| e.eval_f64(t, r, &ps).unwrap();
        let fd_t = (f(1.0 + h, 2.0) - f(1.0 - h, 2.0)) / (2.0 * h);
        assert_relative_eq!(j.value, std::f64::consts::E, max_relative = 1e-15);
        assert_relative_eq!(j.d_t, -2.0 * std::f64::consts::E, max_relative = 1e-14);
        assert_relative_eq!(j.d_t, fd_t, max_relative = 1e-6);
    }

    #[test]
    fn symbolic_derivative_of_k9() {
        // k9 = (1/3) d_r Phi with Phi = t r gives t/3.
        let phi = p("t*r");
        let k9 = mul(div(num(1.0), num(3.0)), phi.derivative("r"));
        assert_relative_eq!(k9.eval_f64(3.0, 7.0, &Params::new()).unwrap(), 1.0);
        let j = p("(1/3)*t").eval_jet2(3.0, 0.0, &Params::new()).unwrap();
        assert_relative_eq!(j.value, 1.0);
    }

    #[test]
    fn print_round_trip() {
        let ps: Params = [("alpha".to_string(), 1.5)].into_iter().collect();
        for s in [
            "2*r*(alpha-2)",
            "-t^2",
            "(0-t)^2",
            "a^b^c",
            "(a^b)^c",
            "t/(r*t)",
            "t-(r-t)",
            "exp(-(r-t)^2)",
            "2.5e-3*abs(t-r)",
            "-(t+r)",
        ] {
            let e = p(s);
            let back = p(&e.to_string());
            let mut ps2 = ps.clone();
            ps2.insert("a".into(), 1.3);
            ps2.insert("b".into(), 0.7);
            ps2.insert("c".into(), 1.1);
            let v1 = e.eval_f64(0.8, 1.9, &ps2).unwrap();
            let v2 = back.eval_f64(0.8, 1.9, &ps2).unwrap();
            assert_eq!(v1, v2, "{s} -> {e}");
        }
    }
}
