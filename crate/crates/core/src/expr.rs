//! A small arithmetic expression language with symbolic differentiation.
//!
//! Grammar: `+ - * / ^`, unary minus, parentheses, numeric literals, the
//! constants `pi` and `e`, the functions `exp log sin cos tan sinh cosh tanh
//! sqrt`, and a caller-supplied list of variable names (for instance
//! `x1..xm` for base-point functions or `t` for warping profiles).
//!
//! Derivatives are exact: [`Expr::diff`] builds a new tree, folding constants
//! as it goes so repeated differentiation stays compact.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::GeomError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Sqrt,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "log" | "ln" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "tanh" => Func::Tanh,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Sqrt => "sqrt",
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Exp => v.exp(),
            Func::Log => v.ln(),
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Tan => v.tan(),
            Func::Sinh => v.sinh(),
            Func::Cosh => v.cosh(),
            Func::Tanh => v.tanh(),
            Func::Sqrt => v.sqrt(),
        }
    }
}

/// Expression tree. Variables are indices into the evaluation slice.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

fn konst(e: &Expr) -> Option<f64> {
    match e {
        Expr::Const(c) => Some(*c),
        _ => None,
    }
}

// Smart constructors fold constants and drop neutral elements.
fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(-c),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (konst(&a), konst(&b)) {
        (Some(x), Some(y)) => Expr::Const(x + y),
        (Some(0.0), _) => b,
        (_, Some(0.0)) => a,
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (konst(&a), konst(&b)) {
        (Some(x), Some(y)) => Expr::Const(x - y),
        (Some(0.0), _) => neg(b),
        (_, Some(0.0)) => a,
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (konst(&a), konst(&b)) {
        (Some(x), Some(y)) => Expr::Const(x * y),
        (Some(0.0), _) => Expr::Const(0.0),
        (_, Some(0.0)) => Expr::Const(0.0),
        (Some(1.0), _) => b,
        (_, Some(1.0)) => a,
        (Some(-1.0), _) => neg(b),
        (_, Some(-1.0)) => neg(a),
        _ => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (konst(&a), konst(&b)) {
        (Some(x), Some(y)) if y != 0.0 => Expr::Const(x / y),
        (Some(0.0), _) => Expr::Const(0.0),
        (_, Some(1.0)) => a,
        _ => Expr::Div(Box::new(a), Box::new(b)),
    }
}

fn pow(a: Expr, b: Expr) -> Expr {
    match (konst(&a), konst(&b)) {
        (Some(x), Some(y)) => Expr::Const(x.powf(y)),
        (_, Some(0.0)) => Expr::Const(1.0),
        (_, Some(1.0)) => a,
        _ => Expr::Pow(Box::new(a), Box::new(b)),
    }
}

fn call(f: Func, a: Expr) -> Expr {
    match konst(&a) {
        Some(x) => Expr::Const(f.apply(x)),
        None => Expr::Call(f, Box::new(a)),
    }
}

impl Expr {
    pub fn constant(c: f64) -> Expr {
        Expr::Const(c)
    }

    pub fn var(i: usize) -> Expr {
        Expr::Var(i)
    }

    /// Parses `src` with the given variable names (index order).
    pub fn parse(src: &str, vars: &[&str]) -> Result<Expr, GeomError> {
        Self::parse_with(src, vars, &BTreeMap::new())
    }

    /// Parses with additional named constants (`params`), e.g. `a = 2`.
    pub fn parse_with(
        src: &str,
        vars: &[&str],
        params: &BTreeMap<String, f64>,
    ) -> Result<Expr, GeomError> {
        let tokens = tokenize(src)?;
        let mut p = Parser {
            tokens,
            pos: 0,
            vars,
            params,
            src,
        };
        let e = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(e)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => x[*i],
            Expr::Neg(a) => -a.eval(x),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Pow(a, b) => {
                let base = a.eval(x);
                match konst(b) {
                    Some(n) if n.fract() == 0.0 && n.abs() < 64.0 => base.powi(n as i32),
                    _ => base.powf(b.eval(x)),
                }
            }
            Expr::Call(f, a) => f.apply(a.eval(x)),
        }
    }

    /// Largest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Neg(a) | Expr::Call(_, a) => a.max_var(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => match (a.max_var(), b.max_var()) {
                (Some(p), Some(q)) => Some(p.max(q)),
                (p, q) => p.or(q),
            },
        }
    }

    /// Exact partial derivative with respect to variable `v`.
    pub fn diff(&self, v: usize) -> Expr {
        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Var(i) => Expr::Const(if *i == v { 1.0 } else { 0.0 }),
            Expr::Neg(a) => neg(a.diff(v)),
            Expr::Add(a, b) => add(a.diff(v), b.diff(v)),
            Expr::Sub(a, b) => sub(a.diff(v), b.diff(v)),
            Expr::Mul(a, b) => add(
                mul(a.diff(v), (**b).clone()),
                mul((**a).clone(), b.diff(v)),
            ),
            Expr::Div(a, b) => {
                // (a'b - ab') / b^2
                let num = sub(
                    mul(a.diff(v), (**b).clone()),
                    mul((**a).clone(), b.diff(v)),
                );
                div(num, pow((**b).clone(), Expr::Const(2.0)))
            }
            Expr::Pow(a, b) => {
                let da = a.diff(v);
                match konst(b) {
                    Some(n) => mul(
                        mul(Expr::Const(n), pow((**a).clone(), Expr::Const(n - 1.0))),
                        da,
                    ),
                    None => {
                        // a^b (b' ln a + b a'/a)
                        let db = b.diff(v);
                        let inner = add(
                            mul(db, call(Func::Log, (**a).clone())),
                            div(mul((**b).clone(), da), (**a).clone()),
                        );
                        mul(self.clone(), inner)
                    }
                }
            }
            Expr::Call(f, a) => {
                let da = a.diff(v);
                if konst(&da) == Some(0.0) {
                    return Expr::Const(0.0);
                }
                let u = (**a).clone();
                let outer = match f {
                    Func::Exp => call(Func::Exp, u),
                    Func::Log => div(Expr::Const(1.0), u),
                    Func::Sin => call(Func::Cos, u),
                    Func::Cos => neg(call(Func::Sin, u)),
                    Func::Tan => div(
                        Expr::Const(1.0),
                        pow(call(Func::Cos, u), Expr::Const(2.0)),
                    ),
                    Func::Sinh => call(Func::Cosh, u),
                    Func::Cosh => call(Func::Sinh, u),
                    Func::Tanh => sub(
                        Expr::Const(1.0),
                        pow(call(Func::Tanh, u), Expr::Const(2.0)),
                    ),
                    Func::Sqrt => div(Expr::Const(0.5), call(Func::Sqrt, u)),
                };
                mul(outer, da)
            }
        }
    }

    /// Renders with the given variable names; parses back to an equal value.
    pub fn render(&self, vars: &[&str]) -> String {
        Rendered { e: self, vars }.to_string()
    }
}

struct Rendered<'a> {
    e: &'a Expr,
    vars: &'a [&'a str],
}

impl<'a> fmt::Display for Rendered<'a> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = |e: &'a Expr| Rendered { e, vars: self.vars };
        match self.e {
            Expr::Const(c) => {
                if *c < 0.0 {
                    write!(f, "({c:?})")
                } else {
                    write!(f, "{c:?}")
                }
            }
            Expr::Var(i) => match self.vars.get(*i) {
                Some(name) => write!(f, "{name}"),
                None => write!(f, "v{i}"),
            },
            Expr::Neg(a) => write!(f, "(-{})", r(a)),
            Expr::Add(a, b) => write!(f, "({} + {})", r(a), r(b)),
            Expr::Sub(a, b) => write!(f, "({} - {})", r(a), r(b)),
            Expr::Mul(a, b) => write!(f, "({} * {})", r(a), r(b)),
            Expr::Div(a, b) => write!(f, "({} / {})", r(a), r(b)),
            Expr::Pow(a, b) => write!(f, "({} ^ {})", r(a), r(b)),
            Expr::Call(func, a) => write!(f, "{}({})", func.name(), r(a)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>, GeomError> {
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
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let save = i;
                i += 1;
                if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                    i += 1;
                }
                if i < chars.len() && chars[i].is_ascii_digit() {
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                } else {
                    // a bare `e` is left for the identifier scanner
                    i = save;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v: f64 = text.parse().map_err(|_| GeomError::Parse {
                message: format!("bad number literal '{text}'"),
                position: start,
            })?;
            out.push((Tok::Num(v), start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), start));
        } else if "+-*/^(),".contains(c) {
            out.push((Tok::Op(c), i));
            i += 1;
        } else if c == '\u{2212}' {
            out.push((Tok::Op('-'), i));
            i += 1;
        } else if c == '\u{00d7}' {
            out.push((Tok::Op('*'), i));
            i += 1;
        } else {
            return Err(GeomError::Parse {
                message: format!("unexpected character '{c}'"),
                position: i,
            });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
    vars: &'a [&'a str],
    params: &'a BTreeMap<String, f64>,
    src: &'a str,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> GeomError {
        let position = self
            .tokens
            .get(self.pos)
            .map(|t| t.1)
            .unwrap_or(self.src.chars().count());
        GeomError::Parse {
            message: message.to_string(),
            position,
        }
    }

    fn peek_op(&self) -> Option<char> {
        match self.tokens.get(self.pos) {
            Some((Tok::Op(c), _)) => Some(*c),
            _ => None,
        }
    }

    fn expect(&mut self, op: char) -> Result<(), GeomError> {
        if self.peek_op() == Some(op) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected '{op}'")))
        }
    }

    fn expr(&mut self) -> Result<Expr, GeomError> {
        let mut lhs = self.term()?;
        while let Some(op) = self.peek_op() {
            match op {
                '+' => {
                    self.pos += 1;
                    lhs = add(lhs, self.term()?);
                }
                '-' => {
                    self.pos += 1;
                    lhs = sub(lhs, self.term()?);
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, GeomError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.peek_op() {
            match op {
                '*' => {
                    self.pos += 1;
                    lhs = mul(lhs, self.unary()?);
                }
                '/' => {
                    self.pos += 1;
                    lhs = div(lhs, self.unary()?);
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, GeomError> {
        match self.peek_op() {
            Some('-') => {
                self.pos += 1;
                Ok(neg(self.unary()?))
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, GeomError> {
        let base = self.atom()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(pow(base, exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, GeomError> {
        let Some((tok, _)) = self.tokens.get(self.pos).cloned() else {
            return Err(self.error("unexpected end of input"));
        };
        match tok {
            Tok::Num(v) => {
                self.pos += 1;
                Ok(Expr::Const(v))
            }
            Tok::Op('(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.pos += 1;
                if let Some(func) = Func::from_name(&name) {
                    self.expect('(')?;
                    let arg = self.expr()?;
                    self.expect(')')?;
                    return Ok(call(func, arg));
                }
                if let Some(i) = self.vars.iter().position(|v| *v == name) {
                    return Ok(Expr::Var(i));
                }
                if let Some(v) = self.params.get(&name) {
                    return Ok(Expr::Const(*v));
                }
                match name.as_str() {
                    "pi" => Ok(Expr::Const(std::f64::consts::PI)),
                    "e" => Ok(Expr::Const(std::f64::consts::E)),
                    _ => {
                        self.pos -= 1;
                        Err(self.error(&format!("unknown identifier '{name}'")))
                    }
                }
            }
            Tok::Op(c) => Err(self.error(&format!("unexpected '{c}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(src: &str) -> Expr {
        Expr::parse(src, &["x1", "x2"]).unwrap()
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(p("1 + 2 * 3").eval(&[0.0, 0.0]), 7.0);
        assert_eq!(p("2 ^ 3 ^ 2").eval(&[0.0, 0.0]), 512.0);
        assert_eq!(p("-2 ^ 2").eval(&[0.0, 0.0]), -4.0);
        assert_eq!(p("2 ^ -1").eval(&[0.0, 0.0]), 0.5);
        assert_eq!(p("8 / 4 / 2").eval(&[0.0, 0.0]), 1.0);
        assert_eq!(p("1 - 2 - 3").eval(&[0.0, 0.0]), -4.0);
        assert!((p("2*e").eval(&[0.0, 0.0]) - 2.0 * std::f64::consts::E).abs() < 1e-15);
        assert_eq!(p("1.5e-3").eval(&[0.0, 0.0]), 1.5e-3);
    }

    #[test]
    fn variables_and_functions() {
        let e = p("x1 * exp(x2) + log(x1)");
        let v = e.eval(&[2.0, 0.5]);
        assert!((v - (2.0 * 0.5f64.exp() + 2f64.ln())).abs() < 1e-14);
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = Expr::parse("x1 + foo", &["x1"]).unwrap_err();
        match err {
            GeomError::Parse { position, .. } => assert_eq!(position, 5),
            other => panic!("unexpected {other:?}"),
        }
        assert!(Expr::parse("(x1", &["x1"]).is_err());
        assert!(Expr::parse("x1 x1", &["x1"]).is_err());
        assert!(Expr::parse("cosh t)", &["t"]).is_err());
        assert!(Expr::parse("", &["t"]).is_err());
        assert!(Expr::parse("1 $ 2", &["t"]).is_err());
    }

    #[test]
    fn params_substitute_constants() {
        let mut params = BTreeMap::new();
        params.insert("a".to_string(), 3.0);
        let e = Expr::parse_with("a * log(x2)", &["x1", "x2"], &params).unwrap();
        assert!((e.eval(&[0.0, std::f64::consts::E]) - 3.0).abs() < 1e-15);
    }

    // Central differences as an independent check of the symbolic derivative.
    fn fd(e: &Expr, x: &[f64], v: usize) -> f64 {
        let h = 1e-6;
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[v] += h;
        xm[v] -= h;
        (e.eval(&xp) - e.eval(&xm)) / (2.0 * h)
    }

    #[test]
    fn derivatives_match_central_differences() {
        let exprs = [
            "sin(x1) * cosh(x2)",
            "exp(-x1^2 - log(x2)^2)",
            "tan(x1) / sqrt(x2)",
            "x2 ^ x1",
            "tanh(x1 * x2) - sinh(x1) / x2^3",
            "1 / x2^2",
        ];
        let x = [0.3, 1.7];
        for src in exprs {
            let e = p(src);
            for v in 0..2 {
                let exact = e.diff(v).eval(&x);
                let approx = fd(&e, &x, v);
                assert!(
                    (exact - approx).abs() < 1e-7 * (1.0 + exact.abs()),
                    "{src} d/dx{v}: {exact} vs {approx}"
                );
            }
        }
    }

    #[test]
    fn render_parses_back() {
        let vars = ["x1", "x2"];
        for src in ["-x1 + 2*x2^3", "exp(-(x1 - 0.5)^2) / cosh(x2)", "x1 - -3"] {
            let e = p(src);
            let again = Expr::parse(&e.render(&vars), &vars).unwrap();
            let x = [0.7, -1.3];
            assert_eq!(e.eval(&x), again.eval(&x), "{src}");
        }
    }

    #[test]
    fn constant_folding_keeps_trees_small() {
        let e = p("3 * x1");
        assert_eq!(e.diff(0), Expr::Const(3.0));
        assert_eq!(e.diff(1), Expr::Const(0.0));
        assert_eq!(p("x1^2").diff(0).diff(0), Expr::Const(2.0));
    }
}
