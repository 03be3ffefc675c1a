//! A small expression language for graph surfaces `x3 = f(x1, x2)`.
//!
//! Grammar: numbers, the variables `x1`, `x2`, the constant `pi`, binary
//! `+ - * / ^`, unary minus, parentheses and the functions `sin cos tan exp
//! ln sqrt`. `^` is right-associative and binds tighter than unary minus.
//! Derivatives are taken symbolically.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
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
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

use Expr::*;

fn num(v: f64) -> Expr {
    Num(v)
}

fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Num(x), _) if *x == 0.0 => b,
        (_, Num(y)) if *y == 0.0 => a,
        (Num(x), Num(y)) => Num(x + y),
        _ => Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (_, Num(y)) if *y == 0.0 => a,
        (Num(x), _) if *x == 0.0 => neg(b),
        (Num(x), Num(y)) => Num(x - y),
        _ => Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Num(x), _) | (_, Num(x)) if *x == 0.0 => Num(0.0),
        (Num(x), _) if *x == 1.0 => b,
        (_, Num(y)) if *y == 1.0 => a,
        (Num(x), Num(y)) => Num(x * y),
        _ => Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Num(x), _) if *x == 0.0 => Num(0.0),
        (_, Num(y)) if *y == 1.0 => a,
        _ => Div(Box::new(a), Box::new(b)),
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Num(x) => Num(-x),
        Neg(inner) => *inner,
        other => Neg(Box::new(other)),
    }
}

fn pow(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (_, Num(y)) if *y == 1.0 => a,
        (_, Num(y)) if *y == 0.0 => Num(1.0),
        _ => Pow(Box::new(a), Box::new(b)),
    }
}

fn call(f: Func, a: Expr) -> Expr {
    Call(f, Box::new(a))
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let tokens = tokenize(src)?;
        let mut p = Parser { tokens, pos: 0 };
        let e = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Expression(format!("unexpected `{}`", p.tokens[p.pos])));
        }
        Ok(e)
    }

    /// Evaluates at `(x1, x2)`.
    pub fn eval(&self, x: [f64; 2]) -> f64 {
        match self {
            Num(v) => *v,
            Var(i) => x[*i],
            Neg(a) => -a.eval(x),
            Add(a, b) => a.eval(x) + b.eval(x),
            Sub(a, b) => a.eval(x) - b.eval(x),
            Mul(a, b) => a.eval(x) * b.eval(x),
            Div(a, b) => a.eval(x) / b.eval(x),
            Pow(a, b) => {
                let base = a.eval(x);
                match **b {
                    Num(n) if n.fract() == 0.0 && n.abs() <= i32::MAX as f64 => base.powi(n as i32),
                    _ => base.powf(b.eval(x)),
                }
            }
            Call(f, a) => {
                let v = a.eval(x);
                match f {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Tan => v.tan(),
                    Func::Exp => v.exp(),
                    Func::Ln => v.ln(),
                    Func::Sqrt => v.sqrt(),
                }
            }
        }
    }

    /// Symbolic partial derivative with respect to `x_{var+1}`.
    pub fn diff(&self, var: usize) -> Expr {
        match self {
            Num(_) => num(0.0),
            Var(i) => num(if *i == var { 1.0 } else { 0.0 }),
            Neg(a) => neg(a.diff(var)),
            Add(a, b) => add(a.diff(var), b.diff(var)),
            Sub(a, b) => sub(a.diff(var), b.diff(var)),
            Mul(a, b) => add(mul(a.diff(var), (**b).clone()), mul((**a).clone(), b.diff(var))),
            Div(a, b) => div(
                sub(mul(a.diff(var), (**b).clone()), mul((**a).clone(), b.diff(var))),
                pow((**b).clone(), num(2.0)),
            ),
            Pow(a, b) => {
                if b.is_constant() {
                    // d(a^n) = n a^(n-1) a'
                    let n = (**b).clone();
                    mul(mul(n.clone(), pow((**a).clone(), sub(n, num(1.0)))), a.diff(var))
                } else {
                    // d(a^b) = a^b (b' ln a + b a'/a)
                    let this = self.clone();
                    mul(
                        this,
                        add(
                            mul(b.diff(var), call(Func::Ln, (**a).clone())),
                            div(mul((**b).clone(), a.diff(var)), (**a).clone()),
                        ),
                    )
                }
            }
            Call(f, a) => {
                let inner = (**a).clone();
                let outer = match f {
                    Func::Sin => call(Func::Cos, inner),
                    Func::Cos => neg(call(Func::Sin, inner)),
                    Func::Tan => div(num(1.0), pow(call(Func::Cos, inner), num(2.0))),
                    Func::Exp => call(Func::Exp, inner),
                    Func::Ln => div(num(1.0), inner),
                    Func::Sqrt => div(num(0.5), call(Func::Sqrt, inner)),
                };
                mul(outer, a.diff(var))
            }
        }
    }

    fn is_constant(&self) -> bool {
        match self {
            Num(_) => true,
            Var(_) => false,
            Neg(a) | Call(_, a) => a.is_constant(),
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) | Pow(a, b) => a.is_constant() && b.is_constant(),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Num(v) => write!(f, "{v}"),
            Var(i) => write!(f, "x{}", i + 1),
            Neg(a) => write!(f, "(-{a})"),
            Add(a, b) => write!(f, "({a} + {b})"),
            Sub(a, b) => write!(f, "({a} - {b})"),
            Mul(a, b) => write!(f, "({a} * {b})"),
            Div(a, b) => write!(f, "({a} / {b})"),
            Pow(a, b) => write!(f, "({a} ^ {b})"),
            Call(func, a) => write!(f, "{}({a})", func.name()),
        }
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
            Token::Num(v) => write!(f, "{v}"),
            Token::Ident(s) => write!(f, "{s}"),
            Token::Op(c) => write!(f, "{c}"),
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
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
            let v = s.parse::<f64>().map_err(|_| Error::Expression(format!("bad number `{s}`")))?;
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
            return Err(Error::Expression(format!("unexpected character `{c}`")));
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

    fn expect(&mut self, c: char) -> Result<()> {
        if self.peek_op() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(Error::Expression(format!("expected `{c}`")))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' { Add(Box::new(lhs), Box::new(rhs)) } else { Sub(Box::new(lhs), Box::new(rhs)) };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' { Mul(Box::new(lhs), Box::new(rhs)) } else { Div(Box::new(lhs), Box::new(rhs)) };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek_op() {
            Some('-') => {
                self.pos += 1;
                Ok(Neg(Box::new(self.unary()?)))
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let tok = self.tokens.get(self.pos).cloned().ok_or_else(|| Error::Expression("unexpected end of input".into()))?;
        self.pos += 1;
        match tok {
            Token::Num(v) => Ok(Num(v)),
            Token::Op('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Token::Ident(name) => match name.as_str() {
                "x1" => Ok(Var(0)),
                "x2" => Ok(Var(1)),
                "pi" => Ok(Num(std::f64::consts::PI)),
                _ => {
                    let f = Func::from_name(&name).ok_or_else(|| Error::Expression(format!("unknown name `{name}`")))?;
                    self.expect('(')?;
                    let arg = self.expr()?;
                    self.expect(')')?;
                    Ok(Call(f, Box::new(arg)))
                }
            },
            Token::Op(c) => Err(Error::Expression(format!("unexpected `{c}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_associativity() {
        let e = Expr::parse("1 + 2 * 3 ^ 2 ^ 0.5 - -x1").unwrap();
        let expected = 1.0 + 2.0 * 3f64.powf(2f64.sqrt()) + 0.5;
        assert!((e.eval([0.5, 0.0]) - expected).abs() < 1e-14);
        assert_eq!(Expr::parse("-x1^2").unwrap().eval([3.0, 0.0]), -9.0);
        assert_eq!(Expr::parse("2e-1*x2").unwrap().eval([0.0, 10.0]), 2.0);
    }

    #[test]
    fn errors() {
        assert!(Expr::parse("x3").is_err());
        assert!(Expr::parse("sin x1").is_err());
        assert!(Expr::parse("(x1").is_err());
        assert!(Expr::parse("x1 $ 2").is_err());
        assert!(Expr::parse("x1 x2").is_err());
        assert!(Expr::parse("").is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let sources = [
            "0.3*x1^2 - 0.2*x1*x2 + 0.1*x2^3",
            "sin(x1)*cos(2*x2)",
            "exp(-(x1^2+x2^2))",
            "sqrt(4 + x1^2 + x2^2)",
            "ln(2 + x1) / (1 + x2^2)",
            "tan(0.3*x1) + (1.5 + x2)^x1",
            "pi*x1",
        ];
        let p = [0.37, -0.21];
        let h = 1e-6;
        for src in sources {
            let e = Expr::parse(src).unwrap();
            for v in 0..2 {
                let d = e.diff(v);
                let mut a = p;
                let mut b = p;
                a[v] += h;
                b[v] -= h;
                let fd = (e.eval(a) - e.eval(b)) / (2.0 * h);
                assert!((d.eval(p) - fd).abs() < 1e-8, "{src} d/dx{}: {} vs {fd}", v + 1, d.eval(p));
            }
        }
    }
}
