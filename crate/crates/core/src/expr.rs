//! Analytic field expressions over `(t, x, y, z)`.
//!
//! Grammar:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := ('+' | '-') unary | power
//! power   := primary ('^' unary)?          right-associative
//! primary := number | 't' | 'x' | 'y' | 'z'
//!          | func '(' expr ')' | '(' expr ')'
//! func    := sin | cos | exp | sqrt | tanh | abs | log
//! ```
//!
//! `-x^2` parses as `-(x^2)`. Numbers accept the usual decimal and
//! exponent forms (`2`, `0.5`, `1e-3`, `.25`).
//!
//! Expressions can be differentiated symbolically, which is how analytic
//! scenarios get exact derivatives of the quantum potential.

use std::fmt;

use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message} at column {column}: `{token}`")]
pub struct ExprError {
    pub message: String,
    /// Offending token text (empty at end of input).
    pub token: String,
    /// 1-based character column.
    pub column: usize,
}

/// Coordinate index: 0 = t, 1 = x, 2 = y, 3 = z.
pub type Axis = usize;

const VAR_NAMES: [&str; 4] = ["t", "x", "y", "z"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Tanh,
    Abs,
    Log,
    /// Derivative of `abs`; not reachable from the parser.
    Sign,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "tanh" => Func::Tanh,
            "abs" => Func::Abs,
            "log" => Func::Log,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Tanh => "tanh",
            Func::Abs => "abs",
            Func::Log => "log",
            Func::Sign => "sign",
        }
    }

    fn apply<T: Real>(self, v: T) -> T {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Exp => v.exp(),
            Func::Sqrt => v.sqrt(),
            Func::Tanh => v.tanh(),
            Func::Abs => v.abs(),
            Func::Log => v.ln(),
            Func::Sign => {
                if v > T::zero() {
                    T::one()
                } else if v < T::zero() {
                    -T::one()
                } else {
                    T::zero()
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Axis),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

// Smart constructors fold constants and drop neutral elements so repeated
// differentiation stays compact.
fn konst(v: f64) -> Expr {
    Expr::Const(v)
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(v) => konst(-v),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Const(x), Expr::Const(y)) => konst(x + y),
        (Expr::Const(z), e) | (e, Expr::Const(z)) if z == 0.0 => e,
        (a, Expr::Neg(b)) => sub(a, *b),
        (a, b) => Expr::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Const(x), Expr::Const(y)) => konst(x - y),
        (e, Expr::Const(z)) if z == 0.0 => e,
        (Expr::Const(z), e) if z == 0.0 => neg(e),
        (a, b) => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Const(x), Expr::Const(y)) => konst(x * y),
        (Expr::Const(z), _) | (_, Expr::Const(z)) if z == 0.0 => konst(0.0),
        (Expr::Const(o), e) | (e, Expr::Const(o)) if o == 1.0 => e,
        (Expr::Const(m), e) | (e, Expr::Const(m)) if m == -1.0 => neg(e),
        (a, b) => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Const(x), Expr::Const(y)) if y != 0.0 => konst(x / y),
        (Expr::Const(z), _) if z == 0.0 => konst(0.0),
        (e, Expr::Const(o)) if o == 1.0 => e,
        (a, b) => Expr::Div(Box::new(a), Box::new(b)),
    }
}

fn pow(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Const(x), Expr::Const(y)) => konst(x.powf(y)),
        (_, Expr::Const(z)) if z == 0.0 => konst(1.0),
        (e, Expr::Const(o)) if o == 1.0 => e,
        (a, b) => Expr::Pow(Box::new(a), Box::new(b)),
    }
}

fn call(f: Func, a: Expr) -> Expr {
    match a {
        Expr::Const(v) => konst(f.apply(v)),
        other => Expr::Call(f, Box::new(other)),
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self, ExprError> {
        let tokens = lex(src)?;
        let mut p = Parser { tokens, pos: 0 };
        let e = p.expr()?;
        match p.peek() {
            None => Ok(e),
            Some(tok) => Err(tok.error("unexpected token")),
        }
    }

    pub fn constant(v: f64) -> Self {
        konst(v)
    }

    pub fn var(axis: Axis) -> Self {
        Expr::Var(axis)
    }

    /// Evaluates at `p = (t, x, y, z)`.
    pub fn eval<T: Real>(&self, p: &[T; 4]) -> T {
        match self {
            Expr::Const(v) => T::lit(*v),
            Expr::Var(i) => p[*i],
            Expr::Neg(a) => -a.eval(p),
            Expr::Add(a, b) => a.eval(p) + b.eval(p),
            Expr::Sub(a, b) => a.eval(p) - b.eval(p),
            Expr::Mul(a, b) => a.eval(p) * b.eval(p),
            Expr::Div(a, b) => a.eval(p) / b.eval(p),
            Expr::Pow(a, b) => match **b {
                Expr::Const(n) if n.fract() == 0.0 && n.abs() <= 64.0 => a.eval(p).powi(n as i32),
                _ => a.eval(p).powf(b.eval(p)),
            },
            Expr::Call(f, a) => f.apply(a.eval(p)),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Expr::Const(v) => Some(*v),
            _ => None,
        }
    }

    pub fn depends_on(&self, axis: Axis) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(i) => *i == axis,
            Expr::Neg(a) | Expr::Call(_, a) => a.depends_on(axis),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.depends_on(axis) || b.depends_on(axis)
            }
        }
    }

    /// Symbolic partial derivative with respect to `axis`.
    pub fn derivative(&self, axis: Axis) -> Expr {
        if !self.depends_on(axis) {
            return konst(0.0);
        }
        match self {
            Expr::Const(_) => konst(0.0),
            Expr::Var(i) => konst(if *i == axis { 1.0 } else { 0.0 }),
            Expr::Neg(a) => neg(a.derivative(axis)),
            Expr::Add(a, b) => add(a.derivative(axis), b.derivative(axis)),
            Expr::Sub(a, b) => sub(a.derivative(axis), b.derivative(axis)),
            Expr::Mul(a, b) => add(
                mul(a.derivative(axis), (**b).clone()),
                mul((**a).clone(), b.derivative(axis)),
            ),
            Expr::Div(a, b) => {
                // (a'b - ab') / b²
                let num = sub(
                    mul(a.derivative(axis), (**b).clone()),
                    mul((**a).clone(), b.derivative(axis)),
                );
                div(num, pow((**b).clone(), konst(2.0)))
            }
            Expr::Pow(a, b) => {
                if let Some(n) = b.as_constant() {
                    // n a^(n-1) a'
                    mul(
                        mul(konst(n), pow((**a).clone(), konst(n - 1.0))),
                        a.derivative(axis),
                    )
                } else {
                    // a^b (b' ln a + b a'/a)
                    let term = add(
                        mul(b.derivative(axis), call(Func::Log, (**a).clone())),
                        div(mul((**b).clone(), a.derivative(axis)), (**a).clone()),
                    );
                    mul(self.clone(), term)
                }
            }
            Expr::Call(f, a) => {
                let inner = (**a).clone();
                let outer = match f {
                    Func::Sin => call(Func::Cos, inner),
                    Func::Cos => neg(call(Func::Sin, inner)),
                    Func::Exp => self.clone(),
                    Func::Sqrt => div(konst(0.5), self.clone()),
                    Func::Tanh => sub(konst(1.0), pow(self.clone(), konst(2.0))),
                    Func::Abs => call(Func::Sign, inner),
                    Func::Log => div(konst(1.0), inner),
                    Func::Sign => konst(0.0),
                };
                mul(outer, a.derivative(axis))
            }
        }
    }

    /// Spatial Laplacian `∂²/∂x² + ∂²/∂y² + ∂²/∂z²`.
    pub fn laplacian(&self) -> Expr {
        (1..4).fold(konst(0.0), |acc, ax| {
            add(acc, self.derivative(ax).derivative(ax))
        })
    }

    pub fn add(self, other: Expr) -> Expr {
        add(self, other)
    }

    pub fn sub(self, other: Expr) -> Expr {
        sub(self, other)
    }

    pub fn mul(self, other: Expr) -> Expr {
        mul(self, other)
    }

    pub fn div(self, other: Expr) -> Expr {
        div(self, other)
    }
}

impl std::str::FromStr for Expr {
    type Err = ExprError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expr::parse(s)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Fully parenthesized so that printing then parsing is the identity
        // on values.
        match self {
            Expr::Const(v) => {
                if *v < 0.0 {
                    write!(f, "(-{:e})", -v)
                } else {
                    write!(f, "{v:e}")
                }
            }
            Expr::Var(i) => f.write_str(VAR_NAMES[*i]),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a} ^ {b})"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokKind {
    Num(f64),
    Ident(String),
    Op(char),
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokKind,
    text: String,
    column: usize,
}

impl Token {
    fn error(&self, message: &str) -> ExprError {
        ExprError {
            message: message.to_string(),
            token: self.text.clone(),
            column: self.column,
        }
    }
}

fn lex(src: &str) -> Result<Vec<Token>, ExprError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
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
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let value = text.parse::<f64>().map_err(|_| ExprError {
                message: "malformed number".into(),
                token: text.clone(),
                column,
            })?;
            out.push(Token { kind: TokKind::Num(value), text, column });
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            out.push(Token { kind: TokKind::Ident(text.clone()), text, column });
        } else if "+-*/^()".contains(c) {
            out.push(Token { kind: TokKind::Op(c), text: c.to_string(), column });
            i += 1;
        } else {
            return Err(ExprError {
                message: "unexpected character".into(),
                token: c.to_string(),
                column,
            });
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_op(&self) -> Option<char> {
        match self.peek()?.kind {
            TokKind::Op(c) => Some(c),
            _ => None,
        }
    }

    fn end_error(&self, message: &str) -> ExprError {
        let column = self
            .tokens
            .last()
            .map_or(1, |t| t.column + t.text.chars().count());
        ExprError { message: message.into(), token: String::new(), column }
    }

    fn expect_op(&mut self, op: char) -> Result<(), ExprError> {
        match self.peek() {
            Some(t) if t.kind == TokKind::Op(op) => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => Err(t.error(&format!("expected `{op}`"))),
            None => Err(self.end_error(&format!("expected `{op}`"))),
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' {
                Expr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' {
                Expr::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        match self.peek_op() {
            Some('-') => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.primary()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        let tok = match self.peek() {
            Some(t) => t.clone(),
            None => return Err(self.end_error("unexpected end of expression")),
        };
        self.pos += 1;
        match &tok.kind {
            TokKind::Num(v) => Ok(Expr::Const(*v)),
            TokKind::Op('(') => {
                let e = self.expr()?;
                self.expect_op(')')?;
                Ok(e)
            }
            TokKind::Op(_) => Err(tok.error("unexpected operator")),
            TokKind::Ident(name) => {
                if let Some(axis) = VAR_NAMES.iter().position(|v| v == name) {
                    return Ok(Expr::Var(axis));
                }
                match Func::from_name(name) {
                    Some(func) => {
                        self.expect_op('(')?;
                        let arg = self.expr()?;
                        self.expect_op(')')?;
                        Ok(Expr::Call(func, Box::new(arg)))
                    }
                    None => Err(tok.error("unknown identifier")),
                }
            }
        }
    }
}
