//! Scalar expressions in `(x, y)`: parsing, evaluation, symbolic
//! differentiation, and the manufactured source `f = -div(A grad u) + c u`.
//!
//! Grammar (precedence `^` over `*` `/` over `+` `-`, `^` right-associative):
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := unary ('^' factor)?
//! unary  := '-' unary | atom
//! atom   := number | 'x' | 'y' | 'pi' | func '(' expr ')' | '(' expr ')'
//! func   := 'sin' | 'cos' | 'exp' | 'ln'
//! ```

use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("syntax error at position {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdentifier { pos: usize, name: String },
}

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("division by zero in `{subterm}` at ({x}, {y})")]
    DivisionByZero { subterm: String, x: f64, y: f64 },
    #[error("ln of non-positive argument in `{subterm}` at ({x}, {y})")]
    LnNonPositive { subterm: String, x: f64, y: f64 },
    #[error("non-finite result in `{subterm}` at ({x}, {y})")]
    NonFinite { subterm: String, x: f64, y: f64 },
}

#[derive(Debug, Error, PartialEq)]
pub enum ProblemError {
    #[error("manufactured source requires an exact solution expression")]
    MissingExactSolution,
    #[error(transparent)]
    Parse(#[from] ParseError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Exp,
    Ln,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// An immutable expression tree over `(x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr, ParseError> {
        Parser::new(text).parse()
    }

    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn x() -> Expr {
        Expr::Var(Var::X)
    }

    pub fn y() -> Expr {
        Expr::Var(Var::Y)
    }

    /// IEEE double evaluation at `(x, y)`.
    pub fn eval(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        match self {
            Expr::Num(v) => Ok(*v),
            Expr::Var(Var::X) => Ok(x),
            Expr::Var(Var::Y) => Ok(y),
            Expr::Unary(op, a) => {
                let va = a.eval(x, y)?;
                let v = match op {
                    UnaryOp::Neg => -va,
                    UnaryOp::Sin => va.sin(),
                    UnaryOp::Cos => va.cos(),
                    UnaryOp::Exp => va.exp(),
                    UnaryOp::Ln => {
                        if va <= 0.0 {
                            return Err(EvalError::LnNonPositive {
                                subterm: self.to_string(),
                                x,
                                y,
                            });
                        }
                        va.ln()
                    }
                };
                Ok(v)
            }
            Expr::Binary(op, a, b) => {
                let va = a.eval(x, y)?;
                let vb = b.eval(x, y)?;
                let v = match op {
                    BinOp::Add => va + vb,
                    BinOp::Sub => va - vb,
                    BinOp::Mul => va * vb,
                    BinOp::Div => {
                        if vb == 0.0 {
                            return Err(EvalError::DivisionByZero {
                                subterm: self.to_string(),
                                x,
                                y,
                            });
                        }
                        va / vb
                    }
                    BinOp::Pow => va.powf(vb),
                };
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(EvalError::NonFinite {
                        subterm: self.to_string(),
                        x,
                        y,
                    })
                }
            }
        }
    }

    /// True when the subtree contains no variables.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Num(_) => true,
            Expr::Var(_) => false,
            Expr::Unary(_, a) => a.is_constant(),
            Expr::Binary(_, a, b) => a.is_constant() && b.is_constant(),
        }
    }

    /// Exact symbolic derivative with respect to `var`.
    ///
    /// Powers with a non-constant exponent are first rewritten as
    /// `exp(b * ln(a))`.
    pub fn differentiate(&self, var: Var) -> Expr {
        match self {
            Expr::Num(_) => Expr::Num(0.0),
            Expr::Var(v) => Expr::Num(if *v == var { 1.0 } else { 0.0 }),
            Expr::Unary(op, a) => {
                let da = a.differentiate(var);
                match op {
                    UnaryOp::Neg => neg(da),
                    UnaryOp::Sin => mul(cos((**a).clone()), da),
                    UnaryOp::Cos => neg(mul(sin((**a).clone()), da)),
                    UnaryOp::Exp => mul(exp((**a).clone()), da),
                    UnaryOp::Ln => div(da, (**a).clone()),
                }
            }
            Expr::Binary(op, a, b) => {
                let (a, b) = (&**a, &**b);
                match op {
                    BinOp::Add => add(a.differentiate(var), b.differentiate(var)),
                    BinOp::Sub => sub(a.differentiate(var), b.differentiate(var)),
                    BinOp::Mul => add(
                        mul(a.differentiate(var), b.clone()),
                        mul(a.clone(), b.differentiate(var)),
                    ),
                    BinOp::Div => div(
                        sub(
                            mul(a.differentiate(var), b.clone()),
                            mul(a.clone(), b.differentiate(var)),
                        ),
                        mul(b.clone(), b.clone()),
                    ),
                    BinOp::Pow => {
                        if b.is_constant() {
                            // d(a^n) = n * a^(n-1) * a'
                            let n = b.clone();
                            mul(
                                mul(n.clone(), pow(a.clone(), sub(n, Expr::Num(1.0)))),
                                a.differentiate(var),
                            )
                        } else {
                            // a^b = exp(b ln a)
                            exp(mul(b.clone(), ln(a.clone()))).differentiate(var)
                        }
                    }
                }
            }
        }
    }
}

// Smart constructors used by differentiation: fold constants and drop
// additive/multiplicative identities so derivative trees stay small.
fn add(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x + y),
        (Expr::Num(z), b) if z == 0.0 => b,
        (a, Expr::Num(z)) if z == 0.0 => a,
        (a, b) => Expr::Binary(BinOp::Add, Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x - y),
        (a, Expr::Num(z)) if z == 0.0 => a,
        (Expr::Num(z), b) if z == 0.0 => neg(b),
        (a, b) => Expr::Binary(BinOp::Sub, Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x * y),
        (Expr::Num(z), _) | (_, Expr::Num(z)) if z == 0.0 => Expr::Num(0.0),
        (Expr::Num(o), b) if o == 1.0 => b,
        (a, Expr::Num(o)) if o == 1.0 => a,
        (a, b) => Expr::Binary(BinOp::Mul, Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (a, Expr::Num(o)) if o == 1.0 => a,
        (Expr::Num(z), Expr::Num(n)) if z == 0.0 && n != 0.0 => Expr::Num(0.0),
        (a, b) => Expr::Binary(BinOp::Div, Box::new(a), Box::new(b)),
    }
}

fn pow(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (_, Expr::Num(z)) if z == 0.0 => Expr::Num(1.0),
        (a, Expr::Num(o)) if o == 1.0 => a,
        (a, b) => Expr::Binary(BinOp::Pow, Box::new(a), Box::new(b)),
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(x) => Expr::Num(-x),
        Expr::Unary(UnaryOp::Neg, inner) => *inner,
        a => Expr::Unary(UnaryOp::Neg, Box::new(a)),
    }
}

fn sin(a: Expr) -> Expr {
    Expr::Unary(UnaryOp::Sin, Box::new(a))
}
fn cos(a: Expr) -> Expr {
    Expr::Unary(UnaryOp::Cos, Box::new(a))
}
fn exp(a: Expr) -> Expr {
    Expr::Unary(UnaryOp::Exp, Box::new(a))
}
fn ln(a: Expr) -> Expr {
    Expr::Unary(UnaryOp::Ln, Box::new(a))
}

impl fmt::Display for Expr {
    /// Fully parenthesized form; parsing it back yields the same semantics.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => {
                if *v < 0.0 || (v == &0.0 && v.is_sign_negative()) {
                    write!(f, "(-{})", -v)
                } else {
                    write!(f, "{v}")
                }
            }
            Expr::Var(Var::X) => write!(f, "x"),
            Expr::Var(Var::Y) => write!(f, "y"),
            Expr::Unary(UnaryOp::Neg, a) => write!(f, "(-{a})"),
            Expr::Unary(UnaryOp::Sin, a) => write!(f, "sin({a})"),
            Expr::Unary(UnaryOp::Cos, a) => write!(f, "cos({a})"),
            Expr::Unary(UnaryOp::Exp, a) => write!(f, "exp({a})"),
            Expr::Unary(UnaryOp::Ln, a) => write!(f, "ln({a})"),
            Expr::Binary(op, a, b) => {
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({a}{sym}{b})")
            }
        }
    }
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser {
            bytes: text.as_bytes(),
            pos: 0,
        }
    }

    fn parse(mut self) -> Result<Expr, ParseError> {
        let e = self.expr()?;
        self.skip_ws();
        if self.pos != self.bytes.len() {
            return Err(self.syntax("unexpected trailing input"));
        }
        Ok(e)
    }

    fn syntax(&self, message: &str) -> ParseError {
        ParseError::Syntax {
            pos: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Some(c) = self.peek() {
            let op = match c {
                b'+' => BinOp::Add,
                b'-' => BinOp::Sub,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        while let Some(c) = self.peek() {
            let op = match c {
                b'*' => BinOp::Mul,
                b'/' => BinOp::Div,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.unary()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            // right-associative
            let exponent = self.factor()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            let inner = self.unary()?;
            return Ok(Expr::Unary(UnaryOp::Neg, Box::new(inner)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => Err(self.syntax("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.syntax("expected `)`"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.identifier(),
            Some(c) => Err(self.syntax(&format!("unexpected character `{}`", c as char))),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.bytes.len() && {
            let c = self.bytes[self.pos];
            c.is_ascii_digit() || c == b'.'
        } {
            self.pos += 1;
        }
        // optional exponent part: e or E, optional sign, digits
        if self.pos < self.bytes.len() && matches!(self.bytes[self.pos], b'e' | b'E') {
            let mut probe = self.pos + 1;
            if probe < self.bytes.len() && matches!(self.bytes[probe], b'+' | b'-') {
                probe += 1;
            }
            if probe < self.bytes.len() && self.bytes[probe].is_ascii_digit() {
                self.pos = probe;
                while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            }
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        text.parse::<f64>().map(Expr::Num).map_err(|_| ParseError::Syntax {
            pos: start,
            message: format!("invalid number `{text}`"),
        })
    }

    fn identifier(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_alphabetic() {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        match name {
            "x" => Ok(Expr::Var(Var::X)),
            "y" => Ok(Expr::Var(Var::Y)),
            "pi" => Ok(Expr::Num(std::f64::consts::PI)),
            "sin" | "cos" | "exp" | "ln" => {
                if self.peek() != Some(b'(') {
                    return Err(self.syntax(&format!("expected `(` after `{name}`")));
                }
                self.pos += 1;
                let arg = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.syntax("expected `)`"));
                }
                self.pos += 1;
                let op = match name {
                    "sin" => UnaryOp::Sin,
                    "cos" => UnaryOp::Cos,
                    "exp" => UnaryOp::Exp,
                    _ => UnaryOp::Ln,
                };
                Ok(Expr::Unary(op, Box::new(arg)))
            }
            _ => Err(ParseError::UnknownIdentifier {
                pos: start,
                name: name.to_string(),
            }),
        }
    }
}

/// Coefficients and data for `-div(A grad u) + c u = f`, `u = g` on the
/// boundary. The matrix `A` is not assumed symmetric; `a12` and `a21` are
/// stored separately.
#[derive(Debug, Clone)]
pub struct ProblemData {
    pub a11: Expr,
    pub a12: Expr,
    pub a21: Expr,
    pub a22: Expr,
    pub c: Expr,
    pub f: Expr,
    pub u_exact: Option<Expr>,
    pub ux_exact: Option<Expr>,
    pub uy_exact: Option<Expr>,
    /// Dirichlet boundary value, interpolated at boundary nodes. Zero by default.
    pub g: Expr,
}

impl ProblemData {
    /// Problem with a known exact solution; `f` is manufactured symbolically.
    pub fn with_exact_solution(
        a: [Expr; 4],
        c: Expr,
        u_exact: Expr,
        g: Option<Expr>,
    ) -> ProblemData {
        let [a11, a12, a21, a22] = a;
        let f = manufactured_source(&a11, &a12, &a21, &a22, &c, &u_exact);
        let ux = u_exact.differentiate(Var::X);
        let uy = u_exact.differentiate(Var::Y);
        ProblemData {
            a11,
            a12,
            a21,
            a22,
            c,
            f,
            u_exact: Some(u_exact),
            ux_exact: Some(ux),
            uy_exact: Some(uy),
            g: g.unwrap_or(Expr::Num(0.0)),
        }
    }

    /// Problem with a given right-hand side and no exact solution.
    pub fn with_source(a: [Expr; 4], c: Expr, f: Expr, g: Option<Expr>) -> ProblemData {
        let [a11, a12, a21, a22] = a;
        ProblemData {
            a11,
            a12,
            a21,
            a22,
            c,
            f,
            u_exact: None,
            ux_exact: None,
            uy_exact: None,
            g: g.unwrap_or(Expr::Num(0.0)),
        }
    }

    /// The identity-coefficient Poisson-type problem `-div(grad u) + c u`.
    pub fn laplace(c: Expr, u_exact: Expr, g: Option<Expr>) -> ProblemData {
        ProblemData::with_exact_solution(
            [Expr::Num(1.0), Expr::Num(0.0), Expr::Num(0.0), Expr::Num(1.0)],
            c,
            u_exact,
            g,
        )
    }

    /// Samples the symmetric-part eigenvalues of `A` and the sign of `c` on a
    /// uniform grid; returns `(min eigenvalue, min c)`. Ellipticity requires
    /// the first to be positive and the second nonnegative.
    pub fn ellipticity_sample(&self, rect: &crate::mesh::Rect, n: usize) -> Result<(f64, f64), EvalError> {
        let mut min_eig = f64::INFINITY;
        let mut min_c = f64::INFINITY;
        for i in 0..=n {
            for j in 0..=n {
                let x = rect.x1 + rect.hx() * i as f64 / n as f64;
                let y = rect.y1 + rect.hy() * j as f64 / n as f64;
                let a11 = self.a11.eval(x, y)?;
                let a22 = self.a22.eval(x, y)?;
                let s = 0.5 * (self.a12.eval(x, y)? + self.a21.eval(x, y)?);
                // eigenvalues of [[a11, s], [s, a22]]
                let mean = 0.5 * (a11 + a22);
                let disc = (0.5 * (a11 - a22)).hypot(s);
                min_eig = min_eig.min(mean - disc);
                min_c = min_c.min(self.c.eval(x, y)?);
            }
        }
        Ok((min_eig, min_c))
    }
}

/// `f = -(d/dx (a11 ux + a12 uy) + d/dy (a21 ux + a22 uy)) + c u`,
/// built entirely by symbolic differentiation.
pub fn manufactured_source(
    a11: &Expr,
    a12: &Expr,
    a21: &Expr,
    a22: &Expr,
    c: &Expr,
    u: &Expr,
) -> Expr {
    let ux = u.differentiate(Var::X);
    let uy = u.differentiate(Var::Y);
    let flux_x = add(mul(a11.clone(), ux.clone()), mul(a12.clone(), uy.clone()));
    let flux_y = add(mul(a21.clone(), ux), mul(a22.clone(), uy));
    let divergence = add(flux_x.differentiate(Var::X), flux_y.differentiate(Var::Y));
    add(neg(divergence), mul(c.clone(), u.clone()))
}

/// The coefficient set and exact solution of the reference benchmark problem.
pub fn benchmark_problem() -> ProblemData {
    let a11 = Expr::parse("exp(2*x)+y^3+1").unwrap();
    let a12 = Expr::parse("exp(x+y)").unwrap();
    let a21 = Expr::parse("exp(x+y)").unwrap();
    let a22 = Expr::parse("exp(2*y)+x^3+1").unwrap();
    let c = Expr::parse("2+x+y").unwrap();
    let u = Expr::parse("2*sin(2*pi*x)*sin(3*pi*y)").unwrap();
    ProblemData::with_exact_solution([a11, a12, a21, a22], c, u, None)
}
