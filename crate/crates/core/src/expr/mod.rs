//! Arithmetic expressions over chart coordinates.
//!
//! Expressions are immutable trees with shared subtrees (`Arc`), so the
//! symbolic derivatives built by [`Expr::diff`] reuse the nodes of the
//! original instead of copying them. Evaluation never returns a silent NaN:
//! a logarithm of a non-positive number, a division by zero and friends all
//! surface as an [`EvalError`] pointing at the offending node.

mod parse;
mod predicate;
mod tape;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use parse::{parse, ParseError};
pub use predicate::{parse_predicate, CmpOp, Predicate};
pub use tape::Tape;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
    Abs,
    /// Derivative of `abs`; evaluates to -1, 0 or 1.
    Sign,
}

impl UnaryOp {
    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Exp => "exp",
            UnaryOp::Log => "log",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Abs => "abs",
            UnaryOp::Sign => "sign",
        }
    }

    pub(crate) fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => UnaryOp::Exp,
            "log" => UnaryOp::Log,
            "sin" => UnaryOp::Sin,
            "cos" => UnaryOp::Cos,
            "sqrt" => UnaryOp::Sqrt,
            "abs" => UnaryOp::Abs,
            "sign" => UnaryOp::Sign,
            _ => return None,
        })
    }

    pub(crate) fn apply(self, a: f64) -> Result<f64, DomainKind> {
        let v = match self {
            UnaryOp::Neg => -a,
            UnaryOp::Exp => a.exp(),
            UnaryOp::Log => {
                if a <= 0.0 {
                    return Err(DomainKind::LogNonPositive);
                }
                a.ln()
            }
            UnaryOp::Sin => a.sin(),
            UnaryOp::Cos => a.cos(),
            UnaryOp::Sqrt => {
                if a < 0.0 {
                    return Err(DomainKind::SqrtNegative);
                }
                a.sqrt()
            }
            UnaryOp::Abs => a.abs(),
            UnaryOp::Sign => {
                if a > 0.0 {
                    1.0
                } else if a < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(DomainKind::NonFinite)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Pow => "^",
        }
    }

    pub(crate) fn apply(self, a: f64, b: f64) -> Result<f64, DomainKind> {
        let v = match self {
            BinaryOp::Add => a + b,
            BinaryOp::Sub => a - b,
            BinaryOp::Mul => a * b,
            BinaryOp::Div => {
                if b == 0.0 {
                    return Err(DomainKind::DivisionByZero);
                }
                a / b
            }
            BinaryOp::Pow => pow(a, b)?,
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(DomainKind::NonFinite)
        }
    }
}

fn pow(base: f64, exponent: f64) -> Result<f64, DomainKind> {
    let integral = exponent.fract() == 0.0 && exponent.abs() < i32::MAX as f64;
    if base == 0.0 && exponent < 0.0 {
        return Err(DomainKind::DivisionByZero);
    }
    if integral {
        Ok(base.powi(exponent as i32))
    } else if base < 0.0 {
        Err(DomainKind::PowNegativeBase)
    } else {
        Ok(base.powf(exponent))
    }
}

/// Why an evaluation left the real domain of the expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    LogNonPositive,
    SqrtNegative,
    DivisionByZero,
    PowNegativeBase,
    /// Overflow or other non-finite intermediate.
    NonFinite,
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DomainKind::LogNonPositive => "logarithm of a non-positive value",
            DomainKind::SqrtNegative => "square root of a negative value",
            DomainKind::DivisionByZero => "division by zero",
            DomainKind::PowNegativeBase => "non-integer power of a negative value",
            DomainKind::NonFinite => "non-finite value",
        })
    }
}

#[derive(Debug, Clone, Error)]
#[error("domain error: {kind} in `{node}`")]
pub struct EvalError {
    pub kind: DomainKind,
    /// The offending sub-expression.
    pub node: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    /// Zero-based coordinate index.
    Var(usize),
    Unary(UnaryOp, Expr),
    Binary(BinaryOp, Expr, Expr),
}

/// Shared, immutable expression tree.
#[derive(Clone)]
pub struct Expr(Arc<Node>);

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || *self.0 == *other.0
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl Expr {
    pub fn node(&self) -> &Node {
        &self.0
    }

    pub(crate) fn ptr(&self) -> *const Node {
        Arc::as_ptr(&self.0)
    }

    pub fn constant(c: f64) -> Self {
        Expr(Arc::new(Node::Const(c)))
    }

    pub fn var(i: usize) -> Self {
        Expr(Arc::new(Node::Var(i)))
    }

    /// Raw unary node; no folding.
    pub fn unary(op: UnaryOp, a: Expr) -> Self {
        Expr(Arc::new(Node::Unary(op, a)))
    }

    /// Raw binary node; no folding.
    pub fn binary(op: BinaryOp, a: Expr, b: Expr) -> Self {
        Expr(Arc::new(Node::Binary(op, a, b)))
    }

    pub fn as_const(&self) -> Option<f64> {
        match *self.0 {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    fn is_const(&self, c: f64) -> bool {
        self.as_const() == Some(c)
    }

    // Folding constructors used by `diff`. Folding only happens when the
    // folded value is finite, so a domain error is never hidden.

    fn fold_unary(op: UnaryOp, a: Expr) -> Self {
        if let Some(c) = a.as_const() {
            if let Ok(v) = op.apply(c) {
                return Expr::constant(v);
            }
        }
        if op == UnaryOp::Neg {
            if let Node::Unary(UnaryOp::Neg, inner) = a.node() {
                return inner.clone();
            }
        }
        Expr::unary(op, a)
    }

    fn fold_binary(op: BinaryOp, a: Expr, b: Expr) -> Self {
        if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
            if let Ok(v) = op.apply(x, y) {
                return Expr::constant(v);
            }
        }
        match op {
            BinaryOp::Add if a.is_const(0.0) => b,
            BinaryOp::Add | BinaryOp::Sub if b.is_const(0.0) => a,
            BinaryOp::Sub if a.is_const(0.0) => Expr::fold_unary(UnaryOp::Neg, b),
            BinaryOp::Mul if a.is_const(0.0) || b.is_const(0.0) => Expr::constant(0.0),
            BinaryOp::Mul if a.is_const(1.0) => b,
            BinaryOp::Mul | BinaryOp::Div if b.is_const(1.0) => a,
            BinaryOp::Div if a.is_const(0.0) => Expr::constant(0.0),
            BinaryOp::Pow if b.is_const(0.0) => Expr::constant(1.0),
            BinaryOp::Pow if b.is_const(1.0) => a,
            _ => Expr::binary(op, a, b),
        }
    }

    fn add(a: Expr, b: Expr) -> Expr {
        Expr::fold_binary(BinaryOp::Add, a, b)
    }
    fn sub(a: Expr, b: Expr) -> Expr {
        Expr::fold_binary(BinaryOp::Sub, a, b)
    }
    fn mul(a: Expr, b: Expr) -> Expr {
        Expr::fold_binary(BinaryOp::Mul, a, b)
    }
    fn div(a: Expr, b: Expr) -> Expr {
        Expr::fold_binary(BinaryOp::Div, a, b)
    }
    fn neg(a: Expr) -> Expr {
        Expr::fold_unary(UnaryOp::Neg, a)
    }

    /// `-self`, with constant folding.
    pub fn negated(&self) -> Expr {
        Expr::neg(self.clone())
    }

    /// Largest coordinate index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self.node() {
            Node::Const(_) => None,
            Node::Var(i) => Some(*i),
            Node::Unary(_, a) => a.max_var(),
            Node::Binary(_, a, b) => match (a.max_var(), b.max_var()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
        }
    }

    /// Exact partial derivative with respect to coordinate `i`.
    pub fn diff(&self, i: usize) -> Expr {
        match self.node() {
            Node::Const(_) => Expr::constant(0.0),
            Node::Var(j) => Expr::constant(if *j == i { 1.0 } else { 0.0 }),
            Node::Unary(op, a) => {
                let da = a.diff(i);
                if da.is_const(0.0) {
                    return Expr::constant(0.0);
                }
                match op {
                    UnaryOp::Neg => Expr::neg(da),
                    UnaryOp::Exp => Expr::mul(self.clone(), da),
                    UnaryOp::Log => Expr::div(da, a.clone()),
                    UnaryOp::Sin => Expr::mul(Expr::fold_unary(UnaryOp::Cos, a.clone()), da),
                    UnaryOp::Cos => {
                        Expr::neg(Expr::mul(Expr::fold_unary(UnaryOp::Sin, a.clone()), da))
                    }
                    UnaryOp::Sqrt => Expr::div(da, Expr::mul(Expr::constant(2.0), self.clone())),
                    UnaryOp::Abs => Expr::mul(Expr::fold_unary(UnaryOp::Sign, a.clone()), da),
                    UnaryOp::Sign => Expr::constant(0.0),
                }
            }
            Node::Binary(op, a, b) => {
                let da = a.diff(i);
                let db = b.diff(i);
                match op {
                    BinaryOp::Add => Expr::add(da, db),
                    BinaryOp::Sub => Expr::sub(da, db),
                    BinaryOp::Mul => {
                        Expr::add(Expr::mul(da, b.clone()), Expr::mul(a.clone(), db))
                    }
                    BinaryOp::Div => {
                        // (a'b - ab') / b^2
                        let num = Expr::sub(Expr::mul(da, b.clone()), Expr::mul(a.clone(), db));
                        Expr::div(num, Expr::mul(b.clone(), b.clone()))
                    }
                    BinaryOp::Pow => {
                        if db.is_const(0.0) {
                            // exponent independent of x_i: b * a^(b-1) * a'
                            let lowered = Expr::fold_binary(
                                BinaryOp::Pow,
                                a.clone(),
                                Expr::sub(b.clone(), Expr::constant(1.0)),
                            );
                            Expr::mul(Expr::mul(b.clone(), lowered), da)
                        } else {
                            // a^b * (b' log a + b a'/a)
                            let log_a = Expr::fold_unary(UnaryOp::Log, a.clone());
                            let inner = Expr::add(
                                Expr::mul(db, log_a),
                                Expr::div(Expr::mul(b.clone(), da), a.clone()),
                            );
                            Expr::mul(self.clone(), inner)
                        }
                    }
                }
            }
        }
    }

    /// Tree-walking evaluation at chart point `x`.
    pub fn eval(&self, x: &[f64]) -> Result<f64, EvalError> {
        let err = |kind| EvalError {
            kind,
            node: self.clone(),
        };
        match self.node() {
            Node::Const(c) => Ok(*c),
            Node::Var(i) => Ok(x[*i]),
            Node::Unary(op, a) => op.apply(a.eval(x)?).map_err(err),
            Node::Binary(op, a, b) => {
                let va = a.eval(x)?;
                let vb = b.eval(x)?;
                op.apply(va, vb).map_err(err)
            }
        }
    }

    /// Fully parenthesized rendering with the given coordinate names.
    pub fn display<'a>(&'a self, names: &'a [String]) -> Display<'a> {
        Display {
            expr: self,
            names: Some(names),
        }
    }
}

pub struct Display<'a> {
    expr: &'a Expr,
    names: Option<&'a [String]>,
}

impl fmt::Display for Display<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self.expr, self.names)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self, None)
    }
}

fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr, names: Option<&[String]>) -> fmt::Result {
    match e.node() {
        Node::Const(c) => {
            if *c < 0.0 {
                write!(f, "(-{:?})", -c)
            } else {
                write!(f, "{:?}", c)
            }
        }
        Node::Var(i) => match names.and_then(|n| n.get(*i)) {
            Some(name) => f.write_str(name),
            None => write!(f, "x{}", i + 1),
        },
        Node::Unary(UnaryOp::Neg, a) => {
            f.write_str("(-")?;
            write_expr(f, a, names)?;
            f.write_str(")")
        }
        Node::Unary(op, a) => {
            write!(f, "{}(", op.name())?;
            write_expr(f, a, names)?;
            f.write_str(")")
        }
        Node::Binary(op, a, b) => {
            f.write_str("(")?;
            write_expr(f, a, names)?;
            write!(f, " {} ", op.symbol())?;
            write_expr(f, b, names)?;
            f.write_str(")")
        }
    }
}
