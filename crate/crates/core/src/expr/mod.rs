//! Scalar expressions in `x`, `y` and named parameters.
//!
//! Expressions are parsed once and then evaluated either on plain `f64`
//! or on [`Dual2`] to obtain first partials at a point.

mod dual;
mod parser;

use std::collections::BTreeMap;
use std::fmt;

pub use dual::{Dual2, Scalar};
pub use parser::MAX_EXPONENT;

use crate::error::{DomainErrorKind, EvalError, ParseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }
}

/// Immutable expression tree. Parameters carry the value they were bound
/// to at parse time.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Param(String, f64),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Call(Func, Box<Expr>),
}

impl Expr {
    /// Parses `text`, resolving identifiers other than `x`, `y` and the
    /// built-in functions against `params`.
    pub fn parse(text: &str, params: &BTreeMap<String, f64>) -> Result<Self, ParseError> {
        parser::parse(text, params)
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        self.eval_with(x, y)
    }

    /// Value and exact first partials with respect to `x` and `y`.
    pub fn eval_dual(&self, x: f64, y: f64) -> Result<Dual2, EvalError> {
        self.eval_with(Dual2::var_x(x), Dual2::var_y(y))
    }

    /// Evaluates on arbitrary scalar inputs, e.g. duals seeded along
    /// another pair of coordinates.
    pub fn eval_with<S: Scalar>(&self, x: S, y: S) -> Result<S, EvalError> {
        let fail = |kind| EvalError {
            kind,
            x: x.value(),
            y: y.value(),
        };
        Ok(match self {
            Expr::Const(c) => S::from_f64(*c),
            Expr::Var(Var::X) => x,
            Expr::Var(Var::Y) => y,
            Expr::Param(_, v) => S::from_f64(*v),
            Expr::Neg(a) => -a.eval_with(x, y)?,
            Expr::Binary(op, a, b) => {
                let a = a.eval_with(x, y)?;
                let b = b.eval_with(x, y)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b.value() == 0.0 {
                            return Err(fail(DomainErrorKind::DivisionByZero));
                        }
                        a / b
                    }
                }
            }
            Expr::Pow(a, n) => a.eval_with(x, y)?.powi(*n),
            Expr::Call(f, a) => {
                let a = a.eval_with(x, y)?;
                match f {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                    Func::Abs => a.abs(),
                    Func::Sqrt => {
                        if a.value() < 0.0 {
                            return Err(fail(DomainErrorKind::SqrtOfNegative));
                        }
                        if a.sqrt_singular() {
                            return Err(fail(DomainErrorKind::NonDifferentiable));
                        }
                        a.sqrt()
                    }
                }
            }
        })
    }

    pub fn depends_on(&self, var: Var) -> bool {
        match self {
            Expr::Var(v) => *v == var,
            Expr::Const(_) | Expr::Param(..) => false,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.depends_on(var),
            Expr::Binary(_, a, b) => a.depends_on(var) || b.depends_on(var),
        }
    }

    /// Names of the parameters referenced by the tree, sorted.
    pub fn parameters(&self) -> Vec<String> {
        fn walk(e: &Expr, out: &mut Vec<String>) {
            match e {
                Expr::Param(n, _) => out.push(n.clone()),
                Expr::Const(_) | Expr::Var(_) => {}
                Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => walk(a, out),
                Expr::Binary(_, a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out.sort();
        out.dedup();
        out
    }

    /// Replaces every occurrence of `var` by `replacement`.
    pub fn substitute(&self, var: Var, replacement: &Expr) -> Expr {
        match self {
            Expr::Var(v) if *v == var => replacement.clone(),
            Expr::Const(_) | Expr::Var(_) | Expr::Param(..) => self.clone(),
            Expr::Neg(a) => Expr::Neg(Box::new(a.substitute(var, replacement))),
            Expr::Pow(a, n) => Expr::Pow(Box::new(a.substitute(var, replacement)), *n),
            Expr::Call(f, a) => Expr::Call(*f, Box::new(a.substitute(var, replacement))),
            Expr::Binary(op, a, b) => Expr::Binary(
                *op,
                Box::new(a.substitute(var, replacement)),
                Box::new(b.substitute(var, replacement)),
            ),
        }
    }
}

/// Prints a fully parenthesized form that parses back to an equivalent tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if *c < 0.0 => write!(f, "(-{})", -c),
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(Var::X) => f.write_str("x"),
            Expr::Var(Var::Y) => f.write_str("y"),
            Expr::Param(n, _) => f.write_str(n),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Binary(op, a, b) => {
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                };
                write!(f, "({a} {sym} {b})")
            }
            Expr::Pow(a, n) => write!(f, "{a}^{n}"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}
