//! Expressions over chart coordinates.
//!
//! An [`Expr`] is an immutable tree built from real constants, coordinate
//! variables, the four arithmetic operations, integer powers, a handful of
//! elementary functions, and the three-branch [`Expr::SgnCase`] node, which is
//! the only piecewise construct. Differentiation is exact and symbolic;
//! evaluation is deterministic IEEE arithmetic that reports division by zero
//! and domain violations as errors instead of producing NaN.

mod parse;
mod scalar;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use parse::{parse, ParseError};
pub use scalar::{Scalar, Wide};

/// Elementary functions admitted by the grammar.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Sin,
    Cos,
    Sqrt,
    Ln,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
            Func::Ln => "ln",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            "ln" => Func::Ln,
            _ => return None,
        })
    }
}

/// Symbolic expression in the chart coordinates `x_0 .. x_{m-1}`.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Neg(Arc<Expr>),
    Add(Arc<Expr>, Arc<Expr>),
    Sub(Arc<Expr>, Arc<Expr>),
    Mul(Arc<Expr>, Arc<Expr>),
    Div(Arc<Expr>, Arc<Expr>),
    Pow(Arc<Expr>, i32),
    Call(Func, Arc<Expr>),
    /// `sgncase(t; neg, zero, pos)`: picks a branch by the strict sign of `t`.
    SgnCase {
        test: Arc<Expr>,
        neg: Arc<Expr>,
        zero: Arc<Expr>,
        pos: Arc<Expr>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalErrorKind {
    DivByZero,
    DomainError,
}

#[derive(Clone, Debug, PartialEq, Error)]
#[error("{kind:?} while evaluating at {at:?}")]
pub struct EvalError {
    pub kind: EvalErrorKind,
    pub at: Vec<f64>,
}

impl EvalError {
    pub fn new(kind: EvalErrorKind, at: &[f64]) -> Self {
        EvalError {
            kind,
            at: at.to_vec(),
        }
    }
}

impl From<f64> for Expr {
    fn from(v: f64) -> Self {
        Expr::Const(v)
    }
}

// Smart constructors. They apply only local rewrites that leave the value
// unchanged wherever the original evaluates (constant folding, neutral
// elements, multiplication by zero) and are shared by `diff` and `simplify`.
impl Expr {
    pub fn constant(v: f64) -> Expr {
        Expr::Const(v)
    }

    pub fn var(i: usize) -> Expr {
        Expr::Var(i)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(v) => Some(*v),
            _ => None,
        }
    }

    pub fn is_const(&self, v: f64) -> bool {
        self.as_const() == Some(v)
    }

    pub fn neg(a: Expr) -> Expr {
        match a {
            Expr::Const(v) => Expr::Const(-v),
            Expr::Neg(inner) => Arc::unwrap_or_clone(inner),
            other => Expr::Neg(Arc::new(other)),
        }
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x + y),
            (Some(x), _) if x == 0.0 => b,
            (_, Some(y)) if y == 0.0 => a,
            _ => match b {
                Expr::Neg(inner) => Expr::Sub(Arc::new(a), inner),
                b => Expr::Add(Arc::new(a), Arc::new(b)),
            },
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x - y),
            (Some(x), _) if x == 0.0 => Expr::neg(b),
            (_, Some(y)) if y == 0.0 => a,
            _ => match b {
                Expr::Neg(inner) => Expr::Add(Arc::new(a), inner),
                b => Expr::Sub(Arc::new(a), Arc::new(b)),
            },
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x * y),
            (Some(x), _) | (_, Some(x)) if x == 0.0 => Expr::Const(0.0),
            (Some(x), _) if x == 1.0 => b,
            (_, Some(y)) if y == 1.0 => a,
            (Some(x), _) if x == -1.0 => Expr::neg(b),
            (_, Some(y)) if y == -1.0 => Expr::neg(a),
            _ => Expr::Mul(Arc::new(a), Arc::new(b)),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) if y != 0.0 => Expr::Const(x / y),
            (Some(x), _) if x == 0.0 => Expr::Const(0.0),
            (_, Some(y)) if y == 1.0 => a,
            (_, Some(y)) if y == -1.0 => Expr::neg(a),
            _ => Expr::Div(Arc::new(a), Arc::new(b)),
        }
    }

    pub fn pow(a: Expr, n: i32) -> Expr {
        match (n, a.as_const()) {
            (0, _) => Expr::Const(1.0),
            (1, _) => a,
            (_, Some(v)) if v != 0.0 || n > 0 => Expr::Const(v.powi(n)),
            _ => Expr::Pow(Arc::new(a), n),
        }
    }

    pub fn call(f: Func, a: Expr) -> Expr {
        if let Some(v) = a.as_const() {
            if let Ok(r) = apply_func(f, v) {
                return Expr::Const(r);
            }
        }
        Expr::Call(f, Arc::new(a))
    }

    pub fn sgncase(test: Expr, neg: Expr, zero: Expr, pos: Expr) -> Expr {
        if let Some(t) = test.as_const() {
            return match t.sign() {
                -1 => neg,
                0 => zero,
                _ => pos,
            };
        }
        Expr::SgnCase {
            test: Arc::new(test),
            neg: Arc::new(neg),
            zero: Arc::new(zero),
            pos: Arc::new(pos),
        }
    }

    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        terms
            .into_iter()
            .fold(Expr::Const(0.0), |acc, t| Expr::add(acc, t))
    }
}

fn apply_func<T: Scalar>(f: Func, v: T) -> Result<T, EvalErrorKind> {
    let r = match f {
        Func::Exp => v.exp(),
        Func::Sin => v.sin(),
        Func::Cos => v.cos(),
        Func::Sqrt => {
            if v.sign() < 0 {
                return Err(EvalErrorKind::DomainError);
            }
            v.sqrt()
        }
        Func::Ln => {
            if v.sign() <= 0 {
                return Err(EvalErrorKind::DomainError);
            }
            v.ln()
        }
    };
    if r.is_finite() {
        Ok(r)
    } else {
        Err(EvalErrorKind::DomainError)
    }
}

fn finite<T: Scalar>(v: T) -> Result<T, EvalErrorKind> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalErrorKind::DomainError)
    }
}

impl Expr {
    /// Evaluates at `p` in double precision.
    pub fn eval(&self, p: &[f64]) -> Result<f64, EvalError> {
        self.eval_raw(p).map_err(|k| EvalError::new(k, p))
    }

    /// Evaluates at `p` with an extended exponent range (see [`Wide`]).
    pub fn eval_wide(&self, p: &[f64]) -> Result<Wide, EvalError> {
        let wp: Vec<Wide> = p.iter().map(|&v| Wide::from(v)).collect();
        self.eval_raw(&wp).map_err(|k| EvalError::new(k, p))
    }

    fn eval_raw<T: Scalar>(&self, p: &[T]) -> Result<T, EvalErrorKind> {
        Ok(match self {
            Expr::Const(v) => T::from_f64(*v),
            Expr::Var(i) => p[*i],
            Expr::Neg(a) => -a.eval_raw(p)?,
            Expr::Add(a, b) => finite(a.eval_raw(p)? + b.eval_raw(p)?)?,
            Expr::Sub(a, b) => finite(a.eval_raw(p)? - b.eval_raw(p)?)?,
            Expr::Mul(a, b) => finite(a.eval_raw(p)? * b.eval_raw(p)?)?,
            Expr::Div(a, b) => {
                let num = a.eval_raw(p)?;
                let den = b.eval_raw(p)?;
                if den.is_zero() {
                    return Err(EvalErrorKind::DivByZero);
                }
                finite(num / den)?
            }
            Expr::Pow(a, n) => {
                let base = a.eval_raw(p)?;
                if *n < 0 && base.is_zero() {
                    return Err(EvalErrorKind::DivByZero);
                }
                finite(base.powi(*n))?
            }
            Expr::Call(f, a) => apply_func(*f, a.eval_raw(p)?)?,
            Expr::SgnCase {
                test,
                neg,
                zero,
                pos,
            } => match test.eval_raw(p)?.sign() {
                -1 => neg.eval_raw(p)?,
                0 => zero.eval_raw(p)?,
                _ => pos.eval_raw(p)?,
            },
        })
    }

    /// Largest variable index plus one (0 for constants).
    pub fn arity(&self) -> usize {
        match self {
            Expr::Const(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.arity(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.arity().max(b.arity())
            }
            Expr::SgnCase {
                test,
                neg,
                zero,
                pos,
            } => test
                .arity()
                .max(neg.arity())
                .max(zero.arity())
                .max(pos.arity()),
        }
    }

    /// Exact partial derivative with respect to variable `v`.
    ///
    /// `sgncase` is differentiated branchwise with a zero derivative on the
    /// seam. That is only correct where the function is smooth across the
    /// seam, e.g. flat bumps like `exp(-1/x^2)` whose one-sided derivatives
    /// all vanish; it is not checked.
    pub fn diff(&self, v: usize) -> Expr {
        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Var(i) => Expr::Const(if *i == v { 1.0 } else { 0.0 }),
            Expr::Neg(a) => Expr::neg(a.diff(v)),
            Expr::Add(a, b) => Expr::add(a.diff(v), b.diff(v)),
            Expr::Sub(a, b) => Expr::sub(a.diff(v), b.diff(v)),
            Expr::Mul(a, b) => Expr::add(
                Expr::mul(a.diff(v), (**b).clone()),
                Expr::mul((**a).clone(), b.diff(v)),
            ),
            Expr::Div(a, b) => {
                let da = a.diff(v);
                let db = b.diff(v);
                if db.is_const(0.0) {
                    Expr::div(da, (**b).clone())
                } else {
                    Expr::div(
                        Expr::sub(
                            Expr::mul(da, (**b).clone()),
                            Expr::mul((**a).clone(), db),
                        ),
                        Expr::pow((**b).clone(), 2),
                    )
                }
            }
            Expr::Pow(a, n) => Expr::mul(
                Expr::mul(Expr::Const(*n as f64), Expr::pow((**a).clone(), n - 1)),
                a.diff(v),
            ),
            Expr::Call(f, a) => {
                let da = a.diff(v);
                if da.is_const(0.0) {
                    return Expr::Const(0.0);
                }
                let inner = (**a).clone();
                let outer = match f {
                    Func::Exp => self.clone(),
                    Func::Sin => Expr::call(Func::Cos, inner),
                    Func::Cos => Expr::neg(Expr::call(Func::Sin, inner)),
                    Func::Sqrt => {
                        return Expr::div(da, Expr::mul(Expr::Const(2.0), self.clone()));
                    }
                    Func::Ln => return Expr::div(da, inner),
                };
                Expr::mul(outer, da)
            }
            Expr::SgnCase { test, neg, pos, .. } => Expr::sgncase(
                (**test).clone(),
                neg.diff(v),
                Expr::Const(0.0),
                pos.diff(v),
            ),
        }
    }

    /// Directional derivative `Σ dir_i ∂_i`.
    pub fn directional(&self, dir: &[f64]) -> Expr {
        Expr::sum(
            dir.iter()
                .enumerate()
                .filter(|(_, &c)| c != 0.0)
                .map(|(i, &c)| Expr::mul(Expr::Const(c), self.diff(i))),
        )
    }

    /// Bottom-up pass of the local rewrites: constant folding, `x*0`, `x*1`,
    /// `x+0`, `x^1`, `x^0`, double negation, constant-test `sgncase`.
    pub fn simplify(&self) -> Expr {
        match self {
            Expr::Const(_) | Expr::Var(_) => self.clone(),
            Expr::Neg(a) => Expr::neg(a.simplify()),
            Expr::Add(a, b) => Expr::add(a.simplify(), b.simplify()),
            Expr::Sub(a, b) => Expr::sub(a.simplify(), b.simplify()),
            Expr::Mul(a, b) => Expr::mul(a.simplify(), b.simplify()),
            Expr::Div(a, b) => Expr::div(a.simplify(), b.simplify()),
            Expr::Pow(a, n) => Expr::pow(a.simplify(), *n),
            Expr::Call(f, a) => Expr::call(*f, a.simplify()),
            Expr::SgnCase {
                test,
                neg,
                zero,
                pos,
            } => Expr::sgncase(
                test.simplify(),
                neg.simplify(),
                zero.simplify(),
                pos.simplify(),
            ),
        }
    }

    /// Renders with the given variable names in the parser's grammar.
    pub fn display<'a>(&'a self, names: &'a [String]) -> ExprDisplay<'a> {
        ExprDisplay { expr: self, names }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            Expr::Const(v) if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) => 3,
            _ => 5,
        }
    }
}

pub struct ExprDisplay<'a> {
    expr: &'a Expr,
    names: &'a [String],
}

fn write_number(f: &mut fmt::Formatter<'_>, v: f64) -> fmt::Result {
    let a = v.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) {
        write!(f, "{a}")
    } else {
        write!(f, "{a:e}")
    }
}

impl ExprDisplay<'_> {
    fn sub<'b>(&'b self, e: &'b Expr) -> ExprDisplay<'b> {
        ExprDisplay {
            expr: e,
            names: self.names,
        }
    }

    fn wrapped(&self, f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
        if parens {
            write!(f, "({})", self.sub(e))
        } else {
            write!(f, "{}", self.sub(e))
        }
    }

    fn binary(&self, f: &mut fmt::Formatter<'_>, a: &Expr, op: &str, b: &Expr) -> fmt::Result {
        let p = self.expr.precedence();
        self.wrapped(f, a, a.precedence() < p)?;
        write!(f, " {op} ")?;
        self.wrapped(f, b, b.precedence() <= p)
    }
}

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.expr {
            Expr::Const(v) => {
                if v.is_sign_negative() {
                    f.write_str("-")?;
                }
                write_number(f, *v)
            }
            Expr::Var(i) => match self.names.get(*i) {
                Some(n) => f.write_str(n),
                None => write!(f, "x{i}"),
            },
            Expr::Neg(a) => {
                f.write_str("-")?;
                self.wrapped(f, a, a.precedence() < 3)
            }
            Expr::Add(a, b) => self.binary(f, a, "+", b),
            Expr::Sub(a, b) => self.binary(f, a, "-", b),
            Expr::Mul(a, b) => self.binary(f, a, "*", b),
            Expr::Div(a, b) => self.binary(f, a, "/", b),
            Expr::Pow(a, n) => {
                self.wrapped(f, a, a.precedence() < 5)?;
                write!(f, "^{n}")
            }
            Expr::Call(func, a) => write!(f, "{}({})", func.name(), self.sub(a)),
            Expr::SgnCase {
                test,
                neg,
                zero,
                pos,
            } => write!(
                f,
                "sgncase({}; {}, {}, {})",
                self.sub(test),
                self.sub(neg),
                self.sub(zero),
                self.sub(pos)
            ),
        }
    }
}
