use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::expr::{EvalError, Expr, Wide};
use crate::numeric::{FD6, FD_STEP};

/// Pointwise evaluator returning a fixed number of values.
pub type PointFn = Arc<dyn Fn(&[f64]) -> Result<Vec<f64>, EvalError> + Send + Sync>;

/// Component storage shared by all field types.
#[derive(Clone)]
pub enum Components {
    Symbolic(Vec<Expr>),
    Numeric { len: usize, f: PointFn },
}

impl fmt::Debug for Components {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Components::Symbolic(e) => f.debug_tuple("Symbolic").field(e).finish(),
            Components::Numeric { len, .. } => write!(f, "Numeric {{ len: {len} }}"),
        }
    }
}

impl Components {
    pub fn numeric<F>(len: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> Result<Vec<f64>, EvalError> + Send + Sync + 'static,
    {
        Components::Numeric {
            len,
            f: Arc::new(f),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Components::Symbolic(e) => e.len(),
            Components::Numeric { len, .. } => *len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn exprs(&self) -> Option<&[Expr]> {
        match self {
            Components::Symbolic(e) => Some(e),
            Components::Numeric { .. } => None,
        }
    }

    pub fn is_symbolic(&self) -> bool {
        matches!(self, Components::Symbolic(_))
    }

    /// Values when every component is a constant expression.
    pub fn constant_values(&self) -> Option<Vec<f64>> {
        self.exprs()?.iter().map(|e| e.simplify().as_const()).collect()
    }

    pub fn eval(&self, p: &[f64]) -> Result<Vec<f64>, EvalError> {
        match self {
            Components::Symbolic(e) => e.iter().map(|e| e.eval(p)).collect(),
            Components::Numeric { f, .. } => f(p),
        }
    }

    /// Extended-range evaluation; numeric components are evaluated in `f64`
    /// and widened.
    pub fn eval_wide(&self, p: &[f64]) -> Result<Vec<Wide>, EvalError> {
        match self {
            Components::Symbolic(e) => e.iter().map(|e| e.eval_wide(p)).collect(),
            Components::Numeric { f, .. } => Ok(f(p)?.into_iter().map(Wide::from).collect()),
        }
    }

    /// Evaluates at every point; output order follows `points`.
    pub fn eval_many(&self, points: &[Vec<f64>]) -> Vec<Result<Vec<f64>, EvalError>> {
        points.par_iter().map(|p| self.eval(p)).collect()
    }

    pub fn simplified(&self) -> Components {
        match self {
            Components::Symbolic(e) => Components::Symbolic(e.iter().map(Expr::simplify).collect()),
            other => other.clone(),
        }
    }

    /// All first partials; entry `c * dim + j` is `∂_j` of component `c`.
    pub fn partials(&self, dim: usize) -> Components {
        match self {
            Components::Symbolic(e) => Components::Symbolic(
                e.iter()
                    .flat_map(|c| (0..dim).map(move |j| c.diff(j)))
                    .collect(),
            ),
            Components::Numeric { len, f } => {
                let f = f.clone();
                let len = *len;
                Components::numeric(len * dim, move |p| {
                    let mut out = vec![0.0; len * dim];
                    let mut q = p.to_vec();
                    for j in 0..dim {
                        for &(k, w) in &FD6 {
                            q[j] = p[j] + k * FD_STEP;
                            let v = f(&q)?;
                            for c in 0..len {
                                out[c * dim + j] += w * v[c] / FD_STEP;
                            }
                        }
                        q[j] = p[j];
                    }
                    Ok(out)
                })
            }
        }
    }

    /// Applies a component-wise recipe, symbolically when possible.
    pub fn map<S, N>(&self, out_len: usize, sym: S, num: N) -> Components
    where
        S: Fn(&dyn Fn(usize) -> Expr) -> Vec<Expr>,
        N: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        match self {
            Components::Symbolic(e) => Components::Symbolic(sym(&|i| e[i].clone())),
            Components::Numeric { f, .. } => {
                let f = f.clone();
                Components::numeric(out_len, move |p| Ok(num(&f(p)?)))
            }
        }
    }

    /// Binary version of [`Components::map`].
    pub fn zip_map<S, N>(&self, other: &Components, out_len: usize, sym: S, num: N) -> Components
    where
        S: Fn(&dyn Fn(usize) -> Expr, &dyn Fn(usize) -> Expr) -> Vec<Expr>,
        N: Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        match (self, other) {
            (Components::Symbolic(a), Components::Symbolic(b)) => {
                Components::Symbolic(sym(&|i| a[i].clone(), &|i| b[i].clone()))
            }
            _ => {
                let (a, b) = (self.clone(), other.clone());
                Components::numeric(out_len, move |p| Ok(num(&a.eval(p)?, &b.eval(p)?)))
            }
        }
    }

    /// Forgets the symbolic form.
    pub fn to_numeric(&self) -> Components {
        let me = self.clone();
        Components::numeric(self.len(), move |p| me.eval(p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn numeric_partials_match_symbolic() {
        let vars: Vec<String> = ["x", "y"].iter().map(|s| s.to_string()).collect();
        let sym = Components::Symbolic(vec![
            parse("sin(x)*y^2", &vars).unwrap(),
            parse("exp(x - y)", &vars).unwrap(),
        ]);
        let num = sym.to_numeric();
        let p = [0.3, -0.7];
        let a = sym.partials(2).eval(&p).unwrap();
        let b = num.partials(2).eval(&p).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10, "{a:?} {b:?}");
        }
    }
}
