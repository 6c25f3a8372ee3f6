//! Geometric objects on a coordinate box and the exterior calculus used on
//! them.
//!
//! Matrix conventions are fixed crate-wide:
//!
//! * a two-form is stored as an antisymmetric `Ω` with `ω(u, v) = ⟨Ωu, v⟩`,
//!   so `dx∧dy` on ℝ² is `[[0, -1], [1, 0]]`;
//! * a (2,0) tensor is stored as `M` with `g(v, w) = ⟨Mv, w⟩`, so
//!   `dφ = g(X, ·)` is the column identity `M X = ∇φ`.
//!
//! Every field holds its components either as expressions or as a numeric
//! callable ([`Components`]). Derivatives of symbolic components are exact;
//! numeric ones fall back to sixth-order central differences.

mod chart;
mod components;
pub mod linalg;

use thiserror::Error;

use crate::expr::{EvalError, Expr};
use crate::numeric::{matrix_from_row_major, max_abs};

pub use chart::{Chart, DEFAULT_EXCLUSION_RADIUS, DEFAULT_RESOLUTION, MAX_GRID_SAMPLES};
pub use components::{Components, PointFn};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("invalid chart: {0}")]
    InvalidChart(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("two-form is not closed (max |dω| = {residual:e})")]
    NotClosed { residual: f64 },
    #[error("nondegeneracy needs an even dimension, got {0}")]
    OddDimension(usize),
}

fn check_arity(dim: usize, exprs: &[Expr]) -> Result<(), FieldError> {
    match exprs.iter().map(Expr::arity).max() {
        Some(a) if a > dim => Err(FieldError::DimensionMismatch(format!(
            "expression uses variable index {} on a {dim}-dimensional chart",
            a - 1
        ))),
        _ => Ok(()),
    }
}

/// A function on the chart.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    dim: usize,
    expr: Expr,
}

impl ScalarField {
    pub fn new(dim: usize, expr: Expr) -> Result<Self, FieldError> {
        check_arity(dim, std::slice::from_ref(&expr))?;
        Ok(ScalarField { dim, expr })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn eval(&self, p: &[f64]) -> Result<f64, EvalError> {
        self.expr.eval(p)
    }

    pub fn gradient_exprs(&self) -> Vec<Expr> {
        (0..self.dim).map(|j| self.expr.diff(j)).collect()
    }

    pub fn gradient(&self, p: &[f64]) -> Result<Vec<f64>, EvalError> {
        self.gradient_exprs().iter().map(|e| e.eval(p)).collect()
    }

    /// Row-major symbolic Hessian.
    pub fn hessian_exprs(&self) -> Vec<Expr> {
        let grad = self.gradient_exprs();
        let mut out = Vec::with_capacity(self.dim * self.dim);
        for g in &grad {
            for j in 0..self.dim {
                out.push(g.diff(j));
            }
        }
        out
    }
}

macro_rules! field_type {
    ($(#[$meta:meta])* $name:ident, $len:expr) => {
        $(#[$meta])*
        #[derive(Clone, Debug)]
        pub struct $name {
            dim: usize,
            comps: Components,
        }

        impl $name {
            pub fn new(dim: usize, comps: Components) -> Result<Self, FieldError> {
                let want = $len(dim);
                if comps.len() != want {
                    return Err(FieldError::DimensionMismatch(format!(
                        "{} on a {dim}-dimensional chart needs {want} components, got {}",
                        stringify!($name),
                        comps.len()
                    )));
                }
                if let Components::Symbolic(e) = &comps {
                    check_arity(dim, e)?;
                }
                Ok($name { dim, comps })
            }

            pub fn from_exprs(dim: usize, exprs: Vec<Expr>) -> Result<Self, FieldError> {
                Self::new(dim, Components::Symbolic(exprs))
            }

            pub fn dim(&self) -> usize {
                self.dim
            }

            pub fn components(&self) -> &Components {
                &self.comps
            }

            pub fn exprs(&self) -> Option<&[Expr]> {
                self.comps.exprs()
            }

            pub fn eval(&self, p: &[f64]) -> Result<Vec<f64>, EvalError> {
                self.comps.eval(p)
            }
        }
    };
}

field_type!(
    /// Vector field `Σ X_i ∂_i`.
    VectorField,
    |m: usize| m
);
field_type!(
    /// One-form `Σ λ_i dx_i`.
    OneForm,
    |m: usize| m
);
field_type!(
    /// Two-form as a row-major antisymmetric matrix, `ω(u, v) = ⟨Ωu, v⟩`.
    TwoForm,
    |m: usize| m * m
);
field_type!(
    /// (2,0) tensor as a row-major matrix, `g(v, w) = ⟨Mv, w⟩`.
    TensorField,
    |m: usize| m * m
);

impl TwoForm {
    /// `Σ c_k dx_{i_k} ∧ dx_{j_k}` with constant or expression coefficients.
    pub fn from_wedges(dim: usize, terms: &[(usize, usize, Expr)]) -> Result<Self, FieldError> {
        let mut entries = vec![Expr::Const(0.0); dim * dim];
        for (i, j, c) in terms {
            if *i >= dim || *j >= dim {
                return Err(FieldError::DimensionMismatch(format!(
                    "wedge dx{i}∧dx{j} on a {dim}-dimensional chart"
                )));
            }
            // dx_i∧dx_j (e_i, e_j) = 1 = ⟨Ω e_i, e_j⟩ = Ω[j][i]
            entries[j * dim + i] = Expr::add(entries[j * dim + i].clone(), c.clone());
            entries[i * dim + j] = Expr::sub(entries[i * dim + j].clone(), c.clone());
        }
        TwoForm::from_exprs(dim, entries)
    }

    pub fn matrix(&self, p: &[f64]) -> Result<nalgebra::DMatrix<f64>, EvalError> {
        Ok(matrix_from_row_major(self.dim, &self.eval(p)?))
    }

    /// `ω(u, v)` at `p`.
    pub fn pair(&self, p: &[f64], u: &[f64], v: &[f64]) -> Result<f64, EvalError> {
        let om = self.eval(p)?;
        let m = self.dim;
        Ok((0..m)
            .map(|i| (0..m).map(|k| om[i * m + k] * u[k]).sum::<f64>() * v[i])
            .sum())
    }

    /// Largest `|Ω + Ωᵀ|` entry over `points`.
    pub fn antisymmetry_residual(&self, points: &[Vec<f64>]) -> Result<f64, EvalError> {
        let m = self.dim;
        let vals = self.comps.eval_many(points);
        let mut worst = 0.0f64;
        for v in vals {
            let v = v?;
            for i in 0..m {
                for j in 0..m {
                    worst = worst.max((v[i * m + j] + v[j * m + i]).abs());
                }
            }
        }
        Ok(worst)
    }
}

impl TensorField {
    pub fn identity(dim: usize) -> Self {
        TensorField::constant(dim, &nalgebra::DMatrix::identity(dim, dim))
    }

    pub fn constant(dim: usize, m: &nalgebra::DMatrix<f64>) -> Self {
        let mut e = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                e.push(Expr::Const(m[(i, j)]));
            }
        }
        TensorField {
            dim,
            comps: Components::Symbolic(e),
        }
    }

    pub fn matrix(&self, p: &[f64]) -> Result<nalgebra::DMatrix<f64>, EvalError> {
        Ok(matrix_from_row_major(self.dim, &self.eval(p)?))
    }
}

/// `dφ` with component `j` equal to `∂_j φ`.
pub fn differential(phi: &ScalarField) -> OneForm {
    OneForm {
        dim: phi.dim,
        comps: Components::Symbolic(phi.gradient_exprs()),
    }
}

/// `dλ` as a two-form: `Ω_ij = ∂_j λ_i − ∂_i λ_j`.
pub fn exterior_derivative_1(lambda: &OneForm) -> TwoForm {
    let m = lambda.dim;
    let partials = lambda.comps.partials(m);
    // partials[c * m + j] = ∂_j λ_c
    let comps = partials.map(m * m, move |d: &dyn Fn(usize) -> Expr| {
        (0..m * m)
            .map(|k| {
                let (i, j) = (k / m, k % m);
                if i == j {
                    Expr::Const(0.0)
                } else {
                    Expr::sub(d(i * m + j), d(j * m + i))
                }
            })
            .collect()
    }, move |d: &[f64]| {
        (0..m * m)
            .map(|k| {
                let (i, j) = (k / m, k % m);
                if i == j {
                    0.0
                } else {
                    d[i * m + j] - d[j * m + i]
                }
            })
            .collect()
    });
    TwoForm { dim: m, comps }
}

/// Components of a three-form, one per increasing index triple.
#[derive(Clone, Debug)]
pub struct ThreeFormComponents {
    pub triples: Vec<[usize; 3]>,
    pub comps: Components,
}

impl ThreeFormComponents {
    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// Largest absolute component over `points`.
    pub fn max_abs_on(&self, points: &[Vec<f64>]) -> Result<f64, EvalError> {
        if self.triples.is_empty() {
            return Ok(0.0);
        }
        let mut worst = 0.0f64;
        for v in self.comps.eval_many(points) {
            worst = worst.max(max_abs(v?));
        }
        Ok(worst)
    }
}

/// `dω(e_i, e_j, e_k)` for all `i < j < k`.
pub fn exterior_derivative_2(omega: &TwoForm) -> ThreeFormComponents {
    let m = omega.dim;
    let mut triples = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            for k in j + 1..m {
                triples.push([i, j, k]);
            }
        }
    }
    let partials = omega.comps.partials(m);
    // partials[(a*m + b)*m + c] = ∂_c Ω_ab, and ω(e_a, e_b) = Ω_ba
    let w = move |a: usize, b: usize, c: usize| (b * m + a) * m + c;
    let t_sym = triples.clone();
    let t_num = triples.clone();
    let comps = partials.map(
        triples.len(),
        move |d: &dyn Fn(usize) -> Expr| {
            t_sym
                .iter()
                .map(|&[i, j, k]| {
                    Expr::add(Expr::add(d(w(j, k, i)), d(w(k, i, j))), d(w(i, j, k)))
                })
                .collect()
        },
        move |d: &[f64]| {
            t_num
                .iter()
                .map(|&[i, j, k]| d[w(j, k, i)] + d[w(k, i, j)] + d[w(i, j, k)])
                .collect()
        },
    );
    ThreeFormComponents { triples, comps }
}

/// `i_X ω = ω(X, ·)`, coefficient vector `ΩX`.
pub fn interior_product(x: &VectorField, omega: &TwoForm) -> Result<OneForm, FieldError> {
    if x.dim != omega.dim {
        return Err(FieldError::DimensionMismatch(format!(
            "vector field dim {} vs two-form dim {}",
            x.dim, omega.dim
        )));
    }
    Ok(OneForm {
        dim: x.dim,
        comps: linalg::mat_vec(&omega.comps, &x.comps, x.dim),
    })
}

/// Largest entry of `dω` over the chart grid.
pub fn closedness_residual(omega: &TwoForm, chart: &Chart) -> Result<f64, FieldError> {
    Ok(exterior_derivative_2(omega).max_abs_on(&chart.grid_points())?)
}

/// Largest entry of `L_X ω − ω = d(i_X ω) − ω` over the chart grid.
///
/// Uses Cartan's formula, so `ω` must be closed first; `closed_tol` bounds
/// the admissible `|dω|`.
pub fn lie_derivative_residual(
    x: &VectorField,
    omega: &TwoForm,
    chart: &Chart,
    closed_tol: f64,
) -> Result<f64, FieldError> {
    let residual = closedness_residual(omega, chart)?;
    if residual >= closed_tol {
        return Err(FieldError::NotClosed { residual });
    }
    let lie = exterior_derivative_1(&interior_product(x, omega)?);
    let diff = linalg::sub(&lie.comps, &omega.comps);
    let mut worst = 0.0f64;
    for v in diff.eval_many(&chart.grid_points()) {
        worst = worst.max(max_abs(v?));
    }
    Ok(worst)
}

/// Smallest `|det Ω|` over the chart grid.
pub fn nondegeneracy_margin(omega: &TwoForm, chart: &Chart) -> Result<f64, FieldError> {
    if omega.dim % 2 != 0 {
        return Err(FieldError::OddDimension(omega.dim));
    }
    let mut best = f64::INFINITY;
    for v in omega.comps.eval_many(&chart.grid_points()) {
        let det = matrix_from_row_major(omega.dim, &v?).determinant();
        best = best.min(det.abs());
    }
    Ok(best)
}
