//! Matrix algebra on row-major [`Components`], symbolic where possible.

use crate::expr::{EvalError, EvalErrorKind, Expr};
use crate::numeric::{matrix_from_row_major, solve as lu_solve};

use super::Components;

/// Largest dimension for which inverses are formed symbolically (adjugate).
pub const SYMBOLIC_INVERSE_MAX_DIM: usize = 4;

pub fn mat_vec(a: &Components, v: &Components, m: usize) -> Components {
    a.zip_map(
        v,
        m,
        move |a, v| {
            (0..m)
                .map(|i| Expr::sum((0..m).map(|k| Expr::mul(a(i * m + k), v(k)))))
                .collect()
        },
        move |a, v| {
            (0..m)
                .map(|i| (0..m).map(|k| a[i * m + k] * v[k]).sum())
                .collect()
        },
    )
}

pub fn mat_mul(a: &Components, b: &Components, m: usize) -> Components {
    a.zip_map(
        b,
        m * m,
        move |a, b| {
            (0..m * m)
                .map(|idx| {
                    let (i, j) = (idx / m, idx % m);
                    Expr::sum((0..m).map(|k| Expr::mul(a(i * m + k), b(k * m + j))))
                })
                .collect()
        },
        move |a, b| {
            (0..m * m)
                .map(|idx| {
                    let (i, j) = (idx / m, idx % m);
                    (0..m).map(|k| a[i * m + k] * b[k * m + j]).sum()
                })
                .collect()
        },
    )
}

pub fn transpose(a: &Components, m: usize) -> Components {
    a.map(
        m * m,
        move |a| (0..m * m).map(|idx| a((idx % m) * m + idx / m)).collect(),
        move |a| (0..m * m).map(|idx| a[(idx % m) * m + idx / m]).collect(),
    )
}

pub fn sub(a: &Components, b: &Components) -> Components {
    let n = a.len();
    a.zip_map(
        b,
        n,
        move |a, b| (0..n).map(|i| Expr::sub(a(i), b(i))).collect(),
        |a, b| a.iter().zip(b).map(|(x, y)| x - y).collect(),
    )
}

pub fn add(a: &Components, b: &Components) -> Components {
    let n = a.len();
    a.zip_map(
        b,
        n,
        move |a, b| (0..n).map(|i| Expr::add(a(i), b(i))).collect(),
        |a, b| a.iter().zip(b).map(|(x, y)| x + y).collect(),
    )
}

pub fn scale(a: &Components, c: f64) -> Components {
    let n = a.len();
    a.map(
        n,
        move |a| (0..n).map(|i| Expr::mul(Expr::Const(c), a(i))).collect(),
        move |a| a.iter().map(|x| c * x).collect(),
    )
}

/// Determinant by cofactor expansion along the first row.
pub fn det_expr(entries: &[Expr], m: usize) -> Expr {
    match m {
        0 => Expr::Const(1.0),
        1 => entries[0].clone(),
        2 => Expr::sub(
            Expr::mul(entries[0].clone(), entries[3].clone()),
            Expr::mul(entries[1].clone(), entries[2].clone()),
        ),
        _ => {
            let mut terms = Vec::with_capacity(m);
            for j in 0..m {
                if entries[j].is_const(0.0) {
                    continue;
                }
                let term = Expr::mul(entries[j].clone(), det_expr(&minor(entries, m, 0, j), m - 1));
                terms.push(if j % 2 == 0 { term } else { Expr::neg(term) });
            }
            Expr::sum(terms)
        }
    }
}

fn minor(entries: &[Expr], m: usize, row: usize, col: usize) -> Vec<Expr> {
    let mut out = Vec::with_capacity((m - 1) * (m - 1));
    for i in (0..m).filter(|&i| i != row) {
        for j in (0..m).filter(|&j| j != col) {
            out.push(entries[i * m + j].clone());
        }
    }
    out
}

/// Adjugate, so that `A · adj(A) = det(A) · I`.
pub fn adjugate_expr(entries: &[Expr], m: usize) -> Vec<Expr> {
    if m == 1 {
        return vec![Expr::Const(1.0)];
    }
    let mut adj = vec![Expr::Const(0.0); m * m];
    for i in 0..m {
        for j in 0..m {
            let c = det_expr(&minor(entries, m, i, j), m - 1);
            // adj = cofactor matrixᵀ
            adj[j * m + i] = if (i + j) % 2 == 0 { c } else { Expr::neg(c) };
        }
    }
    adj
}

fn singular(p: &[f64]) -> EvalError {
    EvalError::new(EvalErrorKind::DivByZero, p)
}

/// Matrix inverse: adjugate over determinant for symbolic input up to
/// [`SYMBOLIC_INVERSE_MAX_DIM`], pointwise LU otherwise. Singular points
/// evaluate to `DivByZero`.
pub fn inverse(a: &Components, m: usize) -> Components {
    if let (Some(e), true) = (a.exprs(), m <= SYMBOLIC_INVERSE_MAX_DIM) {
        let det = det_expr(e, m).simplify();
        return Components::Symbolic(
            adjugate_expr(e, m)
                .into_iter()
                .map(|c| Expr::div(c, det.clone()).simplify())
                .collect(),
        );
    }
    let a = a.clone();
    Components::numeric(m * m, move |p| {
        let mat = matrix_from_row_major(m, &a.eval(p)?);
        let inv = mat.try_inverse().ok_or_else(|| singular(p))?;
        Ok((0..m * m).map(|idx| inv[(idx / m, idx % m)]).collect())
    })
}

/// Solution of `A x = b`, symbolic via adjugate when both inputs are symbolic
/// and `m` is small, pointwise LU otherwise.
pub fn solve(a: &Components, b: &Components, m: usize) -> Components {
    if let (Some(ae), Some(be), true) = (a.exprs(), b.exprs(), m <= SYMBOLIC_INVERSE_MAX_DIM) {
        let det = det_expr(ae, m).simplify();
        let adj = adjugate_expr(ae, m);
        return Components::Symbolic(
            (0..m)
                .map(|i| {
                    let num = Expr::sum((0..m).map(|k| Expr::mul(adj[i * m + k].clone(), be[k].clone())));
                    Expr::div(num, det.clone()).simplify()
                })
                .collect(),
        );
    }
    numeric_solve(a, b, m)
}

pub fn numeric_solve(a: &Components, b: &Components, m: usize) -> Components {
    let (a, b) = (a.clone(), b.clone());
    Components::numeric(m, move |p| {
        let mat = matrix_from_row_major(m, &a.eval(p)?);
        lu_solve(&mat, &b.eval(p)?).ok_or_else(|| singular(p))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn sym(src: &[&str]) -> Components {
        let vars: Vec<String> = ["x", "y", "z"].iter().map(|s| s.to_string()).collect();
        Components::Symbolic(src.iter().map(|s| parse(s, &vars).unwrap()).collect())
    }

    #[test]
    fn symbolic_and_numeric_inverse_agree() {
        let a = sym(&["2 + x", "y", "0", "1", "3", "z", "x*y", "0", "4"]);
        let inv_s = inverse(&a, 3);
        let inv_n = inverse(&a.to_numeric(), 3);
        assert!(inv_s.is_symbolic() && !inv_n.is_symbolic());
        let p = [0.3, -0.2, 0.9];
        let s = inv_s.eval(&p).unwrap();
        let n = inv_n.eval(&p).unwrap();
        for (x, y) in s.iter().zip(&n) {
            assert!((x - y).abs() < 1e-12);
        }
        let prod = mat_mul(&a, &inv_s, 3).eval(&p).unwrap();
        for (k, v) in prod.iter().enumerate() {
            let want = if k % 4 == 0 { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_inverse_folds_to_constants() {
        let a = sym(&["0", "-1", "1", "0"]);
        let inv = inverse(&a, 2);
        assert_eq!(inv.constant_values().unwrap(), vec![0.0, 1.0, -1.0, 0.0]);
    }

    #[test]
    fn singular_points_error() {
        let a = sym(&["x", "0", "0", "1"]);
        assert!(inverse(&a, 2).eval(&[0.0, 0.0, 0.0]).is_err());
        assert!(numeric_solve(&a, &sym(&["1", "1"]), 2).eval(&[0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn solve_matches_multiplication() {
        let a = sym(&["1", "x", "0", "2"]);
        let b = sym(&["x", "y"]);
        let x = solve(&a, &b, 2);
        let back = mat_vec(&a, &x, 2).eval(&[0.4, 0.7, 0.0]).unwrap();
        assert!((back[0] - 0.4).abs() < 1e-14 && (back[1] - 0.7).abs() < 1e-14);
    }
}
