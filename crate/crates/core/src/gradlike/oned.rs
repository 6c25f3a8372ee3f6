//! The one-dimensional obstruction to condition (3).
//!
//! On a line, `φ' = g X` forces `g = φ'/X` off the zeros of `X`. A continuous
//! positive `g` exists only if the one-sided limits of that quotient at every
//! zero agree and are positive.

use serde::Serialize;

use super::GradError;
use crate::critical::find_zeros;
use crate::expr::{EvalError, Scalar, Wide};
use crate::fields::{Chart, ScalarField, VectorField};
use crate::tol::Tolerances;

/// Offsets `r₀ 2^{-k}` used for the one-sided limits.
const LIMIT_R0: f64 = 0.5;
const LIMIT_LEVELS: i32 = 8;
/// Relative agreement required between the last two extrapolated values.
const LIMIT_TOL: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OneSidedLimits {
    pub zero: f64,
    pub left: Option<f64>,
    pub right: Option<f64>,
    pub obstruction: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ForcedTensor1d {
    /// `(x, φ'(x)/X(x))` at lattice points off the zeros of `X`.
    pub samples: Vec<(f64, f64)>,
    pub limits: Vec<OneSidedLimits>,
    pub obstruction: bool,
}

fn forced_value(phi_prime: &crate::expr::Expr, x: &VectorField, p: f64) -> Result<Option<f64>, EvalError> {
    let d: Wide = phi_prime.eval_wide(&[p])?;
    let xv = x.components().eval_wide(&[p])?[0];
    if xv.is_zero() {
        return Ok(None);
    }
    Ok(Some((d / xv).to_f64()))
}

/// Richardson extrapolation of a sequence sampled at halving step sizes,
/// assuming first-order error. `None` if the values are not finite or the
/// extrapolants have not settled.
fn richardson(values: &[f64]) -> Option<f64> {
    if values.len() < 3 || values.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let ext: Vec<f64> = values.windows(2).map(|w| 2.0 * w[1] - w[0]).collect();
    let (a, b) = (ext[ext.len() - 2], ext[ext.len() - 1]);
    ((b - a).abs() <= LIMIT_TOL * b.abs().max(1.0)).then_some(b)
}

/// Forced tensor `g = φ'/X` with left and right limits at each zero of `X`.
pub fn forced_tensor_1d(
    phi: &ScalarField,
    x: &VectorField,
    chart: &Chart,
    tol: &Tolerances,
) -> Result<ForcedTensor1d, GradError> {
    if phi.dim() != 1 || x.dim() != 1 || chart.dim() != 1 {
        return Err(GradError::NotOneDimensional(phi.dim().max(x.dim())));
    }
    let zeros = find_zeros(x, chart, tol);
    if !zeros.non_isolated.is_empty() {
        return Err(GradError::NonIsolatedZeros);
    }
    let d = phi.expr().diff(0);

    let mut samples = Vec::new();
    for p in chart.grid_points_excluding(&zeros.isolated) {
        if let Some(v) = forced_value(&d, x, p[0])? {
            samples.push((p[0], v));
        }
    }

    let mut limits = Vec::with_capacity(zeros.isolated.len());
    for z in &zeros.isolated {
        let z = z[0];
        let side = |sign: f64| -> Result<Option<f64>, EvalError> {
            let mut vals = Vec::new();
            for k in 0..=LIMIT_LEVELS {
                let p = z + sign * LIMIT_R0 * 0.5f64.powi(k);
                if !chart.contains(&[p], 0.0) {
                    continue;
                }
                match forced_value(&d, x, p)? {
                    Some(v) => vals.push(v),
                    None => return Ok(None),
                }
            }
            Ok(richardson(&vals))
        };
        let left = side(-1.0)?;
        let right = side(1.0)?;
        let obstruction = match (left, right) {
            (Some(l), Some(r)) => !(l > 0.0 && r > 0.0) || (l - r).abs() > LIMIT_TOL,
            _ => true,
        };
        limits.push(OneSidedLimits {
            zero: z,
            left,
            right,
            obstruction,
        });
    }
    let obstruction = limits.iter().any(|l| l.obstruction);
    Ok(ForcedTensor1d {
        samples,
        limits,
        obstruction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn pair(phi: &str, x: &str) -> (ScalarField, VectorField) {
        let v = vec!["x".to_string()];
        (
            ScalarField::new(1, parse(phi, &v).unwrap()).unwrap(),
            VectorField::from_exprs(1, vec![parse(x, &v).unwrap()]).unwrap(),
        )
    }

    fn run(phi: &str, x: &str) -> ForcedTensor1d {
        let (phi, x) = pair(phi, x);
        forced_tensor_1d(&phi, &x, &Chart::centered(1, 1.0).unwrap(), &Tolerances::default()).unwrap()
    }

    #[test]
    fn bump_pair_is_obstructed() {
        let f = run(
            "sgncase(x; exp(-1/x^2), 0, exp(-1/x^2))",
            "sgncase(x; 2/x^3*exp(-1/x^2), 0, 1/x^3*exp(-1/x^2))",
        );
        assert_eq!(f.limits.len(), 1);
        let l = &f.limits[0];
        assert!((l.left.unwrap() - 1.0).abs() < 1e-3);
        assert!((l.right.unwrap() - 2.0).abs() < 1e-3);
        assert!(f.obstruction);
    }

    #[test]
    fn linear_pair_is_not_obstructed() {
        let f = run("x^2", "x");
        let l = &f.limits[0];
        assert_eq!((l.left, l.right), (Some(2.0), Some(2.0)));
        assert!(!f.obstruction);
        assert!(f.samples.iter().all(|(_, g)| (g - 2.0).abs() < 1e-15));
    }

    #[test]
    fn cubic_quartic_has_no_finite_limit() {
        let f = run("x^3", "x^4");
        assert!(f.limits[0].left.is_none() && f.limits[0].right.is_none());
        assert!(f.obstruction);
    }

    #[test]
    fn rejects_higher_dimensions() {
        let v: Vec<String> = vec!["x".into(), "y".into()];
        let phi = ScalarField::new(2, parse("x", &v).unwrap()).unwrap();
        let x = VectorField::from_exprs(2, vec![parse("1", &v).unwrap(), parse("0", &v).unwrap()]).unwrap();
        assert!(matches!(
            forced_tensor_1d(&phi, &x, &Chart::centered(2, 1.0).unwrap(), &Tolerances::default()),
            Err(GradError::NotOneDimensional(2))
        ));
    }
}
