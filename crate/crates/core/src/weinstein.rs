//! Weinstein triples `(ω, X, φ)`, the deformation operator and fixtures.
//!
//! A triple is Weinstein when `ω` is symplectic, `X` is Liouville
//! (`L_X ω = ω`) and `(X, φ)` is gradient-like in the tensor sense. The
//! deformation keeps the connection operator `A`, defined by
//! `ω(·, A·) = g(·, ·)`, and rebuilds everything else from a new function:
//!
//! ```text
//! λ̃ = dφ̃ ∘ A⁻¹    ω̃ = dλ̃    i_X̃ ω̃ = λ̃    g̃ = ω̃(·, A·)
//! ```
//!
//! so that `dω̃ = 0`, `L_X̃ ω̃ = ω̃` and `dφ̃ = g̃(X̃, ·)` hold by construction
//! and only the positivity of `g̃` and the nondegeneracy of `ω̃` need checking.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::critical::lex_cmp;
use crate::expr::{EvalError, Expr};
use crate::fields::linalg;
use crate::fields::{
    closedness_residual, differential, exterior_derivative_1, interior_product,
    lie_derivative_residual, nondegeneracy_margin, Chart, Components, FieldError, OneForm,
    ScalarField, TensorField, TwoForm, VectorField,
};
use crate::gradlike::{
    certify, check_certificate, Certificate, Region, Status, Verdict, Witness,
};
use crate::numeric::{matrix_from_row_major, positivity_margin, weakest_direction};
use crate::tol::Tolerances;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WeinsteinError {
    #[error("two-form is degenerate at {at:?} (|det| = {det:e})")]
    Degenerate { at: Vec<f64>, det: f64 },
    #[error("input is inconsistent: |dφ∘A⁻¹ − λ| = {residual:e}")]
    InconsistentInput { residual: f64 },
    #[error("deformation is not close enough: {reason}")]
    NotCloseEnough {
        reason: String,
        diagnostics: Box<DeformationDiagnostics>,
    },
    #[error("J is not almost complex: |J² + I| = {residual:e} at {at:?}")]
    NotAlmostComplex { at: Vec<f64>, residual: f64 },
    #[error("φ is not J-convex at {at:?}: margin {margin} along {direction:?}")]
    NotJConvex {
        at: Vec<f64>,
        direction: Vec<f64>,
        margin: f64,
    },
    #[error("invalid fixture: {0}")]
    InvalidFixture(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// `(ω, X, φ)` with an optional certificate `g` for `dφ = g(X, ·)`.
#[derive(Clone, Debug)]
pub struct WeinsteinStructure {
    omega: TwoForm,
    x: VectorField,
    phi: ScalarField,
    certificate: Option<TensorField>,
}

impl WeinsteinStructure {
    pub fn new(
        omega: TwoForm,
        x: VectorField,
        phi: ScalarField,
        certificate: Option<TensorField>,
    ) -> Result<Self, WeinsteinError> {
        let m = omega.dim();
        let dims = [x.dim(), phi.dim()]
            .into_iter()
            .chain(certificate.as_ref().map(TensorField::dim));
        if dims.into_iter().any(|d| d != m) {
            return Err(WeinsteinError::DimensionMismatch(
                "ω, X, φ and g must live on the same chart".into(),
            ));
        }
        Ok(WeinsteinStructure {
            omega,
            x,
            phi,
            certificate,
        })
    }

    pub fn dim(&self) -> usize {
        self.omega.dim()
    }

    pub fn omega(&self) -> &TwoForm {
        &self.omega
    }

    pub fn x(&self) -> &VectorField {
        &self.x
    }

    pub fn phi(&self) -> &ScalarField {
        &self.phi
    }

    pub fn certificate(&self) -> Option<&TensorField> {
        self.certificate.as_ref()
    }

    /// Liouville form `λ = i_X ω`.
    pub fn lambda(&self) -> OneForm {
        interior_product(&self.x, &self.omega).expect("dimensions checked on construction")
    }
}

fn max_over<F>(points: &[Vec<f64>], f: F) -> Result<(f64, Vec<f64>), EvalError>
where
    F: Fn(&[f64]) -> Result<f64, EvalError> + Sync,
{
    let vals: Vec<Result<f64, EvalError>> = points.par_iter().map(|p| f(p)).collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for (p, v) in points.iter().zip(vals) {
        let v = v?;
        let better = match &best {
            None => true,
            Some((b, q)) => v > *b || (v == *b && lex_cmp(p, q).is_lt()),
        };
        if better {
            best = Some((v, p.clone()));
        }
    }
    Ok(best.unwrap_or((0.0, Vec::new())))
}

fn component_gap(a: &Components, b: &Components, points: &[Vec<f64>]) -> Result<f64, EvalError> {
    let diff = linalg::sub(a, b);
    Ok(max_over(points, |p| Ok(diff.eval(p)?.iter().fold(0.0f64, |m, v| m.max(v.abs()))))?.0)
}

#[derive(Clone, Debug, Serialize)]
pub struct WeinsteinReport {
    pub status: Status,
    pub closedness_residual: Option<f64>,
    pub nondegeneracy_margin: Option<f64>,
    pub liouville_residual: Option<f64>,
    pub verdicts: BTreeMap<String, Verdict>,
    pub certificate: Option<Certificate>,
    pub notes: Vec<String>,
}

/// Definition items (i)–(iii) on the chart lattice. Exhaustion of `φ` is not
/// checked on a compact chart.
pub fn check_weinstein(w: &WeinsteinStructure, chart: &Chart, tol: &Tolerances) -> WeinsteinReport {
    let mut report = WeinsteinReport {
        status: Status::Pass,
        closedness_residual: None,
        nondegeneracy_margin: None,
        liouville_residual: None,
        verdicts: BTreeMap::new(),
        certificate: None,
        notes: vec!["exhausting property of phi not checked on a compact chart".into()],
    };
    let put = |report: &mut WeinsteinReport, name: &str, v: Verdict| {
        report.status = report.status.worst(v.status);
        report.verdicts.insert(name.to_string(), v);
    };
    if w.dim() % 2 != 0 || w.dim() != chart.dim() {
        let v = Verdict::inconclusive(format!(
            "need an even-dimensional chart matching ω; ω on ℝ^{}, chart ℝ^{}",
            w.dim(),
            chart.dim()
        ));
        put(&mut report, "symplectic", v);
        return report;
    }

    let err = |e: FieldError| Verdict::fail(Witness::new(&[], &[])).with_note(e.to_string());
    let closed = match closedness_residual(&w.omega, chart) {
        Ok(r) => {
            report.closedness_residual = Some(r);
            if r < tol.closed {
                Verdict::pass(tol.closed - r)
            } else {
                Verdict::fail(Witness::new(&[], &[("closedness_residual", r)])).with_note("dω ≠ 0")
            }
        }
        Err(e) => err(e),
    };
    put(&mut report, "closed", closed);

    let nondeg = match nondegeneracy_margin(&w.omega, chart) {
        Ok(d) => {
            report.nondegeneracy_margin = Some(d);
            if d > 0.0 {
                Verdict::pass(d)
            } else {
                Verdict::fail(Witness::new(&[], &[("min_abs_det", d)])).with_note("ω is degenerate")
            }
        }
        Err(e) => err(e),
    };
    put(&mut report, "nondegenerate", nondeg);

    let liouville = match lie_derivative_residual(&w.x, &w.omega, chart, tol.closed) {
        Ok(r) => {
            report.liouville_residual = Some(r);
            if r < tol.liouville {
                Verdict::pass(tol.liouville - r)
            } else {
                Verdict::fail(Witness::new(&[], &[("liouville_residual", r)]))
                    .with_note("L_X ω ≠ ω")
            }
        }
        Err(e) => err(e),
    };
    put(&mut report, "liouville", liouville);

    let gradient_like = match &w.certificate {
        Some(g) => {
            let cert = check_certificate(
                &w.phi,
                &w.x,
                g,
                Region::Chart {
                    chart: chart.clone(),
                },
                tol,
            );
            let v = cert.verdict().clone();
            report.certificate = Some(cert);
            v
        }
        None => match certify(&w.phi, &w.x, chart, tol) {
            Ok(r) => {
                let mut v = match &r.certificate {
                    Some(c) if r.status == Status::Pass => c.verdict().clone(),
                    _ => Verdict::inconclusive("no global certificate found"),
                };
                v.status = v.status.worst(r.status);
                v.notes.extend(r.notes.iter().cloned());
                report.certificate = r.certificate;
                v
            }
            Err(e) => Verdict::fail(Witness::new(&[], &[])).with_note(e.to_string()),
        },
    };
    put(&mut report, "gradient_like", gradient_like);
    report
}

/// The bundle map `A` with `ω(·, A·) = g(·, ·)`, i.e. `A = −Ω⁻¹Mᵀ`, and
/// `A⁻ᵀ = Ω M⁻¹` (the matrix of `λ ↦ dφ ∘ A⁻¹`).
#[derive(Clone, Debug)]
pub struct ConnectionOperator {
    dim: usize,
    a: Components,
    a_inv_t: Components,
}

impl ConnectionOperator {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major `A`.
    pub fn a(&self) -> &Components {
        &self.a
    }

    /// Row-major `A⁻ᵀ`.
    pub fn a_inv_transpose(&self) -> &Components {
        &self.a_inv_t
    }

    pub fn matrix(&self, p: &[f64]) -> Result<nalgebra::DMatrix<f64>, EvalError> {
        Ok(matrix_from_row_major(self.dim, &self.a.eval(p)?))
    }

    /// `dφ ∘ A⁻¹` as a one-form.
    pub fn pull(&self, phi: &ScalarField) -> OneForm {
        let comps = linalg::mat_vec(&self.a_inv_t, differential(phi).components(), self.dim);
        OneForm::new(self.dim, comps.simplified()).expect("square operator")
    }

    /// `g̃ = ω̃(·, A·)`, i.e. `M̃ = Aᵀ Ω̃`.
    pub fn push(&self, omega: &TwoForm) -> TensorField {
        let at = linalg::transpose(&self.a, self.dim);
        let m = linalg::mat_mul(&at, omega.components(), self.dim).simplified();
        TensorField::new(self.dim, m).expect("square operator")
    }
}

/// Builds `A` from `ω` and `g`, checking nondegeneracy on the lattice and the
/// defining relation `ΩᵀA = Mᵀ`.
pub fn connection_operator(
    omega: &TwoForm,
    g: &TensorField,
    chart: &Chart,
    tol: &Tolerances,
) -> Result<ConnectionOperator, WeinsteinError> {
    let m = omega.dim();
    if g.dim() != m {
        return Err(WeinsteinError::DimensionMismatch(format!(
            "ω on ℝ^{m}, g on ℝ^{}",
            g.dim()
        )));
    }
    let points = chart.grid_points();
    let (neg_det, at) = max_over(&points, |p| Ok(-omega.matrix(p)?.determinant().abs()))?;
    if !(-neg_det > 0.0) {
        return Err(WeinsteinError::Degenerate { at, det: -neg_det });
    }
    let omega_c = omega.components();
    let mt = linalg::transpose(g.components(), m);
    let a = linalg::scale(&linalg::mat_mul(&linalg::inverse(omega_c, m), &mt, m), -1.0).simplified();
    let a_inv_t = linalg::mat_mul(omega_c, &linalg::inverse(g.components(), m), m).simplified();
    let relation = linalg::mat_mul(&linalg::transpose(omega_c, m), &a, m);
    let residual = component_gap(&relation, &mt, &points)?;
    if residual >= tol.closed {
        return Err(WeinsteinError::Degenerate {
            at: Vec::new(),
            det: -neg_det,
        });
    }
    Ok(ConnectionOperator { dim: m, a, a_inv_t })
}

/// Measured identities of one deformation.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct DeformationDiagnostics {
    pub t: Option<f64>,
    /// `|dφ ∘ A⁻¹ − λ|` for the input structure.
    pub input_consistency: f64,
    /// `|dω̃|`.
    pub closedness: f64,
    /// `min |det Ω̃|`.
    pub nondegeneracy: f64,
    /// `|L_X̃ ω̃ − ω̃|`.
    pub liouville: f64,
    /// `|i_X̃ ω̃ − λ̃|`.
    pub interior: f64,
    /// `|M̃X̃ − ∇φ̃|`.
    pub certificate_residual: f64,
    /// `min λ_min(½(M̃ + M̃ᵀ))`.
    pub positivity_margin: f64,
}

#[derive(Clone, Debug)]
pub struct DeformationResult {
    pub structure: WeinsteinStructure,
    pub lambda: OneForm,
    pub connection: ConnectionOperator,
    pub diagnostics: DeformationDiagnostics,
}

/// The deformed triple for a new function `φ̃`, keeping `A`. Fails with
/// `NotCloseEnough` when `ω̃` degenerates or `g̃` stops being positive.
pub fn deform(
    w: &WeinsteinStructure,
    g: &TensorField,
    phi_tilde: &ScalarField,
    chart: &Chart,
    tol: &Tolerances,
) -> Result<DeformationResult, WeinsteinError> {
    let m = w.dim();
    if phi_tilde.dim() != m || chart.dim() != m {
        return Err(WeinsteinError::DimensionMismatch(format!(
            "structure on ℝ^{m}, φ̃ on ℝ^{}, chart ℝ^{}",
            phi_tilde.dim(),
            chart.dim()
        )));
    }
    let points = chart.grid_points();
    let conn = connection_operator(&w.omega, g, chart, tol)?;
    let input_consistency = component_gap(
        conn.pull(&w.phi).components(),
        w.lambda().components(),
        &points,
    )?;
    if input_consistency >= tol.consistency {
        return Err(WeinsteinError::InconsistentInput {
            residual: input_consistency,
        });
    }

    let lambda = conn.pull(phi_tilde);
    let omega = exterior_derivative_1(&lambda);
    let omega = TwoForm::new(m, omega.components().simplified())?;
    let x = VectorField::new(m, linalg::solve(omega.components(), lambda.components(), m))?;
    let g_tilde = conn.push(&omega);

    let mut diag = DeformationDiagnostics {
        input_consistency,
        closedness: closedness_residual(&omega, chart)?,
        nondegeneracy: nondegeneracy_margin(&omega, chart)?,
        ..Default::default()
    };
    let fail = |reason: String, diag: DeformationDiagnostics| WeinsteinError::NotCloseEnough {
        reason,
        diagnostics: Box::new(diag),
    };
    if !(diag.nondegeneracy > 0.0) || !diag.nondegeneracy.is_finite() {
        return Err(fail("ω̃ is degenerate on the chart".into(), diag));
    }
    let interior = interior_product(&x, &omega)?;
    diag.interior = match component_gap(interior.components(), lambda.components(), &points) {
        Ok(v) => v,
        Err(e) => return Err(fail(format!("X̃ is undefined: {e}"), diag)),
    };
    diag.liouville = lie_derivative_residual(&x, &omega, chart, tol.closed)?;
    let cert = check_certificate(
        phi_tilde,
        &x,
        &g_tilde,
        Region::Chart {
            chart: chart.clone(),
        },
        tol,
    );
    diag.certificate_residual = cert.residual();
    diag.positivity_margin = cert.positivity_margin();
    if !(diag.positivity_margin > 0.0) {
        return Err(fail("g̃ is not positive on the chart".into(), diag));
    }
    if !cert.passes() || diag.interior >= tol.liouville || diag.liouville >= tol.liouville {
        return Err(fail(
            "deformed identities do not hold to tolerance".into(),
            diag,
        ));
    }
    let structure = WeinsteinStructure::new(omega, x, phi_tilde.clone(), Some(g_tilde))?;
    Ok(DeformationResult {
        structure,
        lambda,
        connection: conn,
        diagnostics: diag,
    })
}

#[derive(Clone, Debug)]
pub struct HomotopyResult {
    /// Passing deformations in order of `t`.
    pub results: Vec<DeformationResult>,
    /// First `t` that failed, with the reason.
    pub failure: Option<(f64, WeinsteinError)>,
}

impl HomotopyResult {
    pub fn all_passed(&self) -> bool {
        self.failure.is_none()
    }
}

/// Deformations along `φ_t = (1 − t)φ + tφ̃` for `steps` uniform values of
/// `t ∈ [0, 1]`, stopping at the first failure.
pub fn homotopy(
    w: &WeinsteinStructure,
    g: &TensorField,
    phi_tilde: &ScalarField,
    steps: usize,
    chart: &Chart,
    tol: &Tolerances,
) -> HomotopyResult {
    let mut out = HomotopyResult {
        results: Vec::new(),
        failure: None,
    };
    let m = w.dim();
    for i in 0..steps {
        let t = if steps == 1 {
            0.0
        } else {
            i as f64 / (steps - 1) as f64
        };
        let expr = Expr::add(
            Expr::mul(Expr::Const(1.0 - t), w.phi.expr().clone()),
            Expr::mul(Expr::Const(t), phi_tilde.expr().clone()),
        );
        let phi_t = match ScalarField::new(m, expr) {
            Ok(f) => f,
            Err(e) => {
                out.failure = Some((t, e.into()));
                break;
            }
        };
        match deform(w, g, &phi_t, chart, tol) {
            Ok(mut r) => {
                r.diagnostics.t = Some(t);
                out.results.push(r);
            }
            Err(mut e) => {
                if let WeinsteinError::NotCloseEnough { diagnostics, .. } = &mut e {
                    diagnostics.t = Some(t);
                }
                out.failure = Some((t, e));
                break;
            }
        }
    }
    out
}

/// Standard complex structure on `ℝ^{2n}` in coordinates `(x₁, y₁, …)`:
/// `J e_{x} = e_{y}`, `J e_{y} = −e_{x}`.
pub fn standard_j(dim: usize) -> TensorField {
    let mut m = nalgebra::DMatrix::zeros(dim, dim);
    for k in 0..dim / 2 {
        m[(2 * k + 1, 2 * k)] = 1.0;
        m[(2 * k, 2 * k + 1)] = -1.0;
    }
    TensorField::constant(dim, &m)
}

/// Weinstein structure of a J-convex function: `ω_φ = −d(dφ∘J)`,
/// `g_φ = ω_φ(·, J·)`, `X_φ` with `dφ = g_φ(X_φ, ·)`. `g_φ` need not be
/// symmetric when `J` is not integrable.
pub fn stein_to_weinstein(
    j: &TensorField,
    phi: &ScalarField,
    chart: &Chart,
    tol: &Tolerances,
) -> Result<WeinsteinStructure, WeinsteinError> {
    let m = phi.dim();
    if j.dim() != m || chart.dim() != m {
        return Err(WeinsteinError::DimensionMismatch(format!(
            "J on ℝ^{}, φ on ℝ^{m}, chart ℝ^{}",
            j.dim(),
            chart.dim()
        )));
    }
    let points = chart.grid_points();
    let jc = j.components();
    let j2 = linalg::add(&linalg::mat_mul(jc, jc, m), TensorField::identity(m).components());
    let (residual, at) = max_over(&points, |p| {
        Ok(j2.eval(p)?.iter().fold(0.0f64, |a, v| a.max(v.abs())))
    })?;
    if residual >= tol.almost_complex {
        return Err(WeinsteinError::NotAlmostComplex { at, residual });
    }

    let jt = linalg::transpose(jc, m);
    let alpha = OneForm::new(m, linalg::mat_vec(&jt, differential(phi).components(), m).simplified())?;
    let omega = TwoForm::new(
        m,
        linalg::scale(exterior_derivative_1(&alpha).components(), -1.0).simplified(),
    )?;
    let g = TensorField::new(m, linalg::mat_mul(&jt, omega.components(), m).simplified())?;

    let (neg_margin, at) = max_over(&points, |p| Ok(-positivity_margin(&g.matrix(p)?)))?;
    let margin = -neg_margin;
    if !(margin > 0.0) {
        let direction = weakest_direction(&g.matrix(&at)?);
        return Err(WeinsteinError::NotJConvex {
            at,
            direction,
            margin,
        });
    }
    let x = VectorField::new(
        m,
        linalg::solve(g.components(), differential(phi).components(), m).simplified(),
    )?;
    WeinsteinStructure::new(omega, x, phi.clone(), Some(g))
}

/// Coordinate names `q1..qn, p1..pn` of the cotangent fixture.
pub fn cotangent_vars(n: usize) -> Vec<String> {
    (1..=n)
        .map(|i| format!("q{i}"))
        .chain((1..=n).map(|i| format!("p{i}")))
        .collect()
}

/// `T*ℝⁿ` with `λ = Σ pᵢ dqᵢ`, `ω = dλ`, `X = Σ pᵢ ∂_{pᵢ}`, `φ = ½|p|²` and
/// the Euclidean certificate.
pub fn cotangent_fixture(n: usize) -> Result<WeinsteinStructure, WeinsteinError> {
    if n == 0 {
        return Err(WeinsteinError::InvalidFixture("n must be at least 1".into()));
    }
    let m = 2 * n;
    let lambda: Vec<Expr> = (0..m)
        .map(|i| if i < n { Expr::var(n + i) } else { Expr::Const(0.0) })
        .collect();
    let omega = exterior_derivative_1(&OneForm::from_exprs(m, lambda)?);
    let omega = TwoForm::new(m, omega.components().simplified())?;
    let x: Vec<Expr> = (0..m)
        .map(|i| if i < n { Expr::Const(0.0) } else { Expr::var(i) })
        .collect();
    let phi = Expr::mul(
        Expr::Const(0.5),
        Expr::sum((n..m).map(|i| Expr::pow(Expr::var(i), 2))),
    );
    WeinsteinStructure::new(
        omega,
        VectorField::from_exprs(m, x)?,
        ScalarField::new(m, phi)?,
        Some(TensorField::identity(m)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn xy() -> Vec<String> {
        vec!["x".into(), "y".into()]
    }

    fn scalar(src: &str) -> ScalarField {
        ScalarField::new(2, parse(src, &xy()).unwrap()).unwrap()
    }

    fn vector(src: &[&str]) -> VectorField {
        VectorField::from_exprs(2, src.iter().map(|s| parse(s, &xy()).unwrap()).collect()).unwrap()
    }

    fn dx_dy() -> TwoForm {
        TwoForm::from_wedges(2, &[(0, 1, Expr::Const(1.0))]).unwrap()
    }

    fn radial() -> WeinsteinStructure {
        WeinsteinStructure::new(
            dx_dy(),
            vector(&["x/2", "y/2"]),
            scalar("(x^2 + y^2)/4"),
            Some(TensorField::identity(2)),
        )
        .unwrap()
    }

    fn chart() -> Chart {
        Chart::centered(2, 1.0).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
    }

    #[test]
    fn check_examples() {
        let tol = Tolerances::default();
        let r = check_weinstein(&radial(), &chart(), &tol);
        assert_eq!(r.status, Status::Pass, "{:?}", r.verdicts);
        assert!(r.liouville_residual.unwrap() < 1e-10);
        assert!(close(&radial().lambda().eval(&[0.4, 0.2]).unwrap(), &[-0.1, 0.2], 1e-15));

        let w = WeinsteinStructure::new(dx_dy(), vector(&["x", "y"]), scalar("(x^2 + y^2)/2"), Some(TensorField::identity(2)))
            .unwrap();
        let r = check_weinstein(&w, &chart(), &tol);
        assert_eq!(r.verdicts["liouville"].status, Status::Fail);
        assert!((r.liouville_residual.unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn connection_examples() {
        let tol = Tolerances::default();
        let c = connection_operator(&dx_dy(), &TensorField::identity(2), &chart(), &tol).unwrap();
        let a = c.matrix(&[0.0, 0.0]).unwrap();
        assert!((&a * &a + nalgebra::DMatrix::<f64>::identity(2, 2)).abs().max() < 1e-15);
        // ω(v, Av) = |v|²
        let v = [0.3, -0.7];
        let av: Vec<f64> = (&a * nalgebra::DVector::from_column_slice(&v)).iter().copied().collect();
        assert!((dx_dy().pair(&[0.0, 0.0], &v, &av).unwrap() - 0.58).abs() < 1e-15);

        let g2 = TensorField::constant(2, &(nalgebra::DMatrix::identity(2, 2) * 2.0));
        let c2 = connection_operator(&dx_dy(), &g2, &chart(), &tol).unwrap();
        assert!((c2.matrix(&[0.0, 0.0]).unwrap() - a * 2.0).abs().max() < 1e-15);

        let flat = TwoForm::from_wedges(2, &[(0, 1, Expr::Const(0.0))]).unwrap();
        assert!(matches!(
            connection_operator(&flat, &TensorField::identity(2), &chart(), &tol),
            Err(WeinsteinError::Degenerate { .. })
        ));
    }

    #[test]
    fn scaling_and_identity_deformations() {
        let tol = Tolerances::default();
        let w = radial();
        let g = TensorField::identity(2);
        let pts = chart().grid_points();
        for a in [1.0, 1.1, 0.5, 1.5] {
            let phi = ScalarField::new(
                2,
                Expr::add(Expr::mul(Expr::Const(a), w.phi().expr().clone()), Expr::Const(0.25)),
            )
            .unwrap();
            let r = deform(&w, &g, &phi, &chart(), &tol).unwrap();
            for p in pts.iter().step_by(37) {
                let l0 = w.lambda().eval(p).unwrap();
                let l1 = r.lambda.eval(p).unwrap();
                assert!(close(&l1, &l0.iter().map(|v| a * v).collect::<Vec<_>>(), 1e-12));
                let x1 = r.structure.x().eval(p).unwrap();
                assert!(close(&x1, &w.x().eval(p).unwrap(), 1e-12));
                let o1 = r.structure.omega().eval(p).unwrap();
                assert!(close(&o1, &[0.0, -a, a, 0.0], 1e-12));
                let g1 = r.structure.certificate().unwrap().eval(p).unwrap();
                assert!(close(&g1, &[a, 0.0, 0.0, a], 1e-12));
            }
        }
    }

    #[test]
    fn bump_deformation_margin() {
        let tol = Tolerances::default();
        let phi = scalar("(x^2 + y^2)/4 + 0.05*exp(-4*(x^2 + y^2))");
        let r = deform(&radial(), &TensorField::identity(2), &phi, &chart(), &tol).unwrap();
        // g̃ = Δφ̃ I, smallest at the origin: 1 − 0.05·16
        assert!((r.diagnostics.positivity_margin - 0.2).abs() < 1e-12);
        assert!(r.diagnostics.liouville < 1e-8);
    }

    #[test]
    fn large_tilt_is_self_consistent() {
        let tol = Tolerances::default();
        let phi = scalar("(x^2 + y^2)/4 + 10*x");
        match deform(&radial(), &TensorField::identity(2), &phi, &chart(), &tol) {
            Ok(r) => assert!(r.diagnostics.positivity_margin > 0.0),
            Err(WeinsteinError::NotCloseEnough { diagnostics, .. }) => {
                assert!(!(diagnostics.positivity_margin > 0.0) || diagnostics.nondegeneracy <= 0.0
                    || diagnostics.liouville >= tol.liouville || diagnostics.interior >= tol.liouville)
            }
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn homotopy_examples() {
        let tol = Tolerances::default();
        let w = radial();
        let g = TensorField::identity(2);
        let phi = scalar("(x^2 + y^2)/4 + 0.05*exp(-4*(x^2 + y^2))");
        let h = homotopy(&w, &g, &phi, 11, &chart(), &tol);
        assert!(h.all_passed());
        assert_eq!(h.results.len(), 11);

        let h = homotopy(&w, &g, &phi, 2, &chart(), &tol);
        assert_eq!(h.results.len(), 2);
        assert_eq!(h.results[0].diagnostics.t, Some(0.0));

        // g̃ = Δφ_t I with Δφ̃ = 1 − 2 = −1 < 0: fails before t = 1
        let bad = scalar("(x^2 + y^2)/4 - (x^2 + y^2)/2");
        let h = homotopy(&w, &g, &bad, 5, &chart(), &tol);
        let (t, _) = h.failure.as_ref().unwrap();
        assert!(*t > 0.0 && *t <= 1.0);
        assert!(h.results.iter().all(|r| r.diagnostics.t.unwrap() < *t));
    }

    #[test]
    fn stein_examples() {
        let tol = Tolerances::default();
        let w = stein_to_weinstein(&standard_j(2), &scalar("(x^2 + y^2)/2"), &chart(), &tol).unwrap();
        let omega = w.omega().components().constant_values().unwrap();
        assert_eq!(omega, vec![0.0, -2.0, 2.0, 0.0]);
        assert!(close(&w.x().eval(&[0.6, -0.4]).unwrap(), &[0.3, -0.2], 1e-15));
        assert_eq!(check_weinstein(&w, &chart(), &tol).status, Status::Pass);

        assert!(matches!(
            stein_to_weinstein(&standard_j(2), &scalar("x^2 - y^2"), &chart(), &tol),
            Err(WeinsteinError::NotJConvex { .. })
        ));

        // g_φ is unchanged by J ↦ −J, so the opposite structure is J-convex too
        let minus_j = TensorField::constant(2, &-standard_j(2).matrix(&[0.0, 0.0]).unwrap());
        let w = stein_to_weinstein(&minus_j, &scalar("(x^2 + y^2)/2"), &chart(), &tol).unwrap();
        assert_eq!(w.omega().components().constant_values().unwrap(), vec![0.0, 2.0, -2.0, 0.0]);
        assert_eq!(w.certificate().unwrap().components().constant_values().unwrap(), vec![2.0, 0.0, 0.0, 2.0]);

        let not_j = TensorField::identity(2);
        assert!(matches!(
            stein_to_weinstein(&not_j, &scalar("(x^2 + y^2)/2"), &chart(), &tol),
            Err(WeinsteinError::NotAlmostComplex { .. })
        ));
    }

    #[test]
    fn cotangent_examples() {
        let tol = Tolerances::default();
        for n in [1, 2] {
            let w = cotangent_fixture(n).unwrap();
            let chart = Chart::centered(2 * n, 1.0).unwrap().with_resolution(9).unwrap();
            let r = check_weinstein(&w, &chart, &tol);
            assert_eq!(r.status, Status::Pass, "{:?}", r.verdicts);
            assert!(r.liouville_residual.unwrap() < 1e-10);
        }
        assert!(matches!(cotangent_fixture(0), Err(WeinsteinError::InvalidFixture(_))));
        let w = cotangent_fixture(1).unwrap();
        let lam = w.lambda().eval(&[0.3, 0.7]).unwrap();
        assert_eq!(lam, vec![0.7, 0.0]);
    }
}
