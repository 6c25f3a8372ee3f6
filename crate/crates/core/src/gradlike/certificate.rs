//! Tensor certificates for condition (3) and their local constructions.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use super::{
    check_condition1, check_dims, gradient_components, GradError, MinTracker, Status, Verdict,
    Witness,
};
use crate::critical::{classify, CriticalKind, CriticalPoint};
use crate::expr::{EvalError, EvalErrorKind, Expr};
use crate::fields::linalg::{self, SYMBOLIC_INVERSE_MAX_DIM};
use crate::fields::{Chart, Components, ScalarField, TensorField, VectorField};
use crate::numeric::{
    distance, gauss_legendre_unit, inf_norm, matrix_from_row_major, norm_sq, operator_norm,
    positivity_margin,
};
use crate::tol::Tolerances;

/// Where a certificate was verified.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Region {
    Chart { chart: Chart },
    Ball { chart: Chart, center: Vec<f64>, radius: f64 },
}

impl Region {
    pub fn points(&self) -> Vec<Vec<f64>> {
        match self {
            Region::Chart { chart } => chart.grid_points(),
            Region::Ball {
                chart,
                center,
                radius,
            } => chart.ball_points(center, *radius),
        }
    }

    pub fn chart(&self) -> &Chart {
        match self {
            Region::Chart { chart } | Region::Ball { chart, .. } => chart,
        }
    }
}

/// A tensor field `g` with the measured residual of `MX = ∇φ` and the
/// positivity margin of `g`, both computed when the certificate is built.
#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    #[serde(skip)]
    g: TensorField,
    region: Region,
    residual: f64,
    residual_scale: f64,
    positivity_margin: f64,
    samples: usize,
    verdict: Verdict,
}

impl Certificate {
    pub fn g(&self) -> &TensorField {
        &self.g
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    /// `max |M X − ∇φ|_∞` over the region samples.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// `max(1, max |∇φ|_∞)`, the scale the residual is judged against.
    pub fn residual_scale(&self) -> f64 {
        self.residual_scale
    }

    /// `min λ_min(½(M + Mᵀ))` over the region samples.
    pub fn positivity_margin(&self) -> f64 {
        self.positivity_margin
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn verdict(&self) -> &Verdict {
        &self.verdict
    }

    pub fn passes(&self) -> bool {
        self.verdict.is_pass()
    }
}

struct PointCheck {
    residual: f64,
    grad_inf: f64,
    margin: f64,
}

fn check_point(
    grad: &Components,
    x: &VectorField,
    g: &TensorField,
    p: &[f64],
) -> Result<PointCheck, EvalError> {
    let m = g.matrix(p)?;
    let xv = x.eval(p)?;
    let gv = grad.eval(p)?;
    let mx = &m * nalgebra::DVector::from_column_slice(&xv);
    let residual = mx.iter().zip(&gv).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(PointCheck {
        residual,
        grad_inf: inf_norm(&gv),
        margin: positivity_margin(&m),
    })
}

/// Measures `g` as a certificate for `(X, φ)` on `region`. Passes when the
/// residual is below `tol.certificate · max(1, |∇φ|_∞)` and the margin is
/// positive.
pub fn check_certificate(
    phi: &ScalarField,
    x: &VectorField,
    g: &TensorField,
    region: Region,
    tol: &Tolerances,
) -> Certificate {
    let grad = gradient_components(phi);
    let points = region.points();
    let checks: Vec<Result<PointCheck, EvalError>> =
        points.par_iter().map(|p| check_point(&grad, x, g, p)).collect();

    let mut worst_res = MinTracker::new();
    let mut worst_margin = MinTracker::new();
    let mut scale = 1.0f64;
    let mut failure = None;
    for (p, c) in points.iter().zip(checks) {
        match c {
            Ok(c) => {
                worst_res.offer(-c.residual, p, ());
                worst_margin.offer(c.margin, p, ());
                scale = scale.max(c.grad_inf);
            }
            Err(e) if failure.is_none() => failure = Some((p.clone(), e)),
            Err(_) => {}
        }
    }
    let residual = worst_res.best.as_ref().map_or(0.0, |b| -b.0);
    let margin = worst_margin.best.as_ref().map_or(f64::NAN, |b| b.0);
    let verdict = if let Some((p, e)) = failure {
        Verdict::fail(Witness::new(&p, &[])).with_note(format!("evaluation failed: {e}"))
    } else if points.is_empty() {
        Verdict::inconclusive("region contains no lattice points")
    } else if residual >= tol.certificate * scale {
        let (_, p, ()) = worst_res.best.expect("samples present");
        Verdict::fail(Witness::new(&p, &[("residual", residual)]))
            .with_note("M X differs from the gradient")
    } else if !(margin > 0.0) {
        let (_, p, ()) = worst_margin.best.expect("samples present");
        Verdict::fail(Witness::new(&p, &[("positivity_margin", margin)]))
            .with_note("g is not positive")
    } else {
        Verdict::pass(margin)
    };
    Certificate {
        g: g.clone(),
        region,
        residual,
        residual_scale: scale,
        positivity_margin: margin,
        samples: points.len(),
        verdict,
    }
}

/// Condition (4) for `g` itself: symmetric and positive on the lattice.
pub fn is_riemannian(g: &TensorField, chart: &Chart, tol: &Tolerances) -> Verdict {
    let points = chart.grid_points();
    let vals: Vec<Result<(f64, f64), EvalError>> = points
        .par_iter()
        .map(|p| {
            let m = g.matrix(p)?;
            let asym = (&m - m.transpose()).iter().fold(0.0f64, |a, v| a.max(v.abs()));
            Ok((asym, positivity_margin(&m)))
        })
        .collect();
    let mut asym = MinTracker::new();
    let mut margin = MinTracker::new();
    for (p, v) in points.iter().zip(vals) {
        match v {
            Ok((a, m)) => {
                asym.offer(-a, p, ());
                margin.offer(m, p, ());
            }
            Err(e) => {
                return Verdict::fail(Witness::new(p, &[])).with_note(format!("evaluation failed: {e}"))
            }
        }
    }
    let (Some((neg_a, pa, ())), Some((m, pm, ()))) = (asym.best, margin.best) else {
        return Verdict::inconclusive("no lattice points");
    };
    if -neg_a >= tol.symmetry {
        Verdict::fail(Witness::new(&pa, &[("asymmetry", -neg_a)])).with_note("g is not symmetric")
    } else if !(m > 0.0) {
        Verdict::fail(Witness::new(&pm, &[("positivity_margin", m)])).with_note("g is not positive")
    } else {
        Verdict::pass(m)
    }
}

/// The pointwise constants behind `δ = a / (1 + B²)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeltaBound {
    /// `λ_min(½(M + Mᵀ))`.
    pub a: f64,
    /// Largest singular value of `M`.
    pub b: f64,
    pub delta: f64,
    /// Lyapunov ratio at the point, when defined.
    pub ratio: Option<f64>,
}

/// `δ(p) = a/(1 + B²)` from `a|X|² ≤ dφ(X)` and `|dφ| ≤ B|X|`; the resulting
/// bound `dφ(X) ≥ δ(|X|² + |dφ|²)` is checked at `p`.
pub fn delta_from_certificate(
    phi: &ScalarField,
    x: &VectorField,
    g: &TensorField,
    p: &[f64],
) -> Result<DeltaBound, GradError> {
    let m = g.matrix(p)?;
    let a = positivity_margin(&m);
    if !(a > 0.0) {
        return Err(GradError::NotPositive { at: p.to_vec(), a });
    }
    let b = operator_norm(&m);
    let delta = a / (1.0 + b * b);
    let ratio = match super::lyapunov_ratio(phi, x, p) {
        Ok(r) => Some(r),
        Err(GradError::ZeroDenominator { .. }) => None,
        Err(e) => return Err(e),
    };
    if let Some(r) = ratio {
        if r < delta - 1e-12 {
            return Err(GradError::BoundViolated {
                at: p.to_vec(),
                ratio: r,
                delta,
            });
        }
    }
    Ok(DeltaBound { a, b, delta, ratio })
}

/// The vector field with `dφ = g(X, ·)`, i.e. `M X = ∇φ`. Closed form when
/// `M` is constant and small, pointwise solves otherwise.
pub fn solve_vector_field(phi: &ScalarField, g: &TensorField) -> Result<VectorField, GradError> {
    let m = phi.dim();
    if g.dim() != m {
        return Err(GradError::DimensionMismatch(format!(
            "φ on ℝ^{m}, g on ℝ^{}",
            g.dim()
        )));
    }
    let grad = gradient_components(phi);
    let comps = match g.components().constant_values() {
        Some(vals) if m <= SYMBOLIC_INVERSE_MAX_DIM => {
            if matrix_from_row_major(m, &vals).try_inverse().is_none() {
                return Err(GradError::SingularTensor);
            }
            let constant = Components::Symbolic(vals.into_iter().map(Expr::Const).collect());
            linalg::solve(&constant, &grad, m).simplified()
        }
        Some(vals) => {
            if matrix_from_row_major(m, &vals).try_inverse().is_none() {
                return Err(GradError::SingularTensor);
            }
            linalg::numeric_solve(g.components(), &grad, m)
        }
        None => linalg::numeric_solve(g.components(), &grad, m),
    };
    Ok(VectorField::new(m, comps).expect("dimension checked"))
}

/// `M₀ = ∇φ∇φᵀ/dφ(X) + PᵀP` with `P = I − X∇φᵀ/dφ(X)`: symmetric, positive,
/// and `M₀X = ∇φ`.
fn regular_matrix(grad: &[f64], x: &[f64]) -> Option<DMatrix<f64>> {
    let m = grad.len();
    let s: f64 = grad.iter().zip(x).map(|(a, b)| a * b).sum();
    if !(s > 0.0) {
        return None;
    }
    let gv = nalgebra::DVector::from_column_slice(grad);
    let xv = nalgebra::DVector::from_column_slice(x);
    let p = DMatrix::identity(m, m) - &xv * gv.transpose() / s;
    Some(&gv * gv.transpose() / s + p.transpose() * p)
}

/// The regular-point tensor at `p`.
pub fn construct_certificate_regular(
    phi: &ScalarField,
    x: &VectorField,
    p: &[f64],
) -> Result<DMatrix<f64>, GradError> {
    let grad = phi.gradient(p)?;
    let xv = x.eval(p)?;
    regular_matrix(&grad, &xv).ok_or_else(|| GradError::NotTransverse {
        at: p.to_vec(),
        value: grad.iter().zip(&xv).map(|(a, b)| a * b).sum(),
    })
}

/// [`construct_certificate_regular`] as a tensor field; undefined (a domain
/// error) where `dφ(X) ≤ 0`.
pub fn regular_tensor(phi: &ScalarField, x: &VectorField) -> TensorField {
    let m = phi.dim();
    let grad = gradient_components(phi);
    let x = x.components().clone();
    TensorField::new(
        m,
        Components::numeric(m * m, move |p| {
            let mat = regular_matrix(&grad.eval(p)?, &x.eval(p)?)
                .ok_or_else(|| EvalError::new(EvalErrorKind::DomainError, p))?;
            Ok(row_major(&mat))
        }),
    )
    .expect("square tensor")
}

fn row_major(mat: &DMatrix<f64>) -> Vec<f64> {
    let m = mat.nrows();
    (0..m * m).map(|k| mat[(k / m, k % m)]).collect()
}

/// Tries `build` on balls of radius `radius`, `radius/2`, ... (six halvings)
/// until the certificate passes.
fn shrink_until_valid(
    center: &[f64],
    radius: f64,
    mut build: impl FnMut(f64) -> Certificate,
) -> Result<Certificate, GradError> {
    let mut r = radius;
    let mut last = None;
    for _ in 0..=6 {
        let cert = build(r);
        if cert.passes() {
            return Ok(cert);
        }
        last = Some(cert.positivity_margin());
        r *= 0.5;
    }
    Err(GradError::NoPositiveRadius {
        at: center.to_vec(),
        radius: 2.0 * r,
        margin: last.unwrap_or(f64::NAN),
    })
}

/// Local certificate at a Morse zero `p` from the Hadamard factorizations
/// `X(z) = A(z)(z − p)` and `∇φ(z) = H(z)(z − p)`, with `M = H A⁻¹`.
pub fn construct_certificate_morse(
    phi: &ScalarField,
    x: &VectorField,
    p: &[f64],
    radius: f64,
    chart: &Chart,
    tol: &Tolerances,
) -> Result<Certificate, GradError> {
    check_dims(phi, x, chart)?;
    let cp = classify(phi, p, tol)?;
    if !matches!(cp.kind, CriticalKind::Morse { .. }) {
        return Err(GradError::NotMorse {
            at: p.to_vec(),
            kind: cp.kind,
        });
    }
    let xp = x.eval(p)?;
    let norm = norm_sq(&xp).sqrt();
    if norm >= tol.zero_match {
        return Err(GradError::NotAZeroOfX { at: p.to_vec(), norm });
    }

    let m = phi.dim();
    let hess = Components::Symbolic(phi.hessian_exprs());
    let jac = x.components().partials(m);
    let h0 = matrix_from_row_major(m, &hess.eval(p)?);
    let a0 = matrix_from_row_major(m, &jac.eval(p)?);
    let lin = positivity_margin(&(&h0 * &a0));
    if !(lin > 0.0) {
        return Err(GradError::LinearizationNotLyapunov {
            at: p.to_vec(),
            margin: lin,
        });
    }

    let center = p.to_vec();
    let nodes = gauss_legendre_unit();
    let g = TensorField::new(
        m,
        Components::numeric(m * m, move |z| {
            let mut a = DMatrix::zeros(m, m);
            let mut h = DMatrix::zeros(m, m);
            for &(t, w) in &nodes {
                let q: Vec<f64> = center.iter().zip(z).map(|(c, v)| c + t * (v - c)).collect();
                a += matrix_from_row_major(m, &jac.eval(&q)?) * w;
                h += matrix_from_row_major(m, &hess.eval(&q)?) * w;
            }
            let a_inv = a
                .try_inverse()
                .ok_or_else(|| EvalError::new(EvalErrorKind::DivByZero, z))?;
            Ok(row_major(&(h * a_inv)))
        }),
    )
    .expect("square tensor");
    shrink_until_valid(p, radius, |r| {
        let region = Region::Ball {
            chart: chart.clone(),
            center: p.to_vec(),
            radius: r,
        };
        check_certificate(phi, x, &g, region, tol)
    })
}

/// Birth-death normal form in coordinates `(w, z)`, `w ∈ ℝᵏ`, `z ∈ ℝ`:
/// `φ = ½⟨Bw, w⟩ + ⅓cz³` and `X = (A w, a₁ z² + a₂·w)`, with `A`, `a₁`, `a₂`
/// functions of all coordinates.
#[derive(Clone, Debug)]
pub struct EmbryonicNormalForm {
    pub b: DMatrix<f64>,
    pub c: f64,
    /// Row-major `k × k`.
    pub a: Vec<Expr>,
    pub a1: Expr,
    pub a2: Vec<Expr>,
}

impl EmbryonicNormalForm {
    pub fn dim(&self) -> usize {
        self.b.nrows() + 1
    }

    fn k(&self) -> usize {
        self.b.nrows()
    }

    pub fn phi(&self) -> ScalarField {
        let k = self.k();
        let mut terms = Vec::new();
        for i in 0..k {
            for j in 0..k {
                terms.push(Expr::mul(
                    Expr::Const(0.5 * self.b[(i, j)]),
                    Expr::mul(Expr::var(i), Expr::var(j)),
                ));
            }
        }
        terms.push(Expr::mul(Expr::Const(self.c / 3.0), Expr::pow(Expr::var(k), 3)));
        ScalarField::new(self.dim(), Expr::sum(terms)).expect("normal form arity")
    }

    pub fn x(&self) -> VectorField {
        let k = self.k();
        let mut comps: Vec<Expr> = (0..k)
            .map(|i| Expr::sum((0..k).map(|j| Expr::mul(self.a[i * k + j].clone(), Expr::var(j)))))
            .collect();
        comps.push(Expr::add(
            Expr::mul(self.a1.clone(), Expr::pow(Expr::var(k), 2)),
            Expr::sum((0..k).map(|j| Expr::mul(self.a2[j].clone(), Expr::var(j)))),
        ));
        VectorField::from_exprs(self.dim(), comps).expect("normal form arity")
    }

    fn validate(&self) -> Result<(), GradError> {
        let k = self.k();
        let bad = |m: String| Err(GradError::NormalFormViolation(m));
        if self.b.ncols() != k || self.a.len() != k * k || self.a2.len() != k {
            return bad(format!("shapes: B {}×{}, A has {} entries, a2 has {}", k, self.b.ncols(), self.a.len(), self.a2.len()));
        }
        if !(self.c > 0.0) {
            return bad(format!("c must be positive, got {}", self.c));
        }
        if (&self.b - self.b.transpose()).iter().any(|v| v.abs() > 1e-12) {
            return bad("B must be symmetric".into());
        }
        if k > 0 && self.b.clone().try_inverse().is_none() {
            return bad("B must be invertible".into());
        }
        let origin = vec![0.0; self.dim()];
        let a1 = self.a1.eval(&origin)?;
        if (a1 - 1.0).abs() > 1e-10 {
            return bad(format!("a1(0) must be 1, got {a1}"));
        }
        for (j, e) in self.a2.iter().enumerate() {
            let v = e.eval(&origin)?;
            if v.abs() > 1e-10 {
                return bad(format!("a2(0) must vanish, entry {j} is {v}"));
            }
        }
        if k > 0 {
            let vals: Vec<f64> = self.a.iter().map(|e| e.eval(&origin)).collect::<Result<_, _>>()?;
            if matrix_from_row_major(k, &vals).try_inverse().is_none() {
                return bad("A(0) must be invertible".into());
            }
        }
        Ok(())
    }

    /// Lower block-triangular `M` with `M X = ∇φ`:
    /// `g₁₁ = BA⁻¹`, `g₂₂ = c/a₁`, `g₂₁ = −g₂₂ a₂ A⁻¹`.
    fn tensor(&self) -> TensorField {
        let k = self.k();
        let m = k + 1;
        let a_inv = linalg::inverse(&Components::Symbolic(self.a.clone()), k);
        let comps = match a_inv.exprs() {
            Some(inv) => {
                let g22 = Expr::div(Expr::Const(self.c), self.a1.clone());
                let mut e = vec![Expr::Const(0.0); m * m];
                for i in 0..k {
                    for j in 0..k {
                        e[i * m + j] = Expr::sum(
                            (0..k).map(|l| Expr::mul(Expr::Const(self.b[(i, l)]), inv[l * k + j].clone())),
                        );
                    }
                }
                for j in 0..k {
                    let row = Expr::sum((0..k).map(|l| Expr::mul(self.a2[l].clone(), inv[l * k + j].clone())));
                    e[k * m + j] = Expr::neg(Expr::mul(g22.clone(), row));
                }
                e[k * m + k] = g22;
                Components::Symbolic(e.iter().map(Expr::simplify).collect())
            }
            None => {
                let (b, c, a1) = (self.b.clone(), self.c, self.a1.clone());
                let a2 = Components::Symbolic(self.a2.clone());
                Components::numeric(m * m, move |p| {
                    let inv = matrix_from_row_major(k, &a_inv.eval(p)?);
                    let g22 = c / a1.eval(p)?;
                    let a2v = nalgebra::RowDVector::from_row_slice(&a2.eval(p)?);
                    let g11 = &b * &inv;
                    let g21 = &a2v * &inv * (-g22);
                    let mut out = vec![0.0; m * m];
                    for i in 0..k {
                        for j in 0..k {
                            out[i * m + j] = g11[(i, j)];
                        }
                    }
                    for j in 0..k {
                        out[k * m + j] = g21[j];
                    }
                    out[k * m + k] = g22;
                    Ok(out)
                })
            }
        };
        TensorField::new(m, comps).expect("square tensor")
    }
}

/// Local certificate at an embryonic point given in normal form, on the
/// largest ball around the origin (radius, halved up to six times) where it
/// is positive.
pub fn construct_certificate_embryonic(
    nf: &EmbryonicNormalForm,
    radius: f64,
    chart: &Chart,
    tol: &Tolerances,
) -> Result<Certificate, GradError> {
    nf.validate()?;
    if chart.dim() != nf.dim() {
        return Err(GradError::DimensionMismatch(format!(
            "normal form on ℝ^{}, chart ℝ^{}",
            nf.dim(),
            chart.dim()
        )));
    }
    let (phi, x, g) = (nf.phi(), nf.x(), nf.tensor());
    let origin = vec![0.0; nf.dim()];
    shrink_until_valid(&origin, radius, |r| {
        let region = Region::Ball {
            chart: chart.clone(),
            center: origin.clone(),
            radius: r,
        };
        check_certificate(&phi, &x, &g, region, tol)
    })
}

/// Cutoff function of a partition of unity.
#[derive(Clone, Debug)]
pub enum Cutoff {
    Field(ScalarField),
    /// 1 on the ball of radius `inner`, 0 outside radius `outer`, and the
    /// quintic smoothstep `6t⁵ − 15t⁴ + 10t³` in between.
    Radial {
        center: Vec<f64>,
        inner: f64,
        outer: f64,
    },
    /// One minus the sum of the given cutoffs.
    Complement(Vec<Cutoff>),
}

impl Cutoff {
    pub fn eval(&self, p: &[f64]) -> Result<f64, EvalError> {
        Ok(match self {
            Cutoff::Field(f) => f.eval(p)?,
            Cutoff::Radial {
                center,
                inner,
                outer,
            } => {
                let t = ((outer - distance(p, center)) / (outer - inner)).clamp(0.0, 1.0);
                t * t * t * (t * (6.0 * t - 15.0) + 10.0)
            }
            Cutoff::Complement(parts) => {
                let mut s = 1.0;
                for c in parts {
                    s -= c.eval(p)?;
                }
                s
            }
        })
    }
}

/// `M = Σ χᵢ Mᵢ`. The cutoffs must form a partition of unity on the chart
/// lattice and each piece must be a valid certificate wherever its cutoff is
/// positive.
pub fn blend_certificates(
    pieces: &[(Certificate, Cutoff)],
    phi: &ScalarField,
    x: &VectorField,
    chart: &Chart,
    tol: &Tolerances,
) -> Result<Certificate, GradError> {
    check_dims(phi, x, chart)?;
    let grad = gradient_components(phi);
    let points = chart.grid_points();
    let outcomes: Vec<Result<(), GradError>> = points
        .par_iter()
        .map(|p| {
            let mut sum = 0.0;
            for (i, (cert, chi)) in pieces.iter().enumerate() {
                let c = chi.eval(p)?;
                if c < -tol.partition {
                    return Err(GradError::PartitionInvalid {
                        at: p.clone(),
                        reason: format!("cutoff {i} is {c}"),
                    });
                }
                sum += c;
                if c > 0.0 {
                    let invalid = |reason: String| GradError::PieceInvalidOnSupport {
                        index: i,
                        at: p.clone(),
                        reason,
                    };
                    let pc = check_point(&grad, x, cert.g(), p).map_err(|e| invalid(e.to_string()))?;
                    if pc.residual >= tol.certificate * cert.residual_scale() {
                        return Err(invalid(format!("residual {:e}", pc.residual)));
                    }
                    if !(pc.margin > 0.0) {
                        return Err(invalid(format!("positivity margin {}", pc.margin)));
                    }
                }
            }
            if (sum - 1.0).abs() > tol.partition {
                return Err(GradError::PartitionInvalid {
                    at: p.clone(),
                    reason: format!("cutoffs sum to {sum}"),
                });
            }
            Ok(())
        })
        .collect();
    // first failure in lattice order
    if let Some(e) = outcomes.into_iter().find_map(Result::err) {
        return Err(e);
    }

    let m = phi.dim();
    let parts: Vec<(TensorField, Cutoff)> =
        pieces.iter().map(|(c, chi)| (c.g().clone(), chi.clone())).collect();
    let g = TensorField::new(
        m,
        Components::numeric(m * m, move |p| {
            let mut out = vec![0.0; m * m];
            for (g, chi) in &parts {
                let c = chi.eval(p)?;
                if c > 0.0 {
                    for (o, v) in out.iter_mut().zip(g.eval(p)?) {
                        *o += c * v;
                    }
                }
            }
            Ok(out)
        }),
    )
    .expect("square tensor");
    Ok(check_certificate(
        phi,
        x,
        &g,
        Region::Chart {
            chart: chart.clone(),
        },
        tol,
    ))
}

/// Outcome at one critical point in [`certify`].
#[derive(Clone, Debug, Serialize)]
pub struct LocalPiece {
    pub location: Vec<f64>,
    pub status: Status,
    pub radius: Option<f64>,
    pub positivity_margin: Option<f64>,
    pub note: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertifyReport {
    pub status: Status,
    pub condition1: Verdict,
    pub critical_points: Vec<CriticalPoint>,
    pub local: Vec<LocalPiece>,
    pub certificate: Option<Certificate>,
    pub notes: Vec<String>,
}

/// Global certificate assembled from Morse pieces at the critical points and
/// the regular tensor elsewhere. Critical points that are not Morse, and
/// non-isolated critical sets, make the result inconclusive.
pub fn certify(
    phi: &ScalarField,
    x: &VectorField,
    chart: &Chart,
    tol: &Tolerances,
) -> Result<CertifyReport, GradError> {
    check_dims(phi, x, chart)?;
    let c1 = check_condition1(phi, x, chart, tol);
    if c1.verdict.status == Status::Fail {
        return Err(GradError::Condition1Fails(Box::new(c1.verdict)));
    }
    let crit = &c1.zero_sets.critical;
    let mut report = CertifyReport {
        status: Status::Pass,
        condition1: c1.verdict.clone(),
        critical_points: Vec::new(),
        local: Vec::new(),
        certificate: None,
        notes: Vec::new(),
    };
    for cluster in &crit.non_isolated {
        report.status = Status::Inconclusive;
        report.local.push(LocalPiece {
            location: cluster.representative.clone(),
            status: Status::Inconclusive,
            radius: None,
            positivity_margin: None,
            note: Some(format!(
                "non-isolated critical set of diameter {:.3e}; supply a certificate",
                cluster.diameter
            )),
        });
    }

    let mut pieces = Vec::new();
    for (i, p) in crit.isolated.iter().enumerate() {
        let cp = classify(phi, p, tol)?;
        let kind = cp.kind.clone();
        report.critical_points.push(cp);
        if !matches!(kind, CriticalKind::Morse { .. }) {
            report.status = report.status.worst(Status::Inconclusive);
            report.local.push(LocalPiece {
                location: p.clone(),
                status: Status::Inconclusive,
                radius: None,
                positivity_margin: None,
                note: Some(format!(
                    "{} critical point; no automatic local certificate",
                    match kind {
                        CriticalKind::Embryonic { .. } => "embryonic",
                        _ => "degenerate",
                    }
                )),
            });
            continue;
        }
        let nearest = crit
            .isolated
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, q)| distance(p, q))
            .fold(f64::INFINITY, f64::min);
        let radius = 0.5f64.min(0.45 * nearest);
        match construct_certificate_morse(phi, x, p, radius, chart, tol) {
            Ok(cert) => {
                let r = match cert.region() {
                    Region::Ball { radius, .. } => *radius,
                    Region::Chart { .. } => radius,
                };
                report.local.push(LocalPiece {
                    location: p.clone(),
                    status: Status::Pass,
                    radius: Some(r),
                    positivity_margin: Some(cert.positivity_margin()),
                    note: None,
                });
                pieces.push((
                    cert,
                    Cutoff::Radial {
                        center: p.clone(),
                        inner: 0.5 * r,
                        outer: r,
                    },
                ));
            }
            Err(e) => {
                let status = match e {
                    GradError::LinearizationNotLyapunov { .. } => Status::Fail,
                    _ => Status::Inconclusive,
                };
                report.status = report.status.worst(status);
                report.local.push(LocalPiece {
                    location: p.clone(),
                    status,
                    radius: None,
                    positivity_margin: None,
                    note: Some(e.to_string()),
                });
            }
        }
    }
    if report.status != Status::Pass {
        report
            .notes
            .push("no global certificate: some critical points lack a local certificate".into());
        return Ok(report);
    }

    let regular_cutoff = Cutoff::Complement(pieces.iter().map(|(_, c)| c.clone()).collect());
    let regular = check_certificate(
        phi,
        x,
        &regular_tensor(phi, x),
        Region::Chart {
            chart: chart.clone(),
        },
        tol,
    );
    pieces.push((regular, regular_cutoff));
    match blend_certificates(&pieces, phi, x, chart, tol) {
        Ok(cert) => {
            report.status = cert.verdict().status;
            report.certificate = Some(cert);
        }
        Err(e) => {
            report.status = Status::Fail;
            report.notes.push(e.to_string());
        }
    }
    Ok(report)
}
