//! Zeros of vector fields and classification of critical points.
//!
//! Zeros are located by Newton iteration with the exact Jacobian from every
//! lattice point of the chart. End points closer than the dedup tolerance are
//! merged; neighbouring zeros joined by a segment on which the field stays
//! below the Newton tolerance are linked into one cluster, and clusters wider
//! than ten dedup tolerances are reported as non-isolated zero sets.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::expr::{Expr, Scalar, Wide};
use crate::fields::{Chart, Components, ScalarField, VectorField};
use crate::gradlike::Status;
use crate::numeric::{
    canonical_sign, distance, matrix_from_row_major, norm_sq, pseudo_solve, sorted_eigenpairs,
};
use crate::tol::Tolerances;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "type")]
pub enum CriticalKind {
    Morse { index: usize },
    Embryonic { kernel_dir: Vec<f64>, third_deriv: f64 },
    Degenerate,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub location: Vec<f64>,
    pub kind: CriticalKind,
    /// Ascending.
    pub hessian_eigenvalues: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CriticalError {
    #[error("not a critical point: |∇φ| = {grad_norm:e} at {at:?}")]
    NotCritical { at: Vec<f64>, grad_norm: f64 },
    #[error(transparent)]
    Eval(#[from] crate::expr::EvalError),
}

/// A connected set of zeros too wide to be a single point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZeroCluster {
    /// Member closest to the middle of the cluster's bounding box.
    pub representative: Vec<f64>,
    pub diameter: f64,
    pub members: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ZeroSet {
    /// Lexicographically sorted.
    pub isolated: Vec<Vec<f64>>,
    pub non_isolated: Vec<ZeroCluster>,
}

impl ZeroSet {
    pub fn is_empty(&self) -> bool {
        self.isolated.is_empty() && self.non_isolated.is_empty()
    }

    /// Isolated zeros and cluster representatives.
    pub fn centers(&self) -> Vec<Vec<f64>> {
        self.isolated
            .iter()
            .cloned()
            .chain(self.non_isolated.iter().map(|c| c.representative.clone()))
            .collect()
    }

    /// Isolated zeros and every cluster member.
    pub fn all_points(&self) -> Vec<Vec<f64>> {
        self.isolated
            .iter()
            .cloned()
            .chain(self.non_isolated.iter().flat_map(|c| c.members.iter().cloned()))
            .collect()
    }
}

pub(crate) fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

struct Newton<'a> {
    f: &'a Components,
    jac: &'a Components,
    dim: usize,
    tol: &'a Tolerances,
}

fn wide_norm(v: &[Wide]) -> Wide {
    v.iter()
        .fold(Wide::ZERO, |acc, x| acc + *x * *x)
        .sqrt()
}

impl Newton<'_> {
    fn residual(&self, x: &[f64]) -> Option<Wide> {
        self.f.eval_wide(x).ok().map(|v| wide_norm(&v))
    }

    /// Newton iteration from `start`. A start converges when the residual is
    /// below the Newton tolerance and the final step has stagnated below the
    /// dedup distance; slow creep across a flat region is not a zero.
    fn run(&self, start: &[f64]) -> Option<(Vec<f64>, f64)> {
        let tol = Wide::from(self.tol.newton);
        let mut x = start.to_vec();
        let mut last_step = f64::INFINITY;
        for _ in 0..self.tol.newton_max_iter {
            let fx = self.f.eval_wide(&x).ok()?;
            if wide_norm(&fx).is_zero() {
                last_step = 0.0;
                break;
            }
            // both sides share one power-of-two scale, so the step is exact
            // even where the entries leave the f64 range
            let jw = self.jac.eval_wide(&x).ok()?;
            let scale = jw.iter().fold(Wide::ZERO, |m, v| if v.abs() > m { v.abs() } else { m });
            if scale.is_zero() {
                return None;
            }
            let j: Vec<f64> = jw.iter().map(|v| (*v / scale).to_f64()).collect();
            let rhs: Vec<f64> = fx.iter().map(|v| (*v / scale).to_f64()).collect();
            let step = pseudo_solve(&matrix_from_row_major(self.dim, &j), &rhs)?;
            let xn: Vec<f64> = x.iter().zip(&step).map(|(a, s)| a - s).collect();
            if xn.iter().any(|v| !v.is_finite()) {
                return None;
            }
            last_step = distance(&xn, &x);
            x = xn;
            if last_step <= 1e-15 * (1.0 + norm_sq(&x).sqrt()) {
                break;
            }
        }
        let r = self.residual(&x)?;
        (r < tol && last_step <= self.tol.dedup).then(|| (x, r.to_f64()))
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }
    fn find(&mut self, i: usize) -> usize {
        let mut r = i;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut k = i;
        while self.0[k] != r {
            let next = self.0[k];
            self.0[k] = r;
            k = next;
        }
        r
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.0[hi] = lo;
        }
    }
    /// Groups of indices, each sorted, ordered by smallest member.
    fn groups(&mut self) -> Vec<Vec<usize>> {
        let n = self.0.len();
        let mut by_root: HashMap<usize, Vec<usize>> = HashMap::new();
        for i in 0..n {
            let r = self.find(i);
            by_root.entry(r).or_default().push(i);
        }
        let mut groups: Vec<Vec<usize>> = by_root.into_values().collect();
        groups.sort_by_key(|g| g[0]);
        groups
    }
}

/// Pairs of points within `radius`, found through a cell hash.
fn neighbour_pairs(points: &[Vec<f64>], radius: f64) -> Vec<(usize, usize)> {
    if points.is_empty() || radius <= 0.0 {
        return Vec::new();
    }
    let key = |p: &[f64]| -> Vec<i64> { p.iter().map(|v| (v / radius).floor() as i64).collect() };
    let mut cells: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for (i, p) in points.iter().enumerate() {
        cells.entry(key(p)).or_default().push(i);
    }
    let dim = points[0].len();
    let mut offsets: Vec<Vec<i64>> = vec![Vec::new()];
    for _ in 0..dim {
        offsets = offsets
            .into_iter()
            .flat_map(|o| {
                (-1..=1).map(move |d| {
                    let mut o = o.clone();
                    o.push(d);
                    o
                })
            })
            .collect();
    }
    let mut pairs = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let k = key(p);
        for off in &offsets {
            let cell: Vec<i64> = k.iter().zip(off).map(|(a, b)| a + b).collect();
            if let Some(list) = cells.get(&cell) {
                for &j in list {
                    if j > i && distance(p, &points[j]) <= radius {
                        pairs.push((i, j));
                    }
                }
            }
        }
    }
    pairs.sort_unstable();
    pairs
}

fn diameter(points: &[Vec<f64>]) -> f64 {
    let mut d = 0.0f64;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            d = d.max(distance(a, b));
        }
    }
    d
}

fn central_member(points: &[Vec<f64>]) -> Vec<f64> {
    let dim = points[0].len();
    let mid: Vec<f64> = (0..dim)
        .map(|i| {
            let lo = points.iter().map(|p| p[i]).fold(f64::INFINITY, f64::min);
            let hi = points.iter().map(|p| p[i]).fold(f64::NEG_INFINITY, f64::max);
            0.5 * (lo + hi)
        })
        .collect();
    points
        .iter()
        .min_by(|a, b| {
            distance(a, &mid)
                .total_cmp(&distance(b, &mid))
                .then_with(|| lex_cmp(a, b))
        })
        .cloned()
        .expect("nonempty cluster")
}

/// Multi-start Newton search for zeros of `field` inside the chart.
pub fn find_zeros(field: &VectorField, chart: &Chart, tol: &Tolerances) -> ZeroSet {
    let dim = field.dim();
    let f = field.components();
    let jac = f.partials(dim);
    let newton = Newton {
        f,
        jac: &jac,
        dim,
        tol,
    };
    let starts = chart.grid_points();
    let mut found: Vec<(Vec<f64>, f64)> = starts
        .par_iter()
        .filter_map(|s| newton.run(s))
        .filter(|(x, _)| chart.contains(x, 1e-12))
        .collect();
    found.sort_by(|a, b| lex_cmp(&a.0, &b.0).then(a.1.total_cmp(&b.1)));

    // merge end points of the same zero
    let pts: Vec<Vec<f64>> = found.iter().map(|(p, _)| p.clone()).collect();
    let mut uf = UnionFind::new(pts.len());
    for (i, j) in neighbour_pairs(&pts, tol.dedup) {
        uf.union(i, j);
    }
    let mut zeros: Vec<(Vec<f64>, f64)> = uf
        .groups()
        .into_iter()
        .map(|g| {
            g.iter()
                .map(|&i| found[i].clone())
                .min_by(|a, b| a.1.total_cmp(&b.1).then_with(|| lex_cmp(&a.0, &b.0)))
                .expect("nonempty group")
        })
        .collect();
    zeros.sort_by(|a, b| lex_cmp(&a.0, &b.0));

    // link neighbouring zeros joined by a segment of zeros
    let link = 2.0 * norm_sq(&chart.spacing()).sqrt();
    let reps: Vec<Vec<f64>> = zeros.iter().map(|(p, _)| p.clone()).collect();
    let mut uf = UnionFind::new(reps.len());
    for (i, j) in neighbour_pairs(&reps, link) {
        let joined = [0.25, 0.5, 0.75].iter().all(|&t| {
            let q: Vec<f64> = reps[i]
                .iter()
                .zip(&reps[j])
                .map(|(a, b)| a + t * (b - a))
                .collect();
            matches!(newton.residual(&q), Some(r) if r < Wide::from(tol.newton))
        });
        if joined {
            uf.union(i, j);
        }
    }

    let mut out = ZeroSet::default();
    for g in uf.groups() {
        let members: Vec<Vec<f64>> = g.iter().map(|&i| reps[i].clone()).collect();
        let d = diameter(&members);
        if d > 10.0 * tol.dedup {
            out.non_isolated.push(ZeroCluster {
                representative: central_member(&members),
                diameter: d,
                members,
            });
        } else {
            let best = g
                .iter()
                .min_by(|&&a, &&b| zeros[a].1.total_cmp(&zeros[b].1))
                .copied()
                .expect("nonempty group");
            out.isolated.push(zeros[best].0.clone());
        }
    }
    out.isolated.sort_by(|a, b| lex_cmp(a, b));
    out
}

/// Critical points of `φ` as zeros of its gradient field.
pub fn find_critical_points(phi: &ScalarField, chart: &Chart, tol: &Tolerances) -> ZeroSet {
    let grad = VectorField::from_exprs(phi.dim(), phi.gradient_exprs())
        .expect("gradient has the chart dimension");
    find_zeros(&grad, chart, tol)
}

/// Morse / embryonic / degenerate classification at a critical point.
pub fn classify(phi: &ScalarField, p: &[f64], tol: &Tolerances) -> Result<CriticalPoint, CriticalError> {
    let m = phi.dim();
    let grad = phi.gradient(p)?;
    let grad_norm = norm_sq(&grad).sqrt();
    if grad_norm >= tol.newton {
        return Err(CriticalError::NotCritical {
            at: p.to_vec(),
            grad_norm,
        });
    }
    let hess: Vec<f64> = phi
        .hessian_exprs()
        .iter()
        .map(|e| e.eval(p))
        .collect::<Result<_, _>>()?;
    let hess = matrix_from_row_major(m, &hess);
    let sym = (&hess + hess.transpose()) * 0.5;
    let pairs = sorted_eigenpairs(&sym);
    let eigenvalues: Vec<f64> = pairs.iter().map(|(v, _)| *v).collect();
    let scale = eigenvalues.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let zero_tol = tol.eig_zero * scale;
    let kernel: Vec<&(f64, nalgebra::DVector<f64>)> =
        pairs.iter().filter(|(v, _)| v.abs() <= zero_tol).collect();
    let kind = match kernel.len() {
        0 => CriticalKind::Morse {
            index: eigenvalues.iter().filter(|v| **v < 0.0).count(),
        },
        1 => {
            let dir = canonical_sign(kernel[0].1.iter().copied().collect());
            let third: Expr = phi
                .expr()
                .directional(&dir)
                .directional(&dir)
                .directional(&dir);
            let third_deriv = third.eval(p)?;
            if third_deriv.abs() > tol.third {
                CriticalKind::Embryonic {
                    kernel_dir: dir,
                    third_deriv,
                }
            } else {
                CriticalKind::Degenerate
            }
        }
        _ => CriticalKind::Degenerate,
    };
    Ok(CriticalPoint {
        location: p.to_vec(),
        kind,
        hessian_eigenvalues: eigenvalues,
    })
}

/// Outcome of comparing `Crit(φ)` with `Zero(X)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZeroSetComparison {
    pub status: Status,
    pub critical: ZeroSet,
    pub zeros: ZeroSet,
    /// Critical points of `φ` with no zero of `X` nearby.
    pub unmatched_critical: Vec<Vec<f64>>,
    /// Zeros of `X` with no critical point of `φ` nearby.
    pub unmatched_zeros: Vec<Vec<f64>>,
}

fn unmatched(from: &[Vec<f64>], to: &[Vec<f64>], tol: f64) -> Vec<Vec<f64>> {
    from.iter()
        .filter(|p| to.iter().all(|q| distance(p, q) > tol))
        .cloned()
        .collect()
}

/// Hausdorff pairing of `Crit(φ)` and `Zero(X)`. Non-isolated zero sets make
/// the result inconclusive.
pub fn zero_sets_match(
    phi: &ScalarField,
    x: &VectorField,
    chart: &Chart,
    tol: &Tolerances,
) -> ZeroSetComparison {
    let critical = find_critical_points(phi, chart, tol);
    let zeros = find_zeros(x, chart, tol);
    let (crit_pts, zero_pts) = (critical.all_points(), zeros.all_points());
    let unmatched_critical = unmatched(&critical.isolated, &zero_pts, tol.zero_match);
    let unmatched_zeros = unmatched(&zeros.isolated, &crit_pts, tol.zero_match);
    let status = if !unmatched_critical.is_empty() || !unmatched_zeros.is_empty() {
        Status::Fail
    } else if !critical.non_isolated.is_empty() || !zeros.non_isolated.is_empty() {
        Status::Inconclusive
    } else {
        Status::Pass
    };
    ZeroSetComparison {
        status,
        critical,
        zeros,
        unmatched_critical,
        unmatched_zeros,
    }
}
