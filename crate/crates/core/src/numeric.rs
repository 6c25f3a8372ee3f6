//! Small dense linear algebra and quadrature helpers.

use nalgebra::{DMatrix, DVector};

/// Row-major `m x m` slice to a matrix.
pub fn matrix_from_row_major(m: usize, data: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(m, m, data)
}

pub fn symmetric_part(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn sorted_eigenvalues(sym: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = sym.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Ascending eigenpairs of a symmetric matrix.
pub fn sorted_eigenpairs(sym: &DMatrix<f64>) -> Vec<(f64, DVector<f64>)> {
    let eig = sym.clone().symmetric_eigen();
    let mut pairs: Vec<(f64, DVector<f64>)> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, eig.eigenvectors.column(i).into_owned()))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs
}

/// `λ_min(½(M + Mᵀ))`: the largest `a` with `⟨Mv, v⟩ ≥ a|v|²`.
pub fn positivity_margin(a: &DMatrix<f64>) -> f64 {
    sorted_eigenvalues(&symmetric_part(a))[0]
}

/// Unit vector realising the positivity margin.
pub fn weakest_direction(a: &DMatrix<f64>) -> Vec<f64> {
    let pairs = sorted_eigenpairs(&symmetric_part(a));
    canonical_sign(pairs[0].1.iter().copied().collect())
}

/// Flips `v` so that its largest-magnitude entry is positive.
pub fn canonical_sign(mut v: Vec<f64>) -> Vec<f64> {
    let idx = v
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i);
    if let Some(i) = idx {
        if v[i] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
    v
}

/// Largest singular value.
pub fn operator_norm(a: &DMatrix<f64>) -> f64 {
    a.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

pub fn max_abs(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn inf_norm(v: &[f64]) -> f64 {
    max_abs(v.iter().copied())
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Solves `A x = b` by LU; `None` when `A` is singular.
pub fn solve(a: &DMatrix<f64>, b: &[f64]) -> Option<Vec<f64>> {
    let lu = a.clone().lu();
    let x = lu.solve(&DVector::from_column_slice(b))?;
    x.iter().all(|v| v.is_finite()).then(|| x.iter().copied().collect())
}

/// Minimum-norm least-squares solution via SVD. `None` if `A` vanishes.
pub fn pseudo_solve(a: &DMatrix<f64>, b: &[f64]) -> Option<Vec<f64>> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 || !smax.is_finite() {
        return None;
    }
    let x = svd
        .solve(&DVector::from_column_slice(b), smax * 1e-13)
        .ok()?;
    Some(x.iter().copied().collect())
}

/// Gauss-Legendre nodes and weights of order 8 mapped to `[0, 1]`.
pub fn gauss_legendre_unit() -> [(f64, f64); 8] {
    const NODES: [f64; 4] = [
        0.183_434_642_495_649_8,
        0.525_532_409_916_329_0,
        0.796_666_477_413_626_7,
        0.960_289_856_497_536_2,
    ];
    const WEIGHTS: [f64; 4] = [
        0.362_683_783_378_362_0,
        0.313_706_645_877_887_3,
        0.222_381_034_453_374_5,
        0.101_228_536_290_376_3,
    ];
    let mut out = [(0.0, 0.0); 8];
    for k in 0..4 {
        out[2 * k] = (0.5 * (1.0 - NODES[k]), 0.5 * WEIGHTS[k]);
        out[2 * k + 1] = (0.5 * (1.0 + NODES[k]), 0.5 * WEIGHTS[k]);
    }
    out
}

/// Sixth-order central difference coefficients for offsets ±1, ±2, ±3.
pub const FD6: [(f64, f64); 6] = [
    (-3.0, -1.0 / 60.0),
    (-2.0, 9.0 / 60.0),
    (-1.0, -45.0 / 60.0),
    (1.0, 45.0 / 60.0),
    (2.0, -9.0 / 60.0),
    (3.0, 1.0 / 60.0),
];

pub const FD_STEP: f64 = 1e-4;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_degree_15_exactly() {
        let gl = gauss_legendre_unit();
        let w: f64 = gl.iter().map(|(_, w)| w).sum();
        assert!((w - 1.0).abs() < 1e-14);
        let i15: f64 = gl.iter().map(|(t, w)| w * t.powi(15)).sum();
        assert!((i15 - 1.0 / 16.0).abs() < 1e-14);
    }

    #[test]
    fn margin_and_norm_of_shear() {
        let m = matrix_from_row_major(2, &[1.0, 1.0, 0.0, 1.0]);
        assert!((positivity_margin(&m) - 0.5).abs() < 1e-14);
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((operator_norm(&m) - golden).abs() < 1e-14);
    }

    #[test]
    fn pseudo_solve_handles_rank_deficiency() {
        let a = matrix_from_row_major(2, &[0.0, 0.0, 0.0, 1.0]);
        let x = pseudo_solve(&a, &[0.0, 2.0]).unwrap();
        assert!((x[0]).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
        assert!(pseudo_solve(&DMatrix::zeros(2, 2), &[1.0, 1.0]).is_none());
    }
}
