use serde::Serialize;

use super::FieldError;
use crate::numeric::distance;

pub const DEFAULT_RESOLUTION: usize = 33;
pub const DEFAULT_EXCLUSION_RADIUS: f64 = 1e-3;
/// Upper bound on lattice size; finer requests are coarsened.
pub const MAX_GRID_SAMPLES: usize = 200_000;

/// Coordinate box `Π [lo_i, hi_i]` sampled by a uniform lattice.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Chart {
    dim: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
    n: usize,
    r_excl: f64,
}

impl Chart {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, FieldError> {
        if lo.is_empty() {
            return Err(FieldError::InvalidChart("dimension must be at least 1".into()));
        }
        if lo.len() != hi.len() {
            return Err(FieldError::InvalidChart(format!(
                "lo has {} entries, hi has {}",
                lo.len(),
                hi.len()
            )));
        }
        for (i, (a, b)) in lo.iter().zip(&hi).enumerate() {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(FieldError::InvalidChart(format!(
                    "need lo < hi on axis {i}, got [{a}, {b}]"
                )));
            }
        }
        Ok(Chart {
            dim: lo.len(),
            lo,
            hi,
            n: DEFAULT_RESOLUTION,
            r_excl: DEFAULT_EXCLUSION_RADIUS,
        })
    }

    /// Box `[-half, half]^dim`.
    pub fn centered(dim: usize, half: f64) -> Result<Self, FieldError> {
        Chart::new(vec![-half; dim], vec![half; dim])
    }

    pub fn with_resolution(mut self, n: usize) -> Result<Self, FieldError> {
        if n < 3 {
            return Err(FieldError::InvalidChart(format!(
                "grid resolution must be at least 3, got {n}"
            )));
        }
        self.n = n;
        Ok(self)
    }

    pub fn with_exclusion_radius(mut self, r: f64) -> Result<Self, FieldError> {
        if !(r.is_finite() && r >= 0.0) {
            return Err(FieldError::InvalidChart(format!("bad exclusion radius {r}")));
        }
        self.r_excl = r;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn exclusion_radius(&self) -> f64 {
        self.r_excl
    }

    /// Points per axis actually used, after applying [`MAX_GRID_SAMPLES`].
    pub fn effective_resolution(&self) -> usize {
        let mut n = self.n;
        while n > 3 && (n as f64).powi(self.dim as i32) > MAX_GRID_SAMPLES as f64 {
            n -= 1;
        }
        n
    }

    pub fn spacing(&self) -> Vec<f64> {
        let n = self.effective_resolution();
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| (b - a) / (n - 1) as f64)
            .collect()
    }

    pub fn contains(&self, p: &[f64], slack: f64) -> bool {
        p.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(x, (a, b))| *x >= a - slack && *x <= b + slack)
    }

    fn axis_values(&self, n: usize) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| lattice(self.lo[i], self.hi[i], n))
            .collect()
    }

    /// Uniform `n^m` lattice including the boundary, lexicographic order.
    pub fn grid_points(&self) -> Vec<Vec<f64>> {
        let n = self.effective_resolution();
        if n != self.n {
            log::warn!(
                "grid resolution {} in dimension {} exceeds {} samples; using {}",
                self.n,
                self.dim,
                MAX_GRID_SAMPLES,
                n
            );
        }
        product(&self.axis_values(n))
    }

    /// Lattice points outside the closed balls of radius `r_excl` around
    /// `centers`.
    pub fn grid_points_excluding(&self, centers: &[Vec<f64>]) -> Vec<Vec<f64>> {
        self.grid_points()
            .into_iter()
            .filter(|p| centers.iter().all(|c| distance(p, c) > self.r_excl))
            .collect()
    }

    /// Local lattice with `n` points per axis over the ball around `center`,
    /// clipped to the chart.
    pub fn ball_points(&self, center: &[f64], radius: f64) -> Vec<Vec<f64>> {
        let n = self.effective_resolution();
        let axes: Vec<Vec<f64>> = center
            .iter()
            .map(|&c| lattice(c - radius, c + radius, n))
            .collect();
        product(&axes)
            .into_iter()
            .filter(|p| distance(p, center) <= radius * (1.0 + 1e-12) && self.contains(p, 1e-12))
            .collect()
    }
}

fn lattice(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            if k == n - 1 {
                b
            } else {
                a + (b - a) * k as f64 / (n - 1) as f64
            }
        })
        .collect()
}

fn product(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = vec![Vec::new()];
    for axis in axes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_sizes() {
        let c = Chart::new(vec![0.0, 0.0], vec![1.0, 1.0])
            .unwrap()
            .with_resolution(3)
            .unwrap();
        let pts = c.grid_points();
        assert_eq!(pts.len(), 9);
        assert_eq!(pts[0], vec![0.0, 0.0]);
        assert_eq!(pts[8], vec![1.0, 1.0]);
    }

    #[test]
    fn exclusion_balls() {
        let c = Chart::centered(1, 1.0)
            .unwrap()
            .with_resolution(5)
            .unwrap()
            .with_exclusion_radius(0.6)
            .unwrap();
        let pts = c.grid_points_excluding(&[vec![0.0]]);
        assert_eq!(pts, vec![vec![-1.0], vec![1.0]]);
    }

    #[test]
    fn invalid_charts() {
        let c = Chart::centered(2, 1.0).unwrap();
        assert!(c.clone().with_resolution(2).is_err());
        assert!(Chart::new(vec![1.0], vec![0.0]).is_err());
        assert!(Chart::new(vec![], vec![]).is_err());
    }

    #[test]
    fn sample_cap() {
        let c = Chart::centered(4, 1.0).unwrap();
        let n = c.effective_resolution();
        assert!(n.pow(4) <= MAX_GRID_SAMPLES && (n + 1).pow(4) > MAX_GRID_SAMPLES);
        assert_eq!(c.grid_points().len(), n.pow(4));
    }
}
