use std::f64::consts::PI;
use std::sync::Arc;

use super::harmonics::{num_coeffs, real_sh_row};
use super::SphereError;
use crate::linalg::Vec3;

/// Equiangular `2L × 2L` sampling of the sphere with quadrature that is
/// exact for products of harmonics of degree below `L`.
///
/// Colatitudes sit at `θ_j = π(2j+1)/(4L)` (open at the poles) and carry
/// Fejér first-rule weights in `cos θ`; longitudes are `φ_k = πk/L`.
/// The harmonic basis sampled on the grid is precomputed once so that
/// transforms are plain matrix products.
#[derive(Debug)]
pub struct SphGrid {
    bandlimit: usize,
    thetas: Vec<f64>,
    phis: Vec<f64>,
    weights: Vec<f64>,
    dirs: Vec<Vec3>,
    /// `G × L²`, row `p` holds `Y_k(x_p)`.
    basis: Vec<f64>,
    /// `L² × G`, entry `(k, p)` is `Y_k(x_p) · ΔΩ_p`.
    analysis: Vec<f64>,
}

/// Fejér first-rule weights for `∫_{-1}^{1} f(x) dx` at `x_j = cos θ_j`.
fn fejer_weights(n: usize, thetas: &[f64]) -> Vec<f64> {
    thetas
        .iter()
        .map(|&t| {
            let mut s = 0.0;
            for k in 1..=(n / 2) {
                let k = k as f64;
                s += (2.0 * k * t).cos() / (4.0 * k * k - 1.0);
            }
            2.0 / n as f64 * (1.0 - 2.0 * s)
        })
        .collect()
}

impl SphGrid {
    pub fn new(bandlimit: usize) -> Result<Arc<Self>, SphereError> {
        if bandlimit < 2 {
            return Err(SphereError::InvalidBandlimit(bandlimit));
        }
        let n = 2 * bandlimit;
        let thetas: Vec<f64> = (0..n).map(|j| PI * (2 * j + 1) as f64 / (2 * n) as f64).collect();
        let phis: Vec<f64> = (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect();
        let weights = fejer_weights(n, &thetas);
        let nc = num_coeffs(bandlimit);
        let dphi = 2.0 * PI / n as f64;
        let mut dirs = Vec::with_capacity(n * n);
        let mut basis = Vec::with_capacity(n * n * nc);
        let mut analysis = vec![0.0; nc * n * n];
        for (i, &t) in thetas.iter().enumerate() {
            let (st, ct) = t.sin_cos();
            for (j, &p) in phis.iter().enumerate() {
                let (sp, cp) = p.sin_cos();
                dirs.push([st * cp, st * sp, ct]);
                let row = real_sh_row(bandlimit, ct, st, p);
                let idx = i * n + j;
                let area = weights[i] * dphi;
                for (k, y) in row.iter().enumerate() {
                    analysis[k * n * n + idx] = y * area;
                }
                basis.extend(row);
            }
        }
        Ok(Arc::new(Self { bandlimit, thetas, phis, weights, dirs, basis, analysis }))
    }

    pub fn bandlimit(&self) -> usize {
        self.bandlimit
    }

    /// Number of samples, `(2L)²`.
    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn phis(&self) -> &[f64] {
        &self.phis
    }

    /// Colatitude weights (integrate over `cos θ ∈ [-1, 1]`).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Unit direction of each sample, theta-major.
    pub fn dirs(&self) -> &[Vec3] {
        &self.dirs
    }

    /// Solid-angle weight of sample `p`.
    pub fn area(&self, p: usize) -> f64 {
        let n = 2 * self.bandlimit;
        self.weights[p / n] * 2.0 * PI / n as f64
    }

    /// Row-major `G × L²` synthesis matrix.
    pub fn basis(&self) -> &[f64] {
        &self.basis
    }

    /// Row-major `L² × G` analysis matrix (basis times quadrature weight).
    pub fn analysis(&self) -> &[f64] {
        &self.analysis
    }

    /// Quadrature estimate of `∫ f dΩ` for grid samples `values`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().enumerate().map(|(p, v)| v * self.area(p)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_integrate_polynomials() {
        let g = SphGrid::new(6).unwrap();
        let n = 12;
        for deg in 0..n {
            let q: f64 = g.thetas().iter().zip(g.weights()).map(|(t, w)| w * t.cos().powi(deg)).sum();
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-13, "degree {deg}: {q} vs {exact}");
        }
    }

    #[test]
    fn total_area_is_four_pi() {
        let g = SphGrid::new(8).unwrap();
        assert!((g.integrate(&vec![1.0; g.len()]) - 4.0 * PI).abs() < 1e-12);
        assert_eq!(g.len(), 256);
    }

    #[test]
    fn rejects_tiny_bandlimit() {
        assert!(SphGrid::new(1).is_err());
    }
}
