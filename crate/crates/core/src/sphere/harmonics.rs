//! Orthonormal real spherical harmonics (no Condon–Shortley phase) and the
//! forward/inverse transforms on [`SphGrid`].
//!
//! Coefficient layout: `(ℓ, m) → ℓ² + ℓ + m`, so each degree is a
//! contiguous block of `2ℓ + 1` values ordered `m = −ℓ..=ℓ`.
//! `m > 0` uses `√2 N P_ℓ^m(cos θ) cos mφ`, `m < 0` uses
//! `√2 N P_ℓ^|m|(cos θ) sin |m|φ`.

use std::f64::consts::PI;
use std::sync::Arc;

use super::{SphGrid, SphereError};
use crate::linalg::Vec3;

pub fn num_coeffs(bandlimit: usize) -> usize {
    bandlimit * bandlimit
}

pub fn sh_index(l: usize, m: i64) -> usize {
    ((l * l + l) as i64 + m) as usize
}

/// Fully normalized associated Legendre values `N_ℓm P_ℓ^m(x)` for
/// `0 ≤ m ≤ ℓ < L`, stored at `ℓ(ℓ+1)/2 + m`.
fn normalized_legendre(bandlimit: usize, x: f64, s: f64) -> Vec<f64> {
    let tri = |l: usize, m: usize| l * (l + 1) / 2 + m;
    let mut p = vec![0.0; bandlimit * (bandlimit + 1) / 2];
    p[0] = (0.25 / PI).sqrt();
    for m in 1..bandlimit {
        let mf = m as f64;
        p[tri(m, m)] = ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s * p[tri(m - 1, m - 1)];
    }
    for m in 0..bandlimit {
        if m + 1 < bandlimit {
            p[tri(m + 1, m)] = (2.0 * m as f64 + 3.0).sqrt() * x * p[tri(m, m)];
        }
        for l in (m + 2)..bandlimit {
            let lf = l as f64;
            let mf = m as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
            p[tri(l, m)] = a * (x * p[tri(l - 1, m)] - b * p[tri(l - 2, m)]);
        }
    }
    p
}

/// All `L²` real harmonics at colatitude `θ` (given as `cos θ`, `sin θ`)
/// and longitude `φ`.
pub fn real_sh_row(bandlimit: usize, cos_theta: f64, sin_theta: f64, phi: f64) -> Vec<f64> {
    let p = normalized_legendre(bandlimit, cos_theta, sin_theta);
    let mut out = vec![0.0; num_coeffs(bandlimit)];
    let r2 = std::f64::consts::SQRT_2;
    for l in 0..bandlimit {
        let base = l * (l + 1) / 2;
        out[sh_index(l, 0)] = p[base];
        for m in 1..=l {
            let (sm, cm) = (m as f64 * phi).sin_cos();
            out[sh_index(l, m as i64)] = r2 * p[base + m] * cm;
            out[sh_index(l, -(m as i64))] = r2 * p[base + m] * sm;
        }
    }
    out
}

/// Real harmonics at an arbitrary (not necessarily unit) direction.
pub fn real_sh_at(bandlimit: usize, v: &Vec3) -> Vec<f64> {
    let rho = (v[0] * v[0] + v[1] * v[1]).sqrt();
    let r = (rho * rho + v[2] * v[2]).sqrt();
    real_sh_row(bandlimit, v[2] / r, rho / r, v[1].atan2(v[0]))
}

/// Real spherical-harmonic coefficients of degree `< L`.
#[derive(Debug, Clone, PartialEq)]
pub struct SHCoeffs {
    bandlimit: usize,
    coeffs: Vec<f64>,
}

impl SHCoeffs {
    pub fn zeros(bandlimit: usize) -> Self {
        Self { bandlimit, coeffs: vec![0.0; num_coeffs(bandlimit)] }
    }

    pub fn from_vec(bandlimit: usize, coeffs: Vec<f64>) -> Result<Self, SphereError> {
        if coeffs.len() != num_coeffs(bandlimit) {
            return Err(SphereError::CoeffCount { bandlimit, got: coeffs.len() });
        }
        Ok(Self { bandlimit, coeffs })
    }

    pub fn bandlimit(&self) -> usize {
        self.bandlimit
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn get(&self, l: usize, m: i64) -> f64 {
        self.coeffs[sh_index(l, m)]
    }

    pub fn set(&mut self, l: usize, m: i64, v: f64) {
        self.coeffs[sh_index(l, m)] = v;
    }

    /// The `2ℓ + 1` coefficients of degree `ℓ`.
    pub fn degree(&self, l: usize) -> &[f64] {
        &self.coeffs[l * l..(l + 1) * (l + 1)]
    }

    pub fn degree_mut(&mut self, l: usize) -> &mut [f64] {
        &mut self.coeffs[l * l..(l + 1) * (l + 1)]
    }
}

/// Grid samples of a real function on the sphere.
#[derive(Debug, Clone)]
pub struct SphSignal {
    grid: Arc<SphGrid>,
    values: Vec<f64>,
}

impl SphSignal {
    pub fn new(grid: Arc<SphGrid>, values: Vec<f64>) -> Result<Self, SphereError> {
        if values.len() != grid.len() {
            return Err(SphereError::SampleCount { expected: grid.len(), got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SphereError::NonFinite);
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Arc<SphGrid>, f: impl Fn(&Vec3) -> f64) -> Result<Self, SphereError> {
        let values = grid.dirs().iter().map(f).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<SphGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Quadrature analysis; exact for signals band-limited below the grid's `L`.
pub fn sht_forward(signal: &SphSignal) -> SHCoeffs {
    let grid = signal.grid();
    let g = grid.len();
    let a = grid.analysis();
    let coeffs = (0..num_coeffs(grid.bandlimit()))
        .map(|k| {
            let row = &a[k * g..(k + 1) * g];
            row.iter().zip(signal.values()).map(|(w, v)| w * v).sum()
        })
        .collect();
    SHCoeffs { bandlimit: grid.bandlimit(), coeffs }
}

/// Pointwise synthesis `Σ a_ℓm Y_ℓm` on `grid`.
pub fn sht_inverse(coeffs: &SHCoeffs, grid: &Arc<SphGrid>) -> Result<SphSignal, SphereError> {
    if coeffs.bandlimit() > grid.bandlimit() {
        return Err(SphereError::BandlimitMismatch { coeffs: coeffs.bandlimit(), grid: grid.bandlimit() });
    }
    let nc = num_coeffs(grid.bandlimit());
    let used = coeffs.as_slice().len();
    let basis = grid.basis();
    let values = (0..grid.len())
        .map(|p| {
            basis[p * nc..p * nc + used].iter().zip(coeffs.as_slice()).map(|(y, a)| y * a).sum()
        })
        .collect();
    SphSignal::new(grid.clone(), values)
}

/// `P_ℓ = Σ_m a_ℓm²`.
pub fn power_spectrum(coeffs: &SHCoeffs) -> Vec<f64> {
    (0..coeffs.bandlimit())
        .map(|l| coeffs.degree(l).iter().map(|a| a * a).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_signal() {
        let grid = SphGrid::new(6).unwrap();
        let s = SphSignal::new(grid.clone(), vec![1.0; grid.len()]).unwrap();
        let c = sht_forward(&s);
        assert!((c.get(0, 0) - (4.0 * PI).sqrt()).abs() < 1e-12);
        for (k, v) in c.as_slice().iter().enumerate().skip(1) {
            assert!(v.abs() < 1e-12, "coeff {k} = {v}");
        }
        let p = power_spectrum(&c);
        assert!((p[0] - 4.0 * PI).abs() < 1e-11);
    }

    #[test]
    fn inverse_of_constant_and_zero() {
        let grid = SphGrid::new(4).unwrap();
        let mut c = SHCoeffs::zeros(4);
        let z = sht_inverse(&c, &grid).unwrap();
        assert!(z.values().iter().all(|&v| v == 0.0));
        c.set(0, 0, (4.0 * PI).sqrt());
        let one = sht_inverse(&c, &grid).unwrap();
        assert!(one.values().iter().all(|v| (v - 1.0).abs() < 1e-14));
        assert!(power_spectrum(&SHCoeffs::zeros(4)).iter().all(|&p| p == 0.0));
    }

    #[test]
    fn bandlimit_mismatch() {
        let grid = SphGrid::new(4).unwrap();
        assert!(matches!(
            sht_inverse(&SHCoeffs::zeros(5), &grid),
            Err(SphereError::BandlimitMismatch { coeffs: 5, grid: 4 })
        ));
        // smaller coefficient sets synthesize fine
        assert!(sht_inverse(&SHCoeffs::zeros(3), &grid).is_ok());
    }

    #[test]
    fn low_degrees_match_closed_forms() {
        // Y_10 = sqrt(3/4π) z, Y_11 = sqrt(3/4π) x, Y_1-1 = sqrt(3/4π) y
        let v = [0.3, -0.5, 0.812403840463596];
        let y = real_sh_at(3, &v);
        let c = (3.0 / (4.0 * PI)).sqrt();
        let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        assert!((y[sh_index(1, 0)] - c * v[2] / r).abs() < 1e-14);
        assert!((y[sh_index(1, 1)] - c * v[0] / r).abs() < 1e-14);
        assert!((y[sh_index(1, -1)] - c * v[1] / r).abs() < 1e-14);
        // Y_2-2 = sqrt(15/4π) x y
        let c2 = (15.0 / (4.0 * PI)).sqrt();
        assert!((y[sh_index(2, -2)] - c2 * v[0] * v[1] / (r * r)).abs() < 1e-14);
    }
}
