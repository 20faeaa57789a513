//! Diffusion-tensor forward model, fitting, eigendecomposition and FA.
//!
//! Diffusivities are in mm²/s, b-values in s/mm², signals are normalized by
//! the non-diffusion-weighted signal unless an explicit `s0` is given.

use thiserror::Error;

use crate::linalg::{self, Mat3, Vec3};
use crate::schemes::{design_matrix_rows, GradientScheme};

/// Lower bound applied to measured signals before taking logarithms.
pub const SIGNAL_FLOOR: f64 = 1e-6;

/// Condition number above which a design matrix is treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("gradient directions are singular (design condition number {0:.3e})")]
    SingularDirections(f64),
    #[error("signal {index} is not positive after clamping ({value})")]
    NonPositiveSignal { index: usize, value: f64 },
    #[error("tensor has zero norm; FA is undefined")]
    ZeroTensor,
    #[error("target eigenvectors are not orthogonal (dot = {0:.3e})")]
    NonOrthogonalTargets(f64),
    #[error("invalid acquisition: {0}")]
    InvalidAcquisition(String),
    #[error("expected {expected} signals, got {got}")]
    SignalCount { expected: usize, got: usize },
}

/// Symmetric 3×3 diffusion tensor stored as its six independent components.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DiffusionTensor {
    pub dxx: f64,
    pub dyy: f64,
    pub dzz: f64,
    pub dxy: f64,
    pub dxz: f64,
    pub dyz: f64,
}

impl DiffusionTensor {
    pub fn new(dxx: f64, dyy: f64, dzz: f64, dxy: f64, dxz: f64, dyz: f64) -> Self {
        Self { dxx, dyy, dzz, dxy, dxz, dyz }
    }

    pub fn isotropic(d: f64) -> Self {
        Self::new(d, d, d, 0.0, 0.0, 0.0)
    }

    pub fn diagonal(a: f64, b: f64, c: f64) -> Self {
        Self::new(a, b, c, 0.0, 0.0, 0.0)
    }

    /// Components in `[xx, yy, zz, xy, xz, yz]` order, matching the
    /// design-matrix column layout.
    pub fn components(&self) -> [f64; 6] {
        [self.dxx, self.dyy, self.dzz, self.dxy, self.dxz, self.dyz]
    }

    pub fn from_components(c: [f64; 6]) -> Self {
        Self::new(c[0], c[1], c[2], c[3], c[4], c[5])
    }

    pub fn to_matrix(&self) -> Mat3 {
        [
            [self.dxx, self.dxy, self.dxz],
            [self.dxy, self.dyy, self.dyz],
            [self.dxz, self.dyz, self.dzz],
        ]
    }

    /// Symmetric part of `m`.
    pub fn from_matrix(m: &Mat3) -> Self {
        Self::new(
            m[0][0],
            m[1][1],
            m[2][2],
            0.5 * (m[0][1] + m[1][0]),
            0.5 * (m[0][2] + m[2][0]),
            0.5 * (m[1][2] + m[2][1]),
        )
    }

    /// `Σ λ_k v_k v_kᵀ`.
    pub fn from_eigen(values: &[f64; 3], vectors: &[Vec3; 3]) -> Self {
        let mut m = [[0.0; 3]; 3];
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    m[i][j] += values[k] * vectors[k][i] * vectors[k][j];
                }
            }
        }
        Self::from_matrix(&m)
    }

    /// `R · D · Rᵀ`.
    pub fn rotated(&self, r: &Mat3) -> Self {
        let rd = linalg::mat3_mul(r, &self.to_matrix());
        Self::from_matrix(&linalg::mat3_mul(&rd, &linalg::mat3_transpose(r)))
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::from_components(self.components().map(|x| x * c))
    }

    /// `gᵀ D g`.
    pub fn quadratic_form(&self, g: &Vec3) -> f64 {
        let [x, y, z] = *g;
        self.dxx * x * x
            + self.dyy * y * y
            + self.dzz * z * z
            + 2.0 * (self.dxy * x * y + self.dxz * x * z + self.dyz * y * z)
    }

    pub fn frobenius_norm(&self) -> f64 {
        let c = self.components();
        (c[0] * c[0] + c[1] * c[1] + c[2] * c[2] + 2.0 * (c[3] * c[3] + c[4] * c[4] + c[5] * c[5]))
            .sqrt()
    }

    pub fn mean_diffusivity(&self) -> f64 {
        (self.dxx + self.dyy + self.dzz) / 3.0
    }
}

/// A single diffusion-weighted measurement setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Acquisition {
    pub b: f64,
    pub g: Vec3,
    pub s0: f64,
}

impl Acquisition {
    pub fn new(b: f64, g: Vec3, s0: f64) -> Result<Self, TensorError> {
        if !(b >= 0.0) || !b.is_finite() {
            return Err(TensorError::InvalidAcquisition(format!("b = {b}")));
        }
        if (linalg::norm(&g) - 1.0).abs() > 1e-12 {
            return Err(TensorError::InvalidAcquisition(format!(
                "|g| = {} is not unit",
                linalg::norm(&g)
            )));
        }
        Ok(Self { b, g, s0 })
    }

    pub fn normalized(b: f64, g: Vec3) -> Result<Self, TensorError> {
        Self::new(b, g, 1.0)
    }
}

pub fn predict_signal(dt: &DiffusionTensor, acq: &Acquisition) -> f64 {
    acq.s0 * (-acq.b * dt.quadratic_form(&acq.g)).exp()
}

/// Apparent diffusion coefficient along `g`.
pub fn adc(dt: &DiffusionTensor, g: &Vec3) -> f64 {
    dt.quadratic_form(g)
}

/// Result of a log-linear fit. `clamped` counts samples raised to
/// [`SIGNAL_FLOOR`] before the log transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TensorFit {
    pub tensor: DiffusionTensor,
    pub clamped: usize,
}

fn log_attenuations(signals: &[f64], s0: f64, b: f64) -> Result<(Vec<f64>, usize), TensorError> {
    let mut clamped = 0;
    let mut out = Vec::with_capacity(signals.len());
    for (index, &s) in signals.iter().enumerate() {
        let v = if s < SIGNAL_FLOOR {
            clamped += 1;
            SIGNAL_FLOOR
        } else {
            s
        };
        // NaN survives the comparison above
        if !(v > 0.0) || !v.is_finite() {
            return Err(TensorError::NonPositiveSignal { index, value: s });
        }
        out.push((s0.ln() - v.ln()) / b);
    }
    Ok((out, clamped))
}

fn design_condition(rows: &[[f64; 6]]) -> f64 {
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    let sv = linalg::singular_values(&flat, rows.len(), 6);
    if sv[5] <= 0.0 {
        f64::INFINITY
    } else {
        sv[0] / sv[5]
    }
}

/// Solves the determined 6×6 system `−ln(sᵢ)/b = gᵢᵀ D gᵢ` for
/// normalized signals.
pub fn fit_dt_exact(signals: &[f64], dirs: &[Vec3], b: f64) -> Result<TensorFit, TensorError> {
    if signals.len() != 6 || dirs.len() != 6 {
        return Err(TensorError::SignalCount { expected: 6, got: signals.len().min(dirs.len()) });
    }
    if !(b > 0.0) {
        return Err(TensorError::InvalidAcquisition(format!("b = {b}")));
    }
    let rows = design_matrix_rows(dirs);
    let kappa = design_condition(&rows);
    if !(kappa <= MAX_CONDITION) {
        return Err(TensorError::SingularDirections(kappa));
    }
    let (rhs, clamped) = log_attenuations(signals, 1.0, b)?;
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    let x = linalg::lu_solve(&flat, &rhs, 6).ok_or(TensorError::SingularDirections(kappa))?;
    Ok(TensorFit {
        tensor: DiffusionTensor::from_components([x[0], x[1], x[2], x[3], x[4], x[5]]),
        clamped,
    })
}

/// Ordinary least-squares log-linear fit over all measurements of a
/// single-shell scheme.
pub fn fit_dt_lls(signals: &[f64], scheme: &GradientScheme, s0: f64) -> Result<TensorFit, TensorError> {
    let n = scheme.len();
    if signals.len() != n {
        return Err(TensorError::SignalCount { expected: n, got: signals.len() });
    }
    if n < 6 {
        return Err(TensorError::SingularDirections(f64::INFINITY));
    }
    let rows = design_matrix_rows(scheme.dirs());
    let kappa = design_condition(&rows);
    if !(kappa <= MAX_CONDITION) {
        return Err(TensorError::SingularDirections(kappa));
    }
    let (rhs, clamped) = log_attenuations(signals, s0, scheme.b())?;
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    let x = if n == 6 {
        linalg::lu_solve(&flat, &rhs, 6)
    } else {
        linalg::least_squares(&flat, &rhs, n, 6)
    }
    .ok_or(TensorError::SingularDirections(kappa))?;
    Ok(TensorFit {
        tensor: DiffusionTensor::from_components([x[0], x[1], x[2], x[3], x[4], x[5]]),
        clamped,
    })
}

/// Eigenvalues sorted descending with matching unit eigenvectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenDecomposition {
    pub values: [f64; 3],
    pub vectors: [Vec3; 3],
}

impl EigenDecomposition {
    pub fn principal(&self) -> Vec3 {
        self.vectors[0]
    }

    pub fn reconstruct(&self) -> DiffusionTensor {
        DiffusionTensor::from_eigen(&self.values, &self.vectors)
    }
}

// Sign convention: the largest-magnitude component is positive (first one
// wins on exact ties).
fn canonical_sign(v: Vec3) -> Vec3 {
    let mut idx = 0;
    for i in 1..3 {
        if v[i].abs() > v[idx].abs() {
            idx = i;
        }
    }
    if v[idx] < 0.0 {
        linalg::scale(&v, -1.0)
    } else {
        v
    }
}

pub fn eigendecompose(dt: &DiffusionTensor) -> EigenDecomposition {
    let m = dt.to_matrix();
    let flat: Vec<f64> = m.iter().flatten().copied().collect();
    let (vals, vecs) = linalg::symmetric_eigen(&flat, 3);
    let mut pairs: Vec<(f64, Vec3)> = vals
        .iter()
        .zip(vecs.iter())
        .map(|(&l, v)| {
            let v = linalg::normalize(&[v[0], v[1], v[2]]).unwrap_or([1.0, 0.0, 0.0]);
            (l, canonical_sign(v))
        })
        .collect();
    // descending eigenvalue, exact ties broken by the lexicographically larger vector
    pairs.sort_by(|a, b| {
        b.0.total_cmp(&a.0).then_with(|| {
            b.1[0]
                .total_cmp(&a.1[0])
                .then(b.1[1].total_cmp(&a.1[1]))
                .then(b.1[2].total_cmp(&a.1[2]))
        })
    });
    EigenDecomposition {
        values: [pairs[0].0, pairs[1].0, pairs[2].0],
        vectors: [pairs[0].1, pairs[1].1, pairs[2].1],
    }
}

/// FA from eigenvalues. Indefinite tensors are evaluated on their raw
/// eigenvalues and the result clamped to `[0, 1]`.
pub fn fractional_anisotropy(eig: &EigenDecomposition) -> Result<f64, TensorError> {
    fa_from_eigenvalues(&eig.values)
}

pub fn fa_from_eigenvalues(l: &[f64; 3]) -> Result<f64, TensorError> {
    let denom = l[0] * l[0] + l[1] * l[1] + l[2] * l[2];
    if denom == 0.0 || !denom.is_finite() {
        return Err(TensorError::ZeroTensor);
    }
    let num = (l[0] - l[1]).powi(2) + (l[1] - l[2]).powi(2) + (l[0] - l[2]).powi(2);
    let fa = (0.5 * num / denom).sqrt();
    Ok(fa.clamp(0.0, 1.0))
}

/// Convenience: FA of a tensor.
pub fn tensor_fa(dt: &DiffusionTensor) -> Result<f64, TensorError> {
    fractional_anisotropy(&eigendecompose(dt))
}

/// Keeps the eigenvalues of `dt` and places its principal and secondary
/// eigenvectors on `e1_target` and `e2_target`; the third axis is
/// `e1 × e2`.
pub fn reorient_dt(
    dt: &DiffusionTensor,
    e1_target: &Vec3,
    e2_target: &Vec3,
) -> Result<DiffusionTensor, TensorError> {
    let d = linalg::dot(e1_target, e2_target);
    if d.abs() > 1e-10 {
        return Err(TensorError::NonOrthogonalTargets(d));
    }
    let e1 = linalg::normalize(e1_target).ok_or(TensorError::NonOrthogonalTargets(f64::NAN))?;
    let e2 = linalg::normalize(e2_target).ok_or(TensorError::NonOrthogonalTargets(f64::NAN))?;
    let e3 = linalg::cross(&e1, &e2);
    let eig = eigendecompose(dt);
    Ok(DiffusionTensor::from_eigen(&eig.values, &[e1, e2, e3]))
}

#[cfg(test)]
mod tests {
    use super::*;

    const X: Vec3 = [1.0, 0.0, 0.0];
    const Y: Vec3 = [0.0, 1.0, 0.0];
    const Z: Vec3 = [0.0, 0.0, 1.0];

    fn classic_six() -> Vec<Vec3> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        vec![X, Y, Z, [s, s, 0.0], [0.0, s, s], [s, 0.0, s]]
    }

    #[test]
    fn b0_signal_is_s0() {
        let dt = DiffusionTensor::new(1.1e-3, 0.3e-3, 0.5e-3, 1e-4, -2e-4, 3e-5);
        let acq = Acquisition::new(0.0, Y, 1.0).unwrap();
        assert_eq!(predict_signal(&dt, &acq), 1.0);
    }

    #[test]
    fn isotropic_signal() {
        let dt = DiffusionTensor::isotropic(0.7e-3);
        let g = linalg::normalize(&[0.3, -0.4, 0.8]).unwrap();
        let s = predict_signal(&dt, &Acquisition::normalized(1000.0, g).unwrap());
        assert!((s - (-0.7f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn signal_along_principal_axis() {
        let dt = DiffusionTensor::diagonal(1.7e-3, 0.2e-3, 0.2e-3);
        let s = predict_signal(&dt, &Acquisition::normalized(1000.0, X).unwrap());
        assert!((s - (-1.7f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn adc_examples() {
        assert_eq!(adc(&DiffusionTensor::diagonal(3e-3, 2e-3, 1e-3), &X), 3e-3);
        let d = DiffusionTensor::isotropic(0.9e-3);
        let g = linalg::normalize(&[1.0, 2.0, -3.0]).unwrap();
        assert!((adc(&d, &g) - 0.9e-3).abs() < 1e-18);
        let dt = DiffusionTensor::new(1.1e-3, 0.3e-3, 0.5e-3, 1e-4, -2e-4, 3e-5);
        assert_eq!(adc(&dt, &g), adc(&dt, &linalg::scale(&g, -1.0)));
    }

    #[test]
    fn invalid_acquisition() {
        assert!(Acquisition::new(-1.0, X, 1.0).is_err());
        assert!(Acquisition::new(1000.0, [1.0, 1.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn exact_fit_isotropic() {
        let d: f64 = 0.8e-3;
        let s = vec![(-1000.0 * d).exp(); 6];
        let fit = fit_dt_exact(&s, &classic_six(), 1000.0).unwrap();
        let want = DiffusionTensor::isotropic(d);
        for (a, b) in fit.tensor.components().iter().zip(want.components()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(fit.clamped, 0);
    }

    #[test]
    fn exact_fit_rejects_coplanar_directions() {
        let dirs: Vec<Vec3> = (0..6)
            .map(|k| {
                let a = k as f64 * std::f64::consts::PI / 6.0;
                [a.cos(), a.sin(), 0.0]
            })
            .collect();
        let err = fit_dt_exact(&[0.5; 6], &dirs, 1000.0).unwrap_err();
        assert!(matches!(err, TensorError::SingularDirections(_)));
    }

    #[test]
    fn clamping_flags_tiny_signals() {
        let mut s = vec![0.5; 6];
        s[2] = -0.01;
        let fit = fit_dt_exact(&s, &classic_six(), 1000.0).unwrap();
        assert_eq!(fit.clamped, 1);
        s[2] = f64::NAN;
        assert!(matches!(
            fit_dt_exact(&s, &classic_six(), 1000.0),
            Err(TensorError::NonPositiveSignal { index: 2, .. })
        ));
    }

    #[test]
    fn eigen_of_diagonal() {
        let e = eigendecompose(&DiffusionTensor::diagonal(3e-3, 1e-3, 2e-3));
        assert_eq!(e.values, [3e-3, 2e-3, 1e-3]);
        assert_eq!(e.vectors, [X, Z, Y]);
    }

    #[test]
    fn eigen_of_isotropic_is_orthonormal() {
        let e = eigendecompose(&DiffusionTensor::isotropic(0.7e-3));
        for k in 0..3 {
            assert!((e.values[k] - 0.7e-3).abs() < 1e-18);
            for j in 0..3 {
                let d = linalg::dot(&e.vectors[k], &e.vectors[j]);
                assert!((d - if j == k { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fa_examples() {
        assert_eq!(fa_from_eigenvalues(&[1e-3; 3]).unwrap(), 0.0);
        assert!((fa_from_eigenvalues(&[1.0, 0.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
        let fa = fa_from_eigenvalues(&[1.7e-3, 0.2e-3, 0.2e-3]).unwrap();
        assert!((fa - 0.8704).abs() < 1e-4);
        assert_eq!(fa_from_eigenvalues(&[0.0; 3]), Err(TensorError::ZeroTensor));
    }

    #[test]
    fn fa_is_clamped_for_indefinite_tensors() {
        let fa = fa_from_eigenvalues(&[1e-3, -1e-3, -1e-3]).unwrap();
        assert!(fa <= 1.0);
    }

    #[test]
    fn reorient_examples() {
        let iso = DiffusionTensor::isotropic(0.7e-3);
        let out = reorient_dt(&iso, &Y, &Z).unwrap();
        for (a, b) in out.components().iter().zip(iso.components()) {
            assert!((a - b).abs() < 1e-18);
        }
        let aligned = DiffusionTensor::diagonal(0.5e-3, 1.7e-3, 0.3e-3);
        let out = reorient_dt(&aligned, &Y, &X).unwrap();
        for (a, b) in out.components().iter().zip(aligned.components()) {
            assert!((a - b).abs() < 1e-13);
        }
        assert!(matches!(
            reorient_dt(&aligned, &Y, &[0.0, 1.0, 1.0]),
            Err(TensorError::NonOrthogonalTargets(_))
        ));
    }
}
