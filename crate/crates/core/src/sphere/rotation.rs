use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{self, Mat3, Vec3};

/// A proper rotation, active convention, with zyz Euler parametrization
/// `R = Rz(α) · Ry(β) · Rz(γ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    m: Mat3,
}

fn rz(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
}

fn ry(b: f64) -> Mat3 {
    let (s, c) = b.sin_cos();
    [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]]
}

impl Rotation {
    pub fn identity() -> Self {
        Self { m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] }
    }

    pub fn from_euler_zyz(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self { m: linalg::mat3_mul(&rz(alpha), &linalg::mat3_mul(&ry(beta), &rz(gamma))) }
    }

    /// Wraps an orthogonal matrix; returns `None` unless `RᵀR = I` and
    /// `det R = 1` to 1e-9.
    pub fn from_matrix(m: Mat3) -> Option<Self> {
        let rtr = linalg::mat3_mul(&linalg::mat3_transpose(&m), &m);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                if (rtr[i][j] - want).abs() > 1e-9 {
                    return None;
                }
            }
        }
        if (linalg::mat3_det(&m) - 1.0).abs() > 1e-9 {
            return None;
        }
        Some(Self { m })
    }

    /// Unit quaternion `(w, x, y, z)`; normalized internally.
    pub fn from_quaternion(q: [f64; 4]) -> Self {
        let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        let [w, x, y, z] = q.map(|v| v / n);
        Self {
            m: [
                [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
                [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
                [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
            ],
        }
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.m
    }

    /// `(α, β, γ)` with `β ∈ [0, π]`; at the poles `γ = 0`.
    pub fn to_euler_zyz(&self) -> (f64, f64, f64) {
        let m = &self.m;
        let sb = (m[0][2] * m[0][2] + m[1][2] * m[1][2]).sqrt();
        let beta = sb.atan2(m[2][2]);
        if sb > 1e-12 {
            (m[1][2].atan2(m[0][2]), beta, m[2][1].atan2(-m[2][0]))
        } else if m[2][2] > 0.0 {
            (m[1][0].atan2(m[0][0]), beta, 0.0)
        } else {
            ((-m[1][0]).atan2(-m[0][0]), beta, 0.0)
        }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Rotation) -> Rotation {
        Rotation { m: linalg::mat3_mul(&self.m, &other.m) }
    }

    pub fn inverse(&self) -> Rotation {
        Rotation { m: linalg::mat3_transpose(&self.m) }
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        linalg::mat3_apply(&self.m, v)
    }
}

/// Haar-uniform rotation from a normalized 4D Gaussian quaternion.
pub fn random_rotation(rng: &mut impl Rng) -> Rotation {
    loop {
        let q: [f64; 4] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        if q.iter().map(|v| v * v).sum::<f64>() > 1e-20 {
            return Rotation::from_quaternion(q);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: &Mat3, b: &Mat3, tol: f64) -> bool {
        (0..3).all(|i| (0..3).all(|j| (a[i][j] - b[i][j]).abs() < tol))
    }

    #[test]
    fn euler_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let r = random_rotation(&mut rng);
            let (a, b, g) = r.to_euler_zyz();
            assert!(close(Rotation::from_euler_zyz(a, b, g).matrix(), r.matrix(), 1e-12));
        }
        for r in [
            Rotation::from_euler_zyz(0.4, 0.0, 0.3),
            Rotation::from_euler_zyz(0.4, std::f64::consts::PI, 0.3),
            Rotation::identity(),
        ] {
            let (a, b, g) = r.to_euler_zyz();
            assert!(close(Rotation::from_euler_zyz(a, b, g).matrix(), r.matrix(), 1e-12));
        }
    }

    #[test]
    fn random_rotations_are_proper_and_reproducible() {
        let mut a = ChaCha8Rng::seed_from_u64(7);
        let mut b = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let r = random_rotation(&mut a);
            assert_eq!(r, random_rotation(&mut b));
            let m = r.matrix();
            let rtr = linalg::mat3_mul(&linalg::mat3_transpose(m), m);
            assert!(close(&rtr, Rotation::identity().matrix(), 1e-12));
            assert!((linalg::mat3_det(m) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn from_matrix_rejects_reflections() {
        assert!(Rotation::from_matrix([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]]).is_none());
        assert!(Rotation::from_matrix(*Rotation::from_euler_zyz(1.0, 2.0, 3.0).matrix()).is_some());
    }
}
