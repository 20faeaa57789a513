//! Gradient schemes: single-shell direction sets, their design matrices,
//! the two design criteria (condition number and electrostatic energy),
//! optimizers for both, and dense-to-sparse subset matching.
//!
//! Directions are axes throughout: `g` and `-g` describe the same
//! measurement, so every distance folds antipodes.

mod assign;
mod io;
mod optimize;

use thiserror::Error;

use crate::linalg::{self, Vec3};

pub use assign::{folded_angle, hungarian, match_subset, match_subset_cost};
pub use io::{parse_scheme, read_scheme, scheme_to_string, write_scheme};
pub use optimize::{optimize_jones, optimize_skare, OptimizerConfig};

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error("design matrix is rank deficient")]
    RankDeficient,
    #[error("directions {0} and {1} coincide (up to sign)")]
    CoincidentDirections(usize, usize),
    #[error("direction {0} has zero length")]
    ZeroDirection(usize),
    #[error("need at least {need} directions, got {got}")]
    TooFewDirections { need: usize, got: usize },
    #[error("invalid b-value {0}")]
    InvalidB(f64),
    #[error("scheme file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A single-shell acquisition: unit directions sharing one b-value.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientScheme {
    name: String,
    b: f64,
    dirs: Vec<Vec3>,
}

impl GradientScheme {
    /// Normalizes every direction; zero vectors are rejected. Directions
    /// already unit to rounding are kept bit for bit, so a scheme survives
    /// a write/read cycle unchanged.
    pub fn new(name: impl Into<String>, b: f64, dirs: Vec<Vec3>) -> Result<Self, SchemeError> {
        if !(b >= 0.0) || !b.is_finite() {
            return Err(SchemeError::InvalidB(b));
        }
        let dirs = dirs
            .iter()
            .enumerate()
            .map(|(i, d)| {
                if (linalg::dot(d, d) - 1.0).abs() <= 4.0 * f64::EPSILON {
                    Ok(*d)
                } else {
                    linalg::normalize(d).ok_or(SchemeError::ZeroDirection(i))
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { name: name.into(), b, dirs })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn dirs(&self) -> &[Vec3] {
        &self.dirs
    }

    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Subset by index, keeping order.
    pub fn select(&self, name: impl Into<String>, indices: &[usize]) -> Self {
        Self {
            name: name.into(),
            b: self.b,
            dirs: indices.iter().map(|&i| self.dirs[i]).collect(),
        }
    }

    /// The six-direction scheme `{x, y, z, (x+y)/√2, (y+z)/√2, (x+z)/√2}`.
    pub fn classic6(b: f64) -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self::new(
            "classic6",
            b,
            vec![
                [1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [0.0, 0.0, 1.0],
                [s, s, 0.0],
                [0.0, s, s],
                [s, 0.0, s],
            ],
        )
        .expect("constant directions are valid")
    }

    /// Six axes through the vertices of a regular icosahedron.
    pub fn icosahedral6(b: f64) -> Self {
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        Self::new(
            "icosahedral6",
            b,
            vec![
                [0.0, 1.0, phi],
                [0.0, 1.0, -phi],
                [1.0, phi, 0.0],
                [1.0, -phi, 0.0],
                [phi, 0.0, 1.0],
                [-phi, 0.0, 1.0],
            ],
        )
        .expect("constant directions are valid")
    }
}

/// Design-matrix row `[gx², gy², gz², 2gxgy, 2gxgz, 2gygz]`, so that
/// `row · [Dxx, Dyy, Dzz, Dxy, Dxz, Dyz] = gᵀ D g`.
pub fn design_row(g: &Vec3) -> [f64; 6] {
    let [x, y, z] = *g;
    [x * x, y * y, z * z, 2.0 * x * y, 2.0 * x * z, 2.0 * y * z]
}

pub fn design_matrix_rows(dirs: &[Vec3]) -> Vec<[f64; 6]> {
    dirs.iter().map(design_row).collect()
}

/// `N × 6` design matrix of a scheme.
pub fn design_matrix(scheme: &GradientScheme) -> Vec<[f64; 6]> {
    design_matrix_rows(scheme.dirs())
}

/// Ratio of largest to smallest singular value of the design matrix.
pub fn condition_number(scheme: &GradientScheme) -> Result<f64, SchemeError> {
    condition_number_of(scheme.dirs())
}

pub(crate) fn condition_number_of(dirs: &[Vec3]) -> Result<f64, SchemeError> {
    if dirs.len() < 6 {
        return Err(SchemeError::TooFewDirections { need: 6, got: dirs.len() });
    }
    let flat: Vec<f64> = design_matrix_rows(dirs).iter().flatten().copied().collect();
    let sv = linalg::singular_values(&flat, dirs.len(), 6);
    if sv[5] <= 1e-12 * sv[0] {
        return Err(SchemeError::RankDeficient);
    }
    Ok(sv[0] / sv[5])
}

/// Coulomb energy of the antipodally duplicated point set `{±dᵢ}`, summed
/// over unique unordered pairs including each point with its own antipode.
pub fn electrostatic_energy(dirs: &[Vec3]) -> Result<f64, SchemeError> {
    if dirs.len() < 2 {
        return Err(SchemeError::TooFewDirections { need: 2, got: dirs.len() });
    }
    let mut energy = 0.5 * dirs.len() as f64;
    for i in 0..dirs.len() {
        for j in (i + 1)..dirs.len() {
            let dm = linalg::norm(&linalg::sub(&dirs[i], &dirs[j]));
            let dp = linalg::norm(&linalg::add(&dirs[i], &dirs[j]));
            if dm < 1e-9 || dp < 1e-9 {
                return Err(SchemeError::CoincidentDirections(i, j));
            }
            energy += 2.0 / dm + 2.0 / dp;
        }
    }
    Ok(energy)
}

/// Energy and its Euclidean gradient with respect to each direction.
pub(crate) fn electrostatic_energy_and_grad(dirs: &[Vec3]) -> (f64, Vec<Vec3>) {
    let mut energy = 0.5 * dirs.len() as f64;
    let mut grad = vec![[0.0; 3]; dirs.len()];
    for i in 0..dirs.len() {
        for j in (i + 1)..dirs.len() {
            let dm = linalg::sub(&dirs[i], &dirs[j]);
            let dp = linalg::add(&dirs[i], &dirs[j]);
            let rm = linalg::norm(&dm);
            let rp = linalg::norm(&dp);
            if rm < 1e-12 || rp < 1e-12 {
                return (f64::INFINITY, grad);
            }
            energy += 2.0 / rm + 2.0 / rp;
            // d(2/|u|)/du = -2u/|u|³
            let cm = -2.0 / (rm * rm * rm);
            let cp = -2.0 / (rp * rp * rp);
            for k in 0..3 {
                grad[i][k] += cm * dm[k] + cp * dp[k];
                grad[j][k] += -cm * dm[k] + cp * dp[k];
            }
        }
    }
    (energy, grad)
}

/// Canonical representative of an axis: flipped into the `z > 0`
/// hemisphere, with ties on the equator broken by `y`, then `x`.
pub fn fold_axis(v: &Vec3) -> Vec3 {
    let flip = if v[2] != 0.0 {
        v[2] < 0.0
    } else if v[1] != 0.0 {
        v[1] < 0.0
    } else {
        v[0] < 0.0
    };
    if flip {
        linalg::scale(v, -1.0)
    } else {
        *v
    }
}
