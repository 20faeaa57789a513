//! Projected gradient descent on a product of unit spheres, shared by the
//! electrostatic (Jones-style) and condition-number (Skare-style) designs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{design_row, electrostatic_energy_and_grad, fold_axis, GradientScheme, SchemeError};
use crate::linalg::{self, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub iters: usize,
    /// b-value stamped on the produced scheme.
    pub b: f64,
    /// Central-difference step for the condition-number gradient.
    pub fd_step: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { restarts: 50, iters: 2000, b: 1000.0, fd_step: 1e-6 }
    }
}

pub(crate) struct Descent {
    pub dirs: Vec<Vec3>,
    pub objective: f64,
    pub initial: f64,
    #[cfg_attr(not(test), allow(dead_code))]
    pub trace: Vec<f64>,
}

fn random_dirs(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec3> {
    (0..n)
        .map(|_| loop {
            let v = [
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
            ];
            if let Some(u) = linalg::normalize(&v) {
                break u;
            }
        })
        .collect()
}

/// Backtracking projected gradient descent. `eval` returns the objective
/// and its Euclidean gradient; the tangential part drives the step and
/// each iterate is renormalized onto the spheres.
pub(crate) fn descend<F>(init: Vec<Vec3>, iters: usize, mut eval: F) -> Descent
where
    F: FnMut(&[Vec3], bool) -> (f64, Vec<Vec3>),
{
    let mut x = init;
    let (mut f, mut g) = eval(&x, true);
    let initial = f;
    let mut trace = vec![f];
    let mut step = 0.1;
    for _ in 0..iters {
        let dir: Vec<Vec3> = x
            .iter()
            .zip(&g)
            .map(|(xi, gi)| {
                let radial = linalg::dot(xi, gi);
                linalg::scale(&linalg::sub(gi, &linalg::scale(xi, radial)), -1.0)
            })
            .collect();
        let slope: f64 = dir.iter().map(|d| linalg::dot(d, d)).sum();
        if slope == 0.0 || !slope.is_finite() {
            break;
        }
        let scale = 1.0 / slope.sqrt();
        let mut accepted = false;
        while step > 1e-14 {
            let cand: Vec<Vec3> = x
                .iter()
                .zip(&dir)
                .map(|(xi, di)| {
                    linalg::normalize(&linalg::add(xi, &linalg::scale(di, step * scale))).unwrap_or(*xi)
                })
                .collect();
            let (fc, _) = eval(&cand, false);
            if fc < f - 1e-4 * step * slope.sqrt() {
                x = cand;
                let (nf, ng) = eval(&x, true);
                f = nf;
                g = ng;
                accepted = true;
                step *= 1.5;
                break;
            }
            step *= 0.5;
        }
        trace.push(f);
        if !accepted {
            break;
        }
    }
    Descent { dirs: x, objective: f, initial, trace }
}

// κ from the eigenvalues of the 6×6 Gram matrix MᵀM; adequate for the
// well-conditioned sets the optimizer visits and far cheaper than an SVD.
fn gram(dirs: &[Vec3]) -> [f64; 36] {
    let mut g = [0.0; 36];
    for d in dirs {
        add_row(&mut g, &design_row(d), 1.0);
    }
    g
}

fn add_row(g: &mut [f64; 36], r: &[f64; 6], sign: f64) {
    for i in 0..6 {
        for j in 0..6 {
            g[i * 6 + j] += sign * r[i] * r[j];
        }
    }
}

fn kappa_from_gram(g: &[f64; 36]) -> f64 {
    let (vals, _) = linalg::symmetric_eigen(g, 6);
    let max = vals.iter().cloned().fold(f64::MIN, f64::max);
    let min = vals.iter().cloned().fold(f64::MAX, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        (max / min).sqrt()
    }
}

fn kappa_eval(dirs: &[Vec3], with_grad: bool, h: f64) -> (f64, Vec<Vec3>) {
    let base = gram(dirs);
    let f = kappa_from_gram(&base);
    if !with_grad {
        return (f, Vec::new());
    }
    let mut grad = vec![[0.0; 3]; dirs.len()];
    for (i, d) in dirs.iter().enumerate() {
        let row = design_row(d);
        for k in 0..3 {
            let mut gp = base;
            let mut gm = base;
            add_row(&mut gp, &row, -1.0);
            add_row(&mut gm, &row, -1.0);
            let mut dp = *d;
            let mut dm = *d;
            dp[k] += h;
            dm[k] -= h;
            add_row(&mut gp, &design_row(&dp), 1.0);
            add_row(&mut gm, &design_row(&dm), 1.0);
            grad[i][k] = (kappa_from_gram(&gp) - kappa_from_gram(&gm)) / (2.0 * h);
        }
    }
    (f, grad)
}

fn best_of_restarts<F>(
    n: usize,
    rng: &mut impl Rng,
    cfg: &OptimizerConfig,
    run: F,
) -> Descent
where
    F: Fn(Vec<Vec3>) -> Descent + Sync,
{
    let seeds: Vec<u64> = (0..cfg.restarts.max(1)).map(|_| rng.random()).collect();
    let results: Vec<Descent> = seeds
        .par_iter()
        .map(|&s| {
            let mut r = ChaCha8Rng::seed_from_u64(s);
            run(random_dirs(n, &mut r))
        })
        .collect();
    // lowest objective, ties by restart index
    results
        .into_iter()
        .reduce(|best, cand| if cand.objective < best.objective { cand } else { best })
        .expect("at least one restart")
}

fn finish(name: String, b: f64, d: Descent) -> Result<GradientScheme, SchemeError> {
    debug_assert!(d.objective <= d.initial);
    GradientScheme::new(name, b, d.dirs.iter().map(fold_axis).collect())
}

/// Minimizes the electrostatic energy of `n` axes.
pub fn optimize_jones(n: usize, rng: &mut impl Rng, cfg: &OptimizerConfig) -> Result<GradientScheme, SchemeError> {
    if n < 3 {
        return Err(SchemeError::TooFewDirections { need: 3, got: n });
    }
    let best = best_of_restarts(n, rng, cfg, |init| {
        descend(init, cfg.iters, |x, _| electrostatic_energy_and_grad(x))
    });
    finish(format!("jones{n}"), cfg.b, best)
}

/// Minimizes the design-matrix condition number of `n` axes using
/// central finite-difference gradients.
pub fn optimize_skare(n: usize, rng: &mut impl Rng, cfg: &OptimizerConfig) -> Result<GradientScheme, SchemeError> {
    if n < 6 {
        return Err(SchemeError::TooFewDirections { need: 6, got: n });
    }
    let h = cfg.fd_step;
    let best = best_of_restarts(n, rng, cfg, |init| descend(init, cfg.iters, |x, g| kappa_eval(x, g, h)));
    finish(format!("skare{n}"), cfg.b, best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::{condition_number_of, electrostatic_energy};

    #[test]
    fn descent_is_monotone_for_both_objectives() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let init = random_dirs(7, &mut rng);
        let d = descend(init.clone(), 200, |x, _| electrostatic_energy_and_grad(x));
        assert!(d.trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(d.objective <= electrostatic_energy(&init).unwrap());

        let d = descend(init.clone(), 100, |x, g| kappa_eval(x, g, 1e-6));
        assert!(d.trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(d.objective <= d.initial);
    }

    #[test]
    fn gram_kappa_agrees_with_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let dirs = random_dirs(12, &mut rng);
        let a = kappa_from_gram(&gram(&dirs));
        let b = condition_number_of(&dirs).unwrap();
        assert!((a - b).abs() < 1e-9 * b);
    }
}
