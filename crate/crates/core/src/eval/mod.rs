//! Metrics: FA-binned RMSE, paired t-tests, orientation tile maps and
//! rotation-equivariance error.

mod report;
mod stats;
mod tiles;

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::datagen::clean_signals;
use crate::nn::{adc_input, ModelKind, NetworkModel, NnError};
use crate::schemes::GradientScheme;
use crate::sphere::{random_rotation, rotate_signal, Rotation, SphSignal};
use crate::tensor::DiffusionTensor;

pub use report::{
    binned_csv, parse_predictions, predictions_csv, subject_binned_csv, tile_map_csv, tile_map_svg, ttest_csv,
    TTestRow,
};
pub use stats::{ln_gamma, paired_ttest, reg_inc_beta, student_t_cdf, two_sided_p, TTest, P_FLOOR};
pub use tiles::{icosphere_tiles, sphere_tile_map, tile_index, Tile, TileMap, DEFAULT_FA_THRESHOLD};

pub const N_FA_BINS: usize = 5;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("equivariance is measured on spherical inputs; got a {0} model")]
    WrongModelKind(&'static str),
    #[error("value {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Bin of a ground-truth FA value; 1.0 falls in the top bin.
pub fn fa_bin(fa: f64) -> usize {
    ((fa * N_FA_BINS as f64).floor().max(0.0) as usize).min(N_FA_BINS - 1)
}

pub fn bin_edges(bin: usize) -> (f64, f64) {
    (bin as f64 / N_FA_BINS as f64, (bin + 1) as f64 / N_FA_BINS as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinnedRmse {
    /// NaN for empty bins.
    pub rmse: [f64; N_FA_BINS],
    pub count: [usize; N_FA_BINS],
}

impl BinnedRmse {
    pub fn total(&self) -> usize {
        self.count.iter().sum()
    }
}

/// RMSE of `pred` against `gt` in five equal FA bins on `[0, 1)` chosen by
/// `gt`.
pub fn rmse_binned(pred: &[f64], gt: &[f64]) -> Result<BinnedRmse, EvalError> {
    if pred.len() != gt.len() {
        return Err(EvalError::LengthMismatch { left: pred.len(), right: gt.len() });
    }
    let mut sums = [0.0; N_FA_BINS];
    let mut count = [0usize; N_FA_BINS];
    for (p, g) in pred.iter().zip(gt) {
        if !(0.0..=1.0).contains(g) {
            return Err(EvalError::OutOfRange(*g));
        }
        let b = fa_bin(*g);
        sums[b] += (p - g).powi(2);
        count[b] += 1;
    }
    let rmse = std::array::from_fn(|b| if count[b] == 0 { f64::NAN } else { (sums[b] / count[b] as f64).sqrt() });
    Ok(BinnedRmse { rmse, count })
}

/// One [`BinnedRmse`] per subject, in ascending subject order.
pub fn rmse_binned_by_subject(
    pred: &[f64],
    gt: &[f64],
    subjects: &[usize],
) -> Result<Vec<(usize, BinnedRmse)>, EvalError> {
    if subjects.len() != gt.len() {
        return Err(EvalError::LengthMismatch { left: subjects.len(), right: gt.len() });
    }
    if pred.len() != gt.len() {
        return Err(EvalError::LengthMismatch { left: pred.len(), right: gt.len() });
    }
    let mut groups: BTreeMap<usize, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for ((p, g), s) in pred.iter().zip(gt).zip(subjects) {
        let e = groups.entry(*s).or_default();
        e.0.push(*p);
        e.1.push(*g);
    }
    groups.into_iter().map(|(s, (p, g))| Ok((s, rmse_binned(&p, &g)?))).collect()
}

/// Mean over subjects of each bin's RMSE, skipping subjects with an empty
/// bin.
pub fn mean_subject_rmse(per_subject: &[(usize, BinnedRmse)]) -> [f64; N_FA_BINS] {
    std::array::from_fn(|b| {
        let v: Vec<f64> = per_subject.iter().map(|(_, r)| r.rmse[b]).filter(|x| !x.is_nan()).collect();
        if v.is_empty() {
            f64::NAN
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    })
}

/// Paired t-test per bin across subjects. Subjects must appear in the same
/// order in both lists; pairs where either side is empty are dropped and a
/// bin with fewer than two pairs yields `None`.
pub fn per_bin_ttests(
    a: &[(usize, BinnedRmse)],
    b: &[(usize, BinnedRmse)],
) -> Result<[Option<TTest>; N_FA_BINS], EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch { left: a.len(), right: b.len() });
    }
    let mut out = [None; N_FA_BINS];
    for (bin, slot) in out.iter_mut().enumerate() {
        let (xa, xb): (Vec<f64>, Vec<f64>) = a
            .iter()
            .zip(b)
            .map(|((_, ra), (_, rb))| (ra.rmse[bin], rb.rmse[bin]))
            .filter(|(x, y)| !x.is_nan() && !y.is_nan())
            .unzip();
        if xa.len() >= 2 {
            *slot = Some(paired_ttest(&xa, &xb)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivarianceReport {
    pub max: f64,
    pub mean: f64,
    pub evaluations: usize,
}

fn summarize(devs: Vec<f64>) -> EquivarianceReport {
    let n = devs.len();
    let max = devs.iter().copied().fold(0.0, f64::max);
    let mean = if n == 0 { 0.0 } else { devs.iter().sum::<f64>() / n as f64 };
    EquivarianceReport { max, mean, evaluations: n }
}

/// Seeded Haar-random rotations.
pub fn seeded_rotations(n: usize, seed: u64) -> Vec<Rotation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_rotation(&mut rng)).collect()
}

/// `|f(R·x) − f(x)|` over every input and rotation, for an SCNN fed
/// spherical signals on its own grid.
pub fn equivariance_error(
    model: &NetworkModel,
    inputs: &[SphSignal],
    rotations: &[Rotation],
) -> Result<EquivarianceReport, EvalError> {
    if model.kind() != ModelKind::Scnn {
        return Err(EvalError::WrongModelKind(model.kind().name()));
    }
    let mut devs = Vec::with_capacity(inputs.len() * rotations.len());
    for x in inputs {
        let base = model.forward_signal(x)?;
        for r in rotations {
            devs.push((model.forward_signal(&rotate_signal(x, r))? - base).abs());
        }
    }
    Ok(summarize(devs))
}

/// Rotates the underlying tensors instead of the signal, then rebuilds
/// each model's input: scheme signals for the FCN, the sampled ADC profile
/// for the SCNN.
pub fn tensor_rotation_error(
    model: &NetworkModel,
    tensors: &[DiffusionTensor],
    scheme: &GradientScheme,
    rotations: &[Rotation],
) -> Result<EquivarianceReport, EvalError> {
    let input = |dt: &DiffusionTensor| -> Vec<f64> {
        match model.grid() {
            None => clean_signals(dt, scheme),
            Some(g) => adc_input(dt, g),
        }
    };
    let mut devs = Vec::with_capacity(tensors.len() * rotations.len());
    for dt in tensors {
        let base = model.forward(&input(dt))?;
        for r in rotations {
            devs.push((model.forward(&input(&dt.rotated(r.matrix())))? - base).abs());
        }
    }
    Ok(summarize(devs))
}

/// ADC profile of `dt` on `model`'s grid as a signal, in network units.
pub fn adc_signal(model: &NetworkModel, dt: &DiffusionTensor) -> Result<SphSignal, EvalError> {
    let grid = model.grid().ok_or(EvalError::WrongModelKind(model.kind().name()))?;
    Ok(SphSignal::new(grid.clone(), adc_input(dt, grid)).map_err(NnError::from)?)
}
