//! Synthetic diffusion-tensor phantoms.
//!
//! Each voxel gets an axially symmetric tensor with controlled FA, mean
//! diffusivity and orientation, and six Rician-corrupted normalized
//! signals per gradient scheme. All schemes of a voxel share the tensor
//! and the same noise stream, so scheme comparisons are paired.
//!
//! Dataset file: line 1 is a single-line JSON header; each further line
//! is `subject_id,dxx,dyy,dzz,dxy,dxz,dyz,fa_gt,<6 signals per scheme>`
//! with values written to 17 significant digits.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, Vec3};
use crate::nn::{adc_input, ModelKind};
use crate::schemes::{match_subset, optimize_jones, GradientScheme, OptimizerConfig, SchemeError};
use crate::sphere::SphGrid;
use crate::tensor::{
    eigendecompose, fit_dt_exact, fit_dt_lls, predict_signal, reorient_dt, tensor_fa, Acquisition,
    DiffusionTensor, TensorError,
};

/// Anterior–posterior axis.
pub const AP_AXIS: Vec3 = [0.0, 1.0, 0.0];
/// Superior–inferior axis.
pub const SI_AXIS: Vec3 = [0.0, 0.0, 1.0];

pub const DATASET_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DatagenError {
    #[error("scheme {name} has {got} directions; signal records need 6")]
    SchemeArity { name: String, got: usize },
    #[error("invalid phantom config: {0}")]
    InvalidConfig(String),
    #[error("dataset line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("no scheme named {0} in dataset")]
    UnknownScheme(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrientationMode {
    Uniform,
    ApRestricted,
}

impl OrientationMode {
    pub fn name(self) -> &'static str {
        match self {
            OrientationMode::Uniform => "uniform",
            OrientationMode::ApRestricted => "ap_restricted",
        }
    }
}

/// Source of the ground-truth tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundTruth {
    /// The sampled tensor itself.
    Analytic,
    /// A log-linear fit to noisy signals on a dense electrostatic scheme
    /// with `dense_dirs` directions; the six-direction signals are the
    /// dense measurements closest to each scheme.
    DenseFit { dense_dirs: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhantomConfig {
    pub n_voxels: usize,
    pub n_subjects: usize,
    pub snr: f64,
    /// mm²/s
    pub md_mean: f64,
    pub md_sd: f64,
    pub fa_min: f64,
    pub fa_max: f64,
    pub orientation: OrientationMode,
    pub ground_truth: GroundTruth,
    pub seed: u64,
}

impl Default for PhantomConfig {
    fn default() -> Self {
        Self {
            n_voxels: 100_000,
            n_subjects: 1,
            snr: 20.0,
            md_mean: 0.7e-3,
            md_sd: 0.1e-3,
            fa_min: 0.0,
            fa_max: 0.95,
            orientation: OrientationMode::Uniform,
            ground_truth: GroundTruth::Analytic,
            seed: 0,
        }
    }
}

impl PhantomConfig {
    pub fn validate(&self) -> Result<(), DatagenError> {
        let bad = |m: String| Err(DatagenError::InvalidConfig(m));
        if !(self.snr > 0.0) {
            return bad(format!("snr must be positive, got {}", self.snr));
        }
        if !(self.md_mean > 0.0) || !(self.md_sd >= 0.0) {
            return bad(format!("md_mean {} / md_sd {}", self.md_mean, self.md_sd));
        }
        if !(0.0 <= self.fa_min && self.fa_min <= self.fa_max && self.fa_max < 1.0) {
            return bad(format!("fa range [{}, {}] must lie in [0, 1)", self.fa_min, self.fa_max));
        }
        if let GroundTruth::DenseFit { dense_dirs } = self.ground_truth {
            if dense_dirs < 6 {
                return bad(format!("dense scheme needs at least 6 directions, got {dense_dirs}"));
            }
        }
        Ok(())
    }

    pub fn sigma(&self) -> f64 {
        1.0 / self.snr
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoxelRecord {
    pub subject_id: usize,
    pub dt_gt: DiffusionTensor,
    pub fa_gt: f64,
    /// Noisy normalized signals, one entry per scheme in dataset order.
    pub signals: Vec<[f64; 6]>,
}

impl VoxelRecord {
    /// Principal eigenvector of the ground-truth tensor.
    pub fn principal_dir(&self) -> Vec3 {
        eigendecompose(&self.dt_gt).principal()
    }
}

/// `λ⊥/λ∥` of an axially symmetric tensor with the given FA, using
/// `FA = (1 − r)/√(1 + 2r²)`, which decreases from 1 at `r = 0` to 0 at
/// `r = 1`.
pub fn axial_ratio_for_fa(fa: f64) -> f64 {
    let f = |r: f64| (1.0 - r) / (1.0 + 2.0 * r * r).sqrt();
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-15 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > fa {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Axially symmetric tensor with the given FA, mean diffusivity and
/// principal axis.
pub fn axial_tensor(fa: f64, md: f64, axis: &Vec3) -> DiffusionTensor {
    let r = axial_ratio_for_fa(fa);
    let par = 3.0 * md / (1.0 + 2.0 * r);
    let perp = r * par;
    let u = linalg::normalize(axis).expect("nonzero axis");
    // D = λ⊥ I + (λ∥ − λ⊥) u uᵀ
    let d = par - perp;
    DiffusionTensor::new(
        perp + d * u[0] * u[0],
        perp + d * u[1] * u[1],
        perp + d * u[2] * u[2],
        d * u[0] * u[1],
        d * u[0] * u[2],
        d * u[1] * u[2],
    )
}

fn uniform_axis(rng: &mut impl Rng) -> Vec3 {
    loop {
        let v: Vec3 = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
        if let Some(u) = linalg::normalize(&v) {
            return u;
        }
    }
}

/// Draws FA uniformly on `[fa_min, fa_max]`, MD from a positive-truncated
/// normal, and the principal axis uniformly on the sphere (or along AP).
pub fn sample_ground_truth_dt(rng: &mut impl Rng, cfg: &PhantomConfig) -> DiffusionTensor {
    let fa = if cfg.fa_max > cfg.fa_min { rng.random_range(cfg.fa_min..=cfg.fa_max) } else { cfg.fa_min };
    let normal = Normal::new(cfg.md_mean, cfg.md_sd).expect("validated md");
    let md = loop {
        let v = normal.sample(rng);
        if v > 0.0 {
            break v;
        }
    };
    let axis = match cfg.orientation {
        OrientationMode::Uniform => uniform_axis(rng),
        OrientationMode::ApRestricted => AP_AXIS,
    };
    axial_tensor(fa, md, &axis)
}

/// `√((s + n₁)² + n₂²)` with `n₁, n₂ ~ N(0, σ²)`.
pub fn add_rician_noise(signal: f64, sigma: f64, rng: &mut impl Rng) -> f64 {
    if sigma == 0.0 {
        return signal;
    }
    let n1: f64 = rng.sample::<f64, _>(StandardNormal) * sigma;
    let n2: f64 = rng.sample::<f64, _>(StandardNormal) * sigma;
    ((signal + n1).powi(2) + n2 * n2).sqrt()
}

/// Noise-free normalized signals of `dt` on a scheme.
pub fn clean_signals(dt: &DiffusionTensor, scheme: &GradientScheme) -> Vec<f64> {
    scheme
        .dirs()
        .iter()
        .map(|g| predict_signal(dt, &Acquisition::normalized(scheme.b(), *g).expect("unit direction")))
        .collect()
}

fn noisy_six(dt: &DiffusionTensor, scheme: &GradientScheme, sigma: f64, noise_seed: u64) -> [f64; 6] {
    let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
    let clean = clean_signals(dt, scheme);
    std::array::from_fn(|k| add_rician_noise(clean[k], sigma, &mut rng))
}

fn check_arity(schemes: &[GradientScheme]) -> Result<(), DatagenError> {
    for s in schemes {
        if s.len() != 6 {
            return Err(DatagenError::SchemeArity { name: s.name().to_string(), got: s.len() });
        }
    }
    Ok(())
}

/// Rotates the ground truth so its principal axis lies on AP (+y) and its
/// secondary on SI (+z), then regenerates every scheme's signals with
/// noise from `rng`. FA is unchanged.
pub fn restrict_orientation(
    record: &VoxelRecord,
    schemes: &[GradientScheme],
    snr: f64,
    rng: &mut impl Rng,
) -> Result<VoxelRecord, DatagenError> {
    check_arity(schemes)?;
    let dt = reorient_dt(&record.dt_gt, &AP_AXIS, &SI_AXIS)?;
    let noise_seed: u64 = rng.random();
    Ok(VoxelRecord {
        subject_id: record.subject_id,
        dt_gt: dt,
        fa_gt: record.fa_gt,
        signals: schemes.iter().map(|s| noisy_six(&dt, s, 1.0 / snr, noise_seed)).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeEntry {
    pub name: String,
    pub b: f64,
    pub dirs: Vec<[f64; 3]>,
}

impl SchemeEntry {
    pub fn from_scheme(s: &GradientScheme) -> Self {
        Self { name: s.name().to_string(), b: s.b(), dirs: s.dirs().to_vec() }
    }

    pub fn to_scheme(&self) -> Result<GradientScheme, SchemeError> {
        GradientScheme::new(self.name.clone(), self.b, self.dirs.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub version: u32,
    pub schemes: Vec<SchemeEntry>,
    pub n_subjects: usize,
    pub n_voxels: usize,
    pub snr: f64,
    pub seed: u64,
    pub orientation: OrientationMode,
    pub ground_truth: GroundTruth,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub header: DatasetHeader,
    pub schemes: Vec<GradientScheme>,
    pub records: Vec<VoxelRecord>,
}

impl Dataset {
    pub fn scheme_index(&self, name: &str) -> Result<usize, DatagenError> {
        self.schemes
            .iter()
            .position(|s| s.name() == name)
            .ok_or_else(|| DatagenError::UnknownScheme(name.to_string()))
    }

    pub fn fa_gt(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.fa_gt).collect()
    }

    pub fn subject_ids(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.subject_id).collect()
    }

    /// Keeps the first `fraction` of each subject's voxels (at least one).
    pub fn starved(&self, fraction: f64) -> Dataset {
        let keep = ((self.header.n_voxels as f64 * fraction).round() as usize).clamp(1, self.header.n_voxels.max(1));
        let mut out = self.clone();
        out.records = self
            .records
            .chunks(self.header.n_voxels.max(1))
            .flat_map(|c| c.iter().take(keep).cloned())
            .collect();
        out.header.n_voxels = keep;
        out
    }

    /// Network input matrix for one scheme: the six signals for an FCN,
    /// or the ADC profile of the exact six-direction tensor fit sampled on
    /// `grid` for an S-CNN.
    pub fn inputs(&self, scheme: &str, kind: ModelKind, grid: Option<&SphGrid>) -> Result<Array2<f64>, DatagenError> {
        let idx = self.scheme_index(scheme)?;
        let n = self.records.len();
        match kind {
            ModelKind::Fcn => Ok(Array2::from_shape_fn((n, 6), |(i, k)| self.records[i].signals[idx][k])),
            ModelKind::Scnn => {
                let grid = grid.ok_or_else(|| DatagenError::InvalidConfig("S-CNN inputs need a grid".into()))?;
                let s = &self.schemes[idx];
                let rows: Vec<Vec<f64>> = self
                    .records
                    .par_iter()
                    .map(|r| {
                        let fit = fit_dt_exact(&r.signals[idx], s.dirs(), s.b())?;
                        Ok(adc_input(&fit.tensor, grid))
                    })
                    .collect::<Result<_, TensorError>>()?;
                let g = grid.len();
                Ok(Array2::from_shape_vec((n, g), rows.concat()).expect("row widths"))
            }
        }
    }
}

/// Restriction draws from its own per-voxel stream so the FA sequence of a
/// subject does not depend on the orientation mode.
const RESTRICT_STREAM: u64 = 0x0a70_0a70_0a70_0a70;

fn subject_records(
    cfg: &PhantomConfig,
    subject: usize,
    schemes: &[GradientScheme],
    dense: Option<&(GradientScheme, Vec<Vec<usize>>)>,
) -> Result<Vec<VoxelRecord>, DatagenError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(subject as u64));
    let sigma = cfg.sigma();
    let uniform = PhantomConfig { orientation: OrientationMode::Uniform, ..cfg.clone() };
    let mut out = Vec::with_capacity(cfg.n_voxels);
    for _ in 0..cfg.n_voxels {
        let truth = sample_ground_truth_dt(&mut rng, &uniform);
        let noise_seed: u64 = rng.random();
        let mut rec = match dense {
            None => VoxelRecord {
                subject_id: subject,
                dt_gt: truth,
                fa_gt: tensor_fa(&truth)?,
                signals: schemes.iter().map(|s| noisy_six(&truth, s, sigma, noise_seed)).collect(),
            },
            Some((dense, picks)) => {
                let mut nrng = ChaCha8Rng::seed_from_u64(noise_seed);
                let noisy: Vec<f64> =
                    clean_signals(&truth, dense).into_iter().map(|s| add_rician_noise(s, sigma, &mut nrng)).collect();
                let fitted = fit_dt_lls(&noisy, dense, 1.0)?.tensor;
                VoxelRecord {
                    subject_id: subject,
                    dt_gt: fitted,
                    fa_gt: tensor_fa(&fitted)?,
                    signals: picks.iter().map(|idx| std::array::from_fn(|k| noisy[idx[k]])).collect(),
                }
            }
        };
        if cfg.orientation == OrientationMode::ApRestricted {
            let mut rrng = ChaCha8Rng::seed_from_u64(noise_seed ^ RESTRICT_STREAM);
            rec = restrict_orientation(&rec, schemes, cfg.snr, &mut rrng)?;
        }
        out.push(rec);
    }
    Ok(out)
}

/// Generates `n_subjects × n_voxels` records. Subject `j` draws from its
/// own generator seeded with `seed + j`; subjects are produced in
/// parallel and concatenated in order.
pub fn build_dataset(cfg: &PhantomConfig, schemes: &[GradientScheme]) -> Result<Dataset, DatagenError> {
    cfg.validate()?;
    check_arity(schemes)?;
    let dense = match cfg.ground_truth {
        GroundTruth::Analytic => None,
        GroundTruth::DenseFit { dense_dirs } => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_0090);
            let opt = OptimizerConfig { restarts: 1, iters: 500, b: schemes.first().map_or(1000.0, |s| s.b()), ..Default::default() };
            let dense = optimize_jones(dense_dirs, &mut rng, &opt)?;
            let picks: Vec<Vec<usize>> = schemes.iter().map(|s| match_subset(&dense, s)).collect();
            Some((dense, picks))
        }
    };
    // with a dense ground truth the six-direction signals come from the
    // matched dense directions, so those are what the header records
    let used: Vec<GradientScheme> = match &dense {
        None => schemes.to_vec(),
        Some((d, picks)) => schemes.iter().zip(picks).map(|(s, idx)| d.select(s.name(), idx)).collect(),
    };
    let parts: Vec<Result<Vec<VoxelRecord>, DatagenError>> = (0..cfg.n_subjects)
        .into_par_iter()
        .map(|j| subject_records(cfg, j, &used, dense.as_ref()))
        .collect();
    let mut records = Vec::with_capacity(cfg.n_subjects * cfg.n_voxels);
    for p in parts {
        records.extend(p?);
    }
    Ok(Dataset {
        header: DatasetHeader {
            version: DATASET_VERSION,
            schemes: used.iter().map(SchemeEntry::from_scheme).collect(),
            n_subjects: cfg.n_subjects,
            n_voxels: cfg.n_voxels,
            snr: cfg.snr,
            seed: cfg.seed,
            orientation: cfg.orientation,
            ground_truth: cfg.ground_truth,
        },
        schemes: used,
        records,
    })
}

fn record_line(r: &VoxelRecord, out: &mut String) {
    write!(out, "{}", r.subject_id).unwrap();
    for v in r.dt_gt.components() {
        write!(out, ",{v:.16e}").unwrap();
    }
    write!(out, ",{:.16e}", r.fa_gt).unwrap();
    for sig in &r.signals {
        for v in sig {
            write!(out, ",{v:.16e}").unwrap();
        }
    }
    out.push('\n');
}

pub fn write_dataset_to(ds: &Dataset, w: &mut impl Write) -> Result<(), DatagenError> {
    let header = serde_json::to_string(&ds.header).expect("header serializes");
    writeln!(w, "{header}")?;
    let mut buf = String::new();
    for chunk in ds.records.chunks(4096) {
        buf.clear();
        for r in chunk {
            record_line(r, &mut buf);
        }
        w.write_all(buf.as_bytes())?;
    }
    Ok(())
}

pub fn write_dataset(path: &Path, ds: &Dataset) -> Result<(), DatagenError> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_dataset_to(ds, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_dataset_from(r: impl BufRead) -> Result<Dataset, DatagenError> {
    let mut lines = r.lines();
    let first = lines.next().ok_or(DatagenError::Parse { line: 1, msg: "empty file".into() })??;
    let header: DatasetHeader =
        serde_json::from_str(&first).map_err(|e| DatagenError::Parse { line: 1, msg: e.to_string() })?;
    if header.version != DATASET_VERSION {
        return Err(DatagenError::Parse { line: 1, msg: format!("unsupported version {}", header.version) });
    }
    let schemes: Vec<GradientScheme> = header.schemes.iter().map(|e| e.to_scheme()).collect::<Result<_, _>>()?;
    check_arity(&schemes)?;
    let width = 8 + 6 * schemes.len();
    let mut records = Vec::with_capacity(header.n_subjects * header.n_voxels);
    for (i, line) in lines.enumerate() {
        let line = line?;
        let lineno = i + 2;
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| DatagenError::Parse { line: lineno, msg };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != width {
            return Err(err(format!("expected {width} fields, got {}", fields.len())));
        }
        let subject_id: usize = fields[0].parse().map_err(|e| err(format!("subject id: {e}")))?;
        let vals: Vec<f64> = fields[1..]
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| err(format!("{f:?}: {e}"))))
            .collect::<Result<_, _>>()?;
        let dt_gt = DiffusionTensor::from_components(std::array::from_fn(|k| vals[k]));
        let signals = (0..schemes.len()).map(|s| std::array::from_fn(|k| vals[7 + 6 * s + k])).collect();
        records.push(VoxelRecord { subject_id, dt_gt, fa_gt: vals[6], signals });
    }
    if records.len() != header.n_subjects * header.n_voxels {
        return Err(DatagenError::Parse {
            line: records.len() + 1,
            msg: format!("header promises {} records", header.n_subjects * header.n_voxels),
        });
    }
    Ok(Dataset { header, schemes, records })
}

pub fn read_dataset(path: &Path) -> Result<Dataset, DatagenError> {
    read_dataset_from(BufReader::new(std::fs::File::open(path)?))
}
