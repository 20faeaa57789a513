//! Flat `key = value` configuration with `[section]` headers and `#`
//! comments. Keys are unique across sections, so a `--key value` override
//! needs no section prefix (`--section.key value` is accepted too).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::CliError;
use crate::datagen::{GroundTruth, OrientationMode, PhantomConfig};
use crate::nn::{Activation, ModelSpec, TrainConfig};

/// Sections the parser skips; manifests carry them alongside the config.
const PASSIVE_SECTIONS: [&str; 2] = ["run", "artifacts"];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub out_dir: PathBuf,
    /// Scheme files; generated from `scheme_seed` when unset.
    pub skare_scheme: Option<PathBuf>,
    pub jones_scheme: Option<PathBuf>,
    /// Dataset files; generated from `[data]` when unset.
    pub train_data: Option<PathBuf>,
    pub test_data: Option<PathBuf>,
    pub write_data: bool,

    pub scheme_seed: u64,
    pub scheme_restarts: usize,
    pub scheme_iters: usize,
    pub b_value: f64,

    pub n_train_voxels: usize,
    pub n_test_voxels: usize,
    pub n_test_subjects: usize,
    pub data_seed: u64,
    /// Template for both splits; voxel counts, subject counts, seeds,
    /// orientation and ground truth are filled per split.
    pub phantom: PhantomConfig,
    pub dense_fit: bool,
    pub dense_dirs: usize,

    pub train: TrainConfig,
    pub model_seed: u64,
    pub fcn: ModelSpec,
    pub scnn: ModelSpec,

    pub train_scheme: String,
    pub test_schemes: Vec<String>,
    pub orientation_mode: OrientationMode,
    pub starve_fraction: f64,
    pub fa_threshold: f64,

    pub equiv_inputs: usize,
    pub equiv_rotations: usize,
    pub equiv_seed: u64,
}

/// Test subjects are seeded from `data_seed + TEST_SEED_OFFSET + j`, far
/// from the training subjects at `data_seed + j`.
pub const TEST_SEED_OFFSET: u64 = 1_000_000;

impl ExperimentConfig {
    pub fn experiment1() -> Self {
        Self {
            out_dir: PathBuf::from("out/exp1"),
            skare_scheme: None,
            jones_scheme: None,
            train_data: None,
            test_data: None,
            write_data: false,
            scheme_seed: 1,
            scheme_restarts: 50,
            scheme_iters: 2000,
            b_value: 1000.0,
            n_train_voxels: 100_000,
            n_test_voxels: 20_000,
            n_test_subjects: 12,
            data_seed: 1,
            phantom: PhantomConfig::default(),
            dense_fit: false,
            dense_dirs: 90,
            train: TrainConfig::default(),
            model_seed: 0,
            fcn: ModelSpec::fcn(),
            scnn: ModelSpec::scnn(),
            train_scheme: "skare".into(),
            test_schemes: vec!["skare".into(), "jones".into()],
            orientation_mode: OrientationMode::Uniform,
            starve_fraction: 0.1,
            fa_threshold: 0.6,
            equiv_inputs: 50,
            equiv_rotations: 100,
            equiv_seed: 0,
        }
    }

    pub fn experiment2() -> Self {
        Self {
            out_dir: PathBuf::from("out/exp2"),
            test_schemes: vec!["skare".into()],
            orientation_mode: OrientationMode::ApRestricted,
            ..Self::experiment1()
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if !(self.starve_fraction > 0.0 && self.starve_fraction <= 1.0) {
            return bad(format!("starve_fraction must be in (0, 1], got {}", self.starve_fraction));
        }
        for name in std::iter::once(&self.train_scheme).chain(&self.test_schemes) {
            if name != "skare" && name != "jones" {
                return bad(format!("unknown scheme {name:?}; expected skare or jones"));
            }
        }
        if self.test_schemes.is_empty() {
            return bad("test_schemes is empty".into());
        }
        if self.n_test_subjects < 2 {
            return bad("paired tests need n_test_subjects ≥ 2".into());
        }
        for p in [&self.skare_scheme, &self.jones_scheme, &self.train_data, &self.test_data].into_iter().flatten() {
            if !p.exists() {
                return bad(format!("{} does not exist", p.display()));
            }
        }
        self.train.validate()?;
        self.fcn.validate()?;
        self.scnn.validate()?;
        Ok(())
    }

    pub fn from_file(path: &Path, base: Self) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        base.with_text(&text)
    }

    /// Applies every assignment in `text` on top of `self`.
    pub fn with_text(mut self, text: &str) -> Result<Self, CliError> {
        let mut section = String::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            if PASSIVE_SECTIONS.contains(&section.as_str()) {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", n + 1)))?;
            let key = k.trim();
            if !section.is_empty() && section_of(key) != Some(section.as_str()) {
                return Err(CliError::Config(format!("line {}: key {key:?} does not belong in [{section}]", n + 1)));
            }
            self.set(key, v.trim()).map_err(|e| CliError::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(self)
    }

    /// `--key value` pairs, in order.
    pub fn with_overrides(mut self, args: &[String]) -> Result<Self, CliError> {
        let mut it = args.iter();
        while let Some(flag) = it.next() {
            let key = flag
                .strip_prefix("--")
                .ok_or_else(|| CliError::Config(format!("expected --key, got {flag:?}")))?;
            let (key, inline) = match key.split_once('=') {
                Some((k, v)) => (k, Some(v.to_string())),
                None => (key, None),
            };
            let value = match inline {
                Some(v) => v,
                None => it.next().ok_or_else(|| CliError::Config(format!("--{key} needs a value")))?.clone(),
            };
            let key = key.rsplit('.').next().unwrap();
            self.set(key, &value)?;
        }
        Ok(self)
    }

    fn set(&mut self, key: &str, v: &str) -> Result<(), CliError> {
        let p = &mut self.phantom;
        match key {
            "out_dir" => self.out_dir = PathBuf::from(v),
            "skare_scheme" => self.skare_scheme = opt_path(v),
            "jones_scheme" => self.jones_scheme = opt_path(v),
            "train_data" => self.train_data = opt_path(v),
            "test_data" => self.test_data = opt_path(v),
            "write_data" => self.write_data = parse(key, v)?,
            "scheme_seed" => self.scheme_seed = parse(key, v)?,
            "scheme_restarts" => self.scheme_restarts = parse(key, v)?,
            "scheme_iters" => self.scheme_iters = parse(key, v)?,
            "b_value" => self.b_value = parse(key, v)?,
            "n_train_voxels" => self.n_train_voxels = parse(key, v)?,
            "n_test_voxels" => self.n_test_voxels = parse(key, v)?,
            "n_test_subjects" => self.n_test_subjects = parse(key, v)?,
            "data_seed" => self.data_seed = parse(key, v)?,
            "snr" => p.snr = parse(key, v)?,
            "md_mean" => p.md_mean = parse(key, v)?,
            "md_sd" => p.md_sd = parse(key, v)?,
            "fa_min" => p.fa_min = parse(key, v)?,
            "fa_max" => p.fa_max = parse(key, v)?,
            "ground_truth" => {
                self.dense_fit = match v {
                    "analytic" => false,
                    "dense_fit" => true,
                    _ => return Err(CliError::Config(format!("ground_truth: expected analytic or dense_fit, got {v:?}"))),
                }
            }
            "dense_dirs" => self.dense_dirs = parse(key, v)?,
            "epochs" => self.train.epochs = parse(key, v)?,
            "learning_rate" => self.train.learning_rate = parse(key, v)?,
            "batch_size" => self.train.batch_size = parse(key, v)?,
            "train_seed" => self.train.seed = parse(key, v)?,
            "model_seed" => self.model_seed = parse(key, v)?,
            "fcn_layers" => self.fcn.fcn_layers = parse_list(key, v)?,
            "scnn_channels" => self.scnn.scnn_channels = parse_list(key, v)?,
            "scnn_bandlimit" => self.scnn.scnn_bandlimit = parse(key, v)?,
            "scnn_act_bandlimit" => self.scnn.scnn_act_bandlimit = parse(key, v)?,
            "readout_hidden" => self.scnn.readout_hidden = parse(key, v)?,
            "activation" => {
                let a = match v {
                    "relu" => Activation::Relu,
                    "identity" => Activation::Identity,
                    _ => return Err(CliError::Config(format!("activation: expected relu or identity, got {v:?}"))),
                };
                self.fcn.activation = a;
                self.scnn.activation = a;
            }
            "train_scheme" => self.train_scheme = v.to_string(),
            "test_schemes" => self.test_schemes = v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect(),
            "orientation_mode" => {
                self.orientation_mode = match v {
                    "uniform" => OrientationMode::Uniform,
                    "ap_restricted" => OrientationMode::ApRestricted,
                    _ => return Err(CliError::Config(format!("orientation_mode: expected uniform or ap_restricted, got {v:?}"))),
                }
            }
            "starve_fraction" => self.starve_fraction = parse(key, v)?,
            "fa_threshold" => self.fa_threshold = parse(key, v)?,
            "equiv_inputs" => self.equiv_inputs = parse(key, v)?,
            "equiv_rotations" => self.equiv_rotations = parse(key, v)?,
            "equiv_seed" => self.equiv_seed = parse(key, v)?,
            _ => return Err(CliError::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Every key in file order, suitable for [`Self::with_text`].
    pub fn to_text(&self) -> String {
        let p = &self.phantom;
        let opt = |o: &Option<PathBuf>| o.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let list = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let gt = if self.dense_fit { "dense_fit" } else { "analytic" };
        let sections: Vec<(&str, Vec<(&str, String)>)> = vec![
            (
                "paths",
                vec![
                    ("out_dir", self.out_dir.display().to_string()),
                    ("skare_scheme", opt(&self.skare_scheme)),
                    ("jones_scheme", opt(&self.jones_scheme)),
                    ("train_data", opt(&self.train_data)),
                    ("test_data", opt(&self.test_data)),
                    ("write_data", self.write_data.to_string()),
                ],
            ),
            (
                "schemes",
                vec![
                    ("scheme_seed", self.scheme_seed.to_string()),
                    ("scheme_restarts", self.scheme_restarts.to_string()),
                    ("scheme_iters", self.scheme_iters.to_string()),
                    ("b_value", self.b_value.to_string()),
                ],
            ),
            (
                "data",
                vec![
                    ("n_train_voxels", self.n_train_voxels.to_string()),
                    ("n_test_voxels", self.n_test_voxels.to_string()),
                    ("n_test_subjects", self.n_test_subjects.to_string()),
                    ("data_seed", self.data_seed.to_string()),
                    ("snr", p.snr.to_string()),
                    ("md_mean", p.md_mean.to_string()),
                    ("md_sd", p.md_sd.to_string()),
                    ("fa_min", p.fa_min.to_string()),
                    ("fa_max", p.fa_max.to_string()),
                    ("ground_truth", gt.to_string()),
                    ("dense_dirs", self.dense_dirs.to_string()),
                ],
            ),
            (
                "train",
                vec![
                    ("epochs", self.train.epochs.to_string()),
                    ("learning_rate", self.train.learning_rate.to_string()),
                    ("batch_size", self.train.batch_size.to_string()),
                    ("train_seed", self.train.seed.to_string()),
                ],
            ),
            (
                "model",
                vec![
                    ("model_seed", self.model_seed.to_string()),
                    ("fcn_layers", list(&self.fcn.fcn_layers)),
                    ("scnn_channels", list(&self.scnn.scnn_channels)),
                    ("scnn_bandlimit", self.scnn.scnn_bandlimit.to_string()),
                    ("scnn_act_bandlimit", self.scnn.scnn_act_bandlimit.to_string()),
                    ("readout_hidden", self.scnn.readout_hidden.to_string()),
                    ("activation", self.scnn.activation.name().to_string()),
                ],
            ),
            (
                "experiment",
                vec![
                    ("train_scheme", self.train_scheme.clone()),
                    ("test_schemes", self.test_schemes.join(",")),
                    ("orientation_mode", self.orientation_mode.name().to_string()),
                    ("starve_fraction", self.starve_fraction.to_string()),
                    ("fa_threshold", self.fa_threshold.to_string()),
                    ("equiv_inputs", self.equiv_inputs.to_string()),
                    ("equiv_rotations", self.equiv_rotations.to_string()),
                    ("equiv_seed", self.equiv_seed.to_string()),
                ],
            ),
        ];
        let mut s = String::new();
        for (name, kv) in sections {
            writeln!(s, "[{name}]").unwrap();
            for (k, v) in kv {
                writeln!(s, "{k} = {v}").unwrap();
            }
            s.push('\n');
        }
        s
    }

    /// Phantom settings for one split.
    pub fn split_phantom(&self, split: Split) -> PhantomConfig {
        let ground_truth =
            if self.dense_fit { GroundTruth::DenseFit { dense_dirs: self.dense_dirs } } else { GroundTruth::Analytic };
        match split {
            Split::Train => PhantomConfig {
                n_voxels: self.n_train_voxels,
                n_subjects: 1,
                seed: self.data_seed,
                orientation: self.orientation_mode,
                ground_truth,
                ..self.phantom.clone()
            },
            Split::Test => PhantomConfig {
                n_voxels: self.n_test_voxels,
                n_subjects: self.n_test_subjects,
                seed: self.data_seed.wrapping_add(TEST_SEED_OFFSET),
                orientation: OrientationMode::Uniform,
                ground_truth,
                ..self.phantom.clone()
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl FromStr for Split {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            _ => Err(CliError::Config(format!("split: expected train or test, got {s:?}"))),
        }
    }
}

fn section_of(key: &str) -> Option<&'static str> {
    Some(match key {
        "out_dir" | "skare_scheme" | "jones_scheme" | "train_data" | "test_data" | "write_data" => "paths",
        "scheme_seed" | "scheme_restarts" | "scheme_iters" | "b_value" => "schemes",
        "n_train_voxels" | "n_test_voxels" | "n_test_subjects" | "data_seed" | "snr" | "md_mean" | "md_sd"
        | "fa_min" | "fa_max" | "ground_truth" | "dense_dirs" => "data",
        "epochs" | "learning_rate" | "batch_size" | "train_seed" => "train",
        "model_seed" | "fcn_layers" | "scnn_channels" | "scnn_bandlimit" | "scnn_act_bandlimit" | "readout_hidden"
        | "activation" => "model",
        "train_scheme" | "test_schemes" | "orientation_mode" | "starve_fraction" | "fa_threshold" | "equiv_inputs"
        | "equiv_rotations" | "equiv_seed" => "experiment",
        _ => return None,
    })
}

fn opt_path(v: &str) -> Option<PathBuf> {
    (!v.is_empty()).then(|| PathBuf::from(v))
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    v.parse().map_err(|e| CliError::Config(format!("{key}: {e}")))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<usize>, CliError> {
    v.split(',').map(|x| parse(key, x.trim())).collect()
}
