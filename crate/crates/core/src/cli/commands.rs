//! Single pipeline steps, one per subcommand.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::experiments::{dtfit_predictions, evaluate, model_predictions, resolve_schemes, train_model};
use super::{CliError, ExperimentConfig, Split};
use crate::datagen::{build_dataset, clean_signals, read_dataset, sample_ground_truth_dt, write_dataset, PhantomConfig};
use crate::eval::{
    adc_signal, binned_csv, parse_predictions, predictions_csv, seeded_rotations, sphere_tile_map, subject_binned_csv,
    tile_map_csv, tile_map_svg, EquivarianceReport,
};
use crate::nn::{read_model, write_loss_trace, write_model, ModelKind};
use crate::schemes::{optimize_jones, optimize_skare, read_scheme, write_scheme, GradientScheme, OptimizerConfig};
use crate::sphere::rotate_signal;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    Jones,
    Skare,
}

impl FromStr for SchemeKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "jones" => Ok(SchemeKind::Jones),
            "skare" => Ok(SchemeKind::Skare),
            _ => Err(CliError::Config(format!("scheme kind: expected jones or skare, got {s:?}"))),
        }
    }
}

pub fn gen_scheme(kind: SchemeKind, n: usize, seed: u64, opt: &OptimizerConfig, out: &Path) -> Result<GradientScheme, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scheme = match kind {
        SchemeKind::Jones => optimize_jones(n, &mut rng, opt)?,
        SchemeKind::Skare => optimize_skare(n, &mut rng, opt)?,
    };
    write_scheme(out, &scheme)?;
    Ok(scheme)
}

/// One split of the configured phantom with both six-direction schemes.
pub fn gen_data(cfg: &ExperimentConfig, split: Split, out: &Path) -> Result<usize, CliError> {
    let schemes = resolve_schemes(cfg)?;
    let ds = build_dataset(&cfg.split_phantom(split), &schemes)?;
    write_dataset(out, &ds)?;
    Ok(ds.records.len())
}

/// FA of the direct tensor fit, as a prediction file.
pub fn fit_dataset(data: &Path, scheme: &str, out: &Path) -> Result<usize, CliError> {
    let ds = read_dataset(data)?;
    let pred = dtfit_predictions(&ds, scheme)?;
    std::fs::write(out, predictions_csv(&pred))?;
    Ok(pred.len())
}

/// Trains on every voxel of `data`; the loss trace goes next to the model
/// as `<out>.loss.csv`.
pub fn train_on_dataset(
    kind: ModelKind,
    data: &Path,
    scheme: &str,
    cfg: &ExperimentConfig,
    out: &Path,
) -> Result<Vec<f64>, CliError> {
    let ds = read_dataset(data)?;
    let (spec, seed) = match kind {
        ModelKind::Fcn => (&cfg.fcn, cfg.model_seed),
        ModelKind::Scnn => (&cfg.scnn, cfg.model_seed.wrapping_add(1)),
    };
    let (model, trace) = train_model(spec, seed, &ds, scheme, &cfg.train)?;
    write_model(out, &model)?;
    let mut loss = out.as_os_str().to_owned();
    loss.push(".loss.csv");
    write_loss_trace(Path::new(&loss), &trace)?;
    Ok(trace)
}

pub fn predict(model: &Path, data: &Path, scheme: &str, out: &Path) -> Result<usize, CliError> {
    let model = read_model(model)?;
    let ds = read_dataset(data)?;
    let pred = model_predictions(&model, &ds, scheme)?;
    std::fs::write(out, predictions_csv(&pred))?;
    Ok(pred.len())
}

/// Writes `<prefix>_rmse.csv`, `<prefix>_subjects.csv`, `<prefix>_tiles.csv`
/// and `<prefix>_tiles.svg`.
pub fn eval_predictions(pred: &Path, data: &Path, prefix: &Path, fa_threshold: f64) -> Result<Vec<PathBuf>, CliError> {
    let pred = parse_predictions(&std::fs::read_to_string(pred)?)?;
    let ds = read_dataset(data)?;
    let ev = evaluate("pred", "", &pred, &ds)?;
    let dirs: Vec<_> = ds.records.iter().map(|r| r.principal_dir()).collect();
    let map = sphere_tile_map(&pred, &ds.fa_gt(), &dirs, fa_threshold)?;
    let path = |suffix: &str| {
        let mut p = prefix.as_os_str().to_owned();
        p.push(suffix);
        PathBuf::from(p)
    };
    let outputs = [
        (path("_rmse.csv"), binned_csv(&ev.overall)),
        (path("_subjects.csv"), subject_binned_csv(&ev.per_subject)),
        (path("_tiles.csv"), tile_map_csv(&map)),
        (path("_tiles.svg"), tile_map_svg(&map, "mean |FA error| by principal direction")),
    ];
    for (p, text) in &outputs {
        std::fs::write(p, text)?;
    }
    Ok(outputs.into_iter().map(|(p, _)| p).collect())
}

/// Output change under random rotations of `inputs` random phantom
/// tensors. S-CNNs rotate the sampled input signal; FCNs have no
/// spherical input, so the tensor is rotated and the `scheme` signals
/// regenerated. Writes `input,rotation,abs_dev`.
pub fn equiv_test(
    model: &Path,
    rotations: usize,
    inputs: usize,
    seed: u64,
    scheme: Option<&Path>,
    out: &Path,
) -> Result<EquivarianceReport, CliError> {
    let model = read_model(model)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tensors: Vec<_> = (0..inputs).map(|_| sample_ground_truth_dt(&mut rng, &PhantomConfig::default())).collect();
    let rots = seeded_rotations(rotations, seed.wrapping_add(1));
    let mut devs = Vec::with_capacity(inputs * rotations);
    match model.kind() {
        ModelKind::Scnn => {
            for dt in &tensors {
                let x = adc_signal(&model, dt)?;
                let base = model.forward_signal(&x)?;
                for r in &rots {
                    devs.push((model.forward_signal(&rotate_signal(&x, r))? - base).abs());
                }
            }
        }
        ModelKind::Fcn => {
            let scheme = scheme.ok_or_else(|| CliError::Config("an FCN needs --scheme FILE".into()))?;
            let scheme = read_scheme(scheme)?;
            for dt in &tensors {
                let base = model.forward(&clean_signals(dt, &scheme))?;
                for r in &rots {
                    devs.push((model.forward(&clean_signals(&dt.rotated(r.matrix()), &scheme))? - base).abs());
                }
            }
        }
    }
    let mut s = String::from("input,rotation,abs_dev\n");
    for (k, d) in devs.iter().enumerate() {
        writeln!(s, "{},{},{d:e}", k / rotations.max(1), k % rotations.max(1)).unwrap();
    }
    std::fs::write(out, s)?;
    let max = devs.iter().copied().fold(0.0, f64::max);
    let mean = if devs.is_empty() { 0.0 } else { devs.iter().sum::<f64>() / devs.len() as f64 };
    Ok(EquivarianceReport { max, mean, evaluations: devs.len() })
}
