//! The two experiments and the pipeline steps they share.

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{CliError, ExperimentConfig, RunOutputs, Split};
use crate::datagen::{build_dataset, read_dataset, write_dataset_to, Dataset};
use crate::eval::{
    binned_csv, equivariance_error, mean_subject_rmse, per_bin_ttests, rmse_binned,
    rmse_binned_by_subject, seeded_rotations, sphere_tile_map, subject_binned_csv, tile_map_csv, tile_map_svg,
    ttest_csv, BinnedRmse, EquivarianceReport, TTestRow, TileMap, N_FA_BINS,
};
use crate::nn::{loss_trace_csv, model_to_bytes, predict_batch, train, ModelSpec, NetworkModel, TrainConfig};
use crate::schemes::{optimize_jones, optimize_skare, read_scheme, scheme_to_string, GradientScheme, OptimizerConfig};
use crate::sphere::SphSignal;
use crate::tensor::{fit_dt_exact, tensor_fa};

#[derive(Debug, Clone, PartialEq)]
pub struct ModelEval {
    pub model: String,
    pub scheme: String,
    pub overall: BinnedRmse,
    pub per_subject: Vec<(usize, BinnedRmse)>,
}

impl ModelEval {
    /// Per-bin mean of the subjects' RMSE.
    pub fn subject_mean(&self) -> [f64; N_FA_BINS] {
        mean_subject_rmse(&self.per_subject)
    }

    fn label(&self) -> String {
        format!("{}@{}", self.model, self.scheme)
    }
}

fn find<'a>(evals: &'a [ModelEval], model: &str, scheme: &str) -> Option<&'a ModelEval> {
    evals.iter().find(|e| e.model == model && e.scheme == scheme)
}

/// The Skare-style and Jones-style six-direction schemes, loaded from the
/// configured files or designed from `scheme_seed` and `scheme_seed + 1`.
pub fn resolve_schemes(cfg: &ExperimentConfig) -> Result<Vec<GradientScheme>, CliError> {
    let opt = OptimizerConfig {
        restarts: cfg.scheme_restarts,
        iters: cfg.scheme_iters,
        b: cfg.b_value,
        ..OptimizerConfig::default()
    };
    let skare = match &cfg.skare_scheme {
        Some(p) => read_scheme(p)?,
        None => optimize_skare(6, &mut ChaCha8Rng::seed_from_u64(cfg.scheme_seed), &opt)?,
    };
    let jones = match &cfg.jones_scheme {
        Some(p) => read_scheme(p)?,
        None => optimize_jones(6, &mut ChaCha8Rng::seed_from_u64(cfg.scheme_seed.wrapping_add(1)), &opt)?,
    };
    Ok(vec![skare.with_name("skare"), jones.with_name("jones")])
}

fn dataset(cfg: &ExperimentConfig, split: Split, schemes: &[GradientScheme]) -> Result<Dataset, CliError> {
    let path = match split {
        Split::Train => &cfg.train_data,
        Split::Test => &cfg.test_data,
    };
    match path {
        Some(p) => {
            let ds = read_dataset(p)?;
            for name in std::iter::once(&cfg.train_scheme).chain(&cfg.test_schemes) {
                ds.scheme_index(name)?;
            }
            Ok(ds)
        }
        None => Ok(build_dataset(&cfg.split_phantom(split), schemes)?),
    }
}

pub(super) fn train_model(
    spec: &ModelSpec,
    seed: u64,
    ds: &Dataset,
    scheme: &str,
    tc: &TrainConfig,
) -> Result<(NetworkModel, Vec<f64>), CliError> {
    let model = NetworkModel::new(spec.clone(), seed)?;
    let x = ds.inputs(scheme, spec.kind, model.grid().map(|g| g.as_ref()))?;
    Ok(train(model, x.view(), &ds.fa_gt(), tc)?)
}

pub(super) fn model_predictions(model: &NetworkModel, ds: &Dataset, scheme: &str) -> Result<Vec<f64>, CliError> {
    let x = ds.inputs(scheme, model.kind(), model.grid().map(|g| g.as_ref()))?;
    Ok(predict_batch(model, x.view())?)
}

/// FA of the exact six-direction tensor fit, clamped to `[0, 1]`.
pub fn dtfit_predictions(ds: &Dataset, scheme: &str) -> Result<Vec<f64>, CliError> {
    let idx = ds.scheme_index(scheme)?;
    let s = &ds.schemes[idx];
    ds.records
        .par_iter()
        .map(|r| {
            let fit = fit_dt_exact(&r.signals[idx], s.dirs(), s.b())?;
            Ok(tensor_fa(&fit.tensor)?.clamp(0.0, 1.0))
        })
        .collect()
}

/// Overall and per-subject binned RMSE of `pred` against the dataset.
pub fn evaluate(model: &str, scheme: &str, pred: &[f64], ds: &Dataset) -> Result<ModelEval, CliError> {
    let gt = ds.fa_gt();
    Ok(ModelEval {
        model: model.to_string(),
        scheme: scheme.to_string(),
        overall: rmse_binned(pred, &gt)?,
        per_subject: rmse_binned_by_subject(pred, &gt, &ds.subject_ids())?,
    })
}

fn write_eval(out: &mut RunOutputs, ev: &ModelEval) -> Result<(), CliError> {
    out.write(&format!("rmse_{}_{}.csv", ev.model, ev.scheme), binned_csv(&ev.overall).as_bytes())?;
    out.write(&format!("rmse_subjects_{}_{}.csv", ev.model, ev.scheme), subject_binned_csv(&ev.per_subject).as_bytes())?;
    Ok(())
}

fn ttest_rows(a: &ModelEval, b: &ModelEval) -> Result<Vec<TTestRow>, CliError> {
    let tests = per_bin_ttests(&a.per_subject, &b.per_subject)?;
    Ok(tests
        .iter()
        .enumerate()
        .map(|(bin, t)| TTestRow { model_a: a.label(), model_b: b.label(), bin, test: *t })
        .collect())
}

/// Deviation of a trained S-CNN under rotation of its first
/// `equiv_inputs` test inputs.
fn trained_equivariance(
    model: &NetworkModel,
    test: &Dataset,
    scheme: &str,
    cfg: &ExperimentConfig,
) -> Result<EquivarianceReport, CliError> {
    let grid = model.grid().cloned().ok_or_else(|| CliError::Config("equivariance needs an S-CNN".into()))?;
    let head = Dataset {
        header: test.header.clone(),
        schemes: test.schemes.clone(),
        records: test.records.iter().take(cfg.equiv_inputs).cloned().collect(),
    };
    let x = head.inputs(scheme, model.kind(), Some(&grid))?;
    let inputs = x
        .rows()
        .into_iter()
        .map(|r| SphSignal::new(grid.clone(), r.to_vec()).map_err(|e| CliError::Nn(e.into())))
        .collect::<Result<Vec<_>, _>>()?;
    let rotations = seeded_rotations(cfg.equiv_rotations, cfg.equiv_seed);
    Ok(equivariance_error(model, &inputs, &rotations)?)
}

fn equivariance_csv(rows: &[(&str, EquivarianceReport)], cfg: &ExperimentConfig) -> String {
    let mut s = String::from("model,inputs,rotations,max_abs_dev,mean_abs_dev\n");
    for (name, r) in rows {
        s.push_str(&format!("{name},{},{},{:e},{:e}\n", cfg.equiv_inputs, cfg.equiv_rotations, r.max, r.mean));
    }
    s
}

fn seeds(cfg: &ExperimentConfig) -> Vec<(&'static str, String)> {
    let test0 = cfg.split_phantom(Split::Test).seed;
    vec![
        ("train_subject_seed", cfg.data_seed.to_string()),
        ("test_subject_seeds", format!("{}..={}", test0, test0.wrapping_add(cfg.n_test_subjects as u64 - 1))),
        ("fcn_init_seed", cfg.model_seed.to_string()),
        ("scnn_init_seed", cfg.model_seed.wrapping_add(1).to_string()),
    ]
}

fn common_setup(
    cfg: &ExperimentConfig,
    progress: &dyn Fn(&str),
) -> Result<(RunOutputs, Vec<GradientScheme>, Dataset, Dataset), CliError> {
    cfg.validate()?;
    let mut out = RunOutputs::new(&cfg.out_dir)?;
    progress("schemes");
    let schemes = resolve_schemes(cfg)?;
    for s in &schemes {
        out.write(&format!("{}.txt", s.name()), scheme_to_string(s).as_bytes())?;
    }
    progress("training data");
    let train_ds = dataset(cfg, Split::Train, &schemes)?;
    progress("test data");
    let test_ds = dataset(cfg, Split::Test, &schemes)?;
    if cfg.write_data {
        for (name, ds) in [("train_data.csv", &train_ds), ("test_data.csv", &test_ds)] {
            let mut bytes = Vec::new();
            write_dataset_to(ds, &mut bytes)?;
            out.write(name, &bytes)?;
        }
    }
    Ok((out, schemes, train_ds, test_ds))
}

fn train_and_write(
    out: &mut RunOutputs,
    name: &str,
    spec: &ModelSpec,
    seed: u64,
    ds: &Dataset,
    cfg: &ExperimentConfig,
    progress: &dyn Fn(&str),
) -> Result<NetworkModel, CliError> {
    progress(&format!("training {name} on {} voxels", ds.records.len()));
    let (model, trace) = train_model(spec, seed, ds, &cfg.train_scheme, &cfg.train)?;
    out.write(&format!("{name}.model"), &model_to_bytes(&model))?;
    out.write(&format!("loss_{name}.csv"), loss_trace_csv(&trace).as_bytes())?;
    Ok(model)
}

#[derive(Debug, Clone)]
pub struct Exp1Report {
    pub evals: Vec<ModelEval>,
    pub ttests: Vec<TTestRow>,
    pub equivariance: EquivarianceReport,
    pub manifest: PathBuf,
}

impl Exp1Report {
    pub fn eval(&self, model: &str, scheme: &str) -> Option<&ModelEval> {
        find(&self.evals, model, scheme)
    }
}

/// Trains an FCN and an S-CNN on one subject acquired with the training
/// scheme and evaluates both, plus the direct tensor fit, on held-out
/// subjects under every test scheme.
pub fn run_experiment1(cfg: &ExperimentConfig, progress: &dyn Fn(&str)) -> Result<Exp1Report, CliError> {
    let (mut out, _, train_ds, test_ds) = common_setup(cfg, progress)?;
    let mut evals = Vec::new();
    let mut scnn_model = None;
    for (name, spec, seed) in [("fcn", &cfg.fcn, cfg.model_seed), ("scnn", &cfg.scnn, cfg.model_seed.wrapping_add(1))] {
        let model = train_and_write(&mut out, name, spec, seed, &train_ds, cfg, progress)?;
        for scheme in &cfg.test_schemes {
            progress(&format!("evaluating {name} on {scheme}"));
            let ev = evaluate(name, scheme, &model_predictions(&model, &test_ds, scheme)?, &test_ds)?;
            write_eval(&mut out, &ev)?;
            evals.push(ev);
        }
        if name == "scnn" {
            scnn_model = Some(model);
        }
    }
    for scheme in &cfg.test_schemes {
        let ev = evaluate("dtfit", scheme, &dtfit_predictions(&test_ds, scheme)?, &test_ds)?;
        write_eval(&mut out, &ev)?;
        evals.push(ev);
    }

    let mut ttests = Vec::new();
    for model in ["fcn", "scnn"] {
        let base = find(&evals, model, &cfg.train_scheme);
        for scheme in cfg.test_schemes.iter().filter(|s| **s != cfg.train_scheme) {
            if let (Some(a), Some(b)) = (find(&evals, model, scheme), base) {
                ttests.extend(ttest_rows(a, b)?);
            }
        }
    }
    for scheme in &cfg.test_schemes {
        if let (Some(a), Some(b)) = (find(&evals, "fcn", scheme), find(&evals, "scnn", scheme)) {
            ttests.extend(ttest_rows(a, b)?);
        }
    }
    out.write("ttests.csv", ttest_csv(&ttests).as_bytes())?;

    progress("equivariance of the trained S-CNN");
    let scnn = scnn_model.expect("trained above");
    let equivariance = trained_equivariance(&scnn, &test_ds, &cfg.train_scheme, cfg)?;
    out.write("equivariance.csv", equivariance_csv(&[("scnn", equivariance)], cfg).as_bytes())?;

    let manifest = out.finish("exp1", cfg, &seeds(cfg))?;
    Ok(Exp1Report { evals, ttests, equivariance, manifest })
}

#[derive(Debug, Clone)]
pub struct Exp2Report {
    pub evals: Vec<ModelEval>,
    pub ttests: Vec<TTestRow>,
    /// `(model, map)` on the first test scheme.
    pub tile_maps: Vec<(String, TileMap)>,
    pub equivariance: EquivarianceReport,
    pub manifest: PathBuf,
}

impl Exp2Report {
    pub fn eval(&self, model: &str, scheme: &str) -> Option<&ModelEval> {
        find(&self.evals, model, scheme)
    }

    pub fn tile_map(&self, model: &str) -> Option<&TileMap> {
        self.tile_maps.iter().find(|(m, _)| m == model).map(|(_, t)| t)
    }
}

/// Trains an FCN, an S-CNN and an S-CNN on `starve_fraction` of the
/// voxels, all on orientation-restricted data, and evaluates them on
/// uniformly oriented test subjects, with error maps over fibre
/// orientation.
pub fn run_experiment2(cfg: &ExperimentConfig, progress: &dyn Fn(&str)) -> Result<Exp2Report, CliError> {
    let (mut out, _, train_ds, test_ds) = common_setup(cfg, progress)?;
    let starved = train_ds.starved(cfg.starve_fraction);
    let scnn_seed = cfg.model_seed.wrapping_add(1);
    let runs: [(&str, &ModelSpec, u64, &Dataset); 3] = [
        ("fcn", &cfg.fcn, cfg.model_seed, &train_ds),
        ("scnn", &cfg.scnn, scnn_seed, &train_ds),
        ("scnn_starved", &cfg.scnn, scnn_seed, &starved),
    ];
    let tile_scheme = &cfg.test_schemes[0];
    let dirs: Vec<_> = test_ds.records.iter().map(|r| r.principal_dir()).collect();
    let gt = test_ds.fa_gt();
    let mut evals = Vec::new();
    let mut tile_maps = Vec::new();
    let mut equiv_rows = Vec::new();
    for (name, spec, seed, ds) in runs {
        let model = train_and_write(&mut out, name, spec, seed, ds, cfg, progress)?;
        for scheme in &cfg.test_schemes {
            progress(&format!("evaluating {name} on {scheme}"));
            let pred = model_predictions(&model, &test_ds, scheme)?;
            let ev = evaluate(name, scheme, &pred, &test_ds)?;
            write_eval(&mut out, &ev)?;
            evals.push(ev);
            if scheme == tile_scheme {
                let map = sphere_tile_map(&pred, &gt, &dirs, cfg.fa_threshold)?;
                out.write(&format!("tiles_{name}.csv"), tile_map_csv(&map).as_bytes())?;
                let title = format!("{name}: mean |FA error| by principal direction, {scheme} scheme");
                out.write(&format!("tiles_{name}.svg"), tile_map_svg(&map, &title).as_bytes())?;
                tile_maps.push((name.to_string(), map));
            }
        }
        if model.grid().is_some() {
            equiv_rows.push((name, trained_equivariance(&model, &test_ds, &cfg.train_scheme, cfg)?));
        }
    }
    for scheme in &cfg.test_schemes {
        let ev = evaluate("dtfit", scheme, &dtfit_predictions(&test_ds, scheme)?, &test_ds)?;
        write_eval(&mut out, &ev)?;
        evals.push(ev);
    }

    let mut ttests = Vec::new();
    for scheme in &cfg.test_schemes {
        for (a, b) in [("fcn", "scnn"), ("scnn_starved", "scnn")] {
            if let (Some(a), Some(b)) = (find(&evals, a, scheme), find(&evals, b, scheme)) {
                ttests.extend(ttest_rows(a, b)?);
            }
        }
    }
    out.write("ttests.csv", ttest_csv(&ttests).as_bytes())?;
    out.write("equivariance.csv", equivariance_csv(&equiv_rows, cfg).as_bytes())?;
    let equivariance = equiv_rows[0].1;
    let mut seed_rows = seeds(cfg);
    seed_rows.push(("starved_voxels", starved.records.len().to_string()));
    let manifest = out.finish("exp2", cfg, &seed_rows)?;
    Ok(Exp2Report { evals, ttests, tile_maps, equivariance, manifest })
}
