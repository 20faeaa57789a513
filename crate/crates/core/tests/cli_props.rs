use std::path::{Path, PathBuf};

use sphadc::cli::*;
use sphadc::datagen::read_dataset;
use sphadc::nn::{read_model, ModelKind};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn tiny(base: ExperimentConfig, out: &Path) -> ExperimentConfig {
    ExperimentConfig {
        out_dir: out.to_path_buf(),
        skare_scheme: Some(fixture("skare6.txt")),
        jones_scheme: Some(fixture("jones6.txt")),
        n_train_voxels: 1000,
        n_test_voxels: 150,
        n_test_subjects: 2,
        equiv_inputs: 3,
        equiv_rotations: 4,
        ..base
    }
    .with_overrides(&["--epochs".into(), "2".into()])
    .unwrap()
}

fn quiet(_: &str) {}

fn csv_rows(path: &Path) -> usize {
    std::fs::read_to_string(path).unwrap().lines().count() - 1
}

#[test]
fn config_text_roundtrips() {
    for base in [ExperimentConfig::experiment1(), ExperimentConfig::experiment2()] {
        let mut cfg = base.clone().with_overrides(&["--snr".into(), "12.5".into(), "--ground_truth=dense_fit".into()]).unwrap();
        cfg.skare_scheme = Some(PathBuf::from("a/b.txt"));
        let back = ExperimentConfig::experiment1().with_text(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
    }
}

#[test]
fn config_parsing_rules() {
    let text = "# comment\n[data]\nsnr = 7 # trailing\n\n[experiment]\nstarve_fraction=0.25\n[artifacts]\nx.csv = 00\n";
    let cfg = ExperimentConfig::experiment1().with_text(text).unwrap();
    assert_eq!(cfg.phantom.snr, 7.0);
    assert_eq!(cfg.starve_fraction, 0.25);
    assert!(ExperimentConfig::experiment1().with_text("[data]\nepochs = 3\n").is_err());
    assert!(ExperimentConfig::experiment1().with_text("nonsense = 3\n").is_err());
    assert!(ExperimentConfig::experiment1().with_text("snr\n").is_err());
    let o = ExperimentConfig::experiment1().with_overrides(&["--data.snr".into(), "3".into()]).unwrap();
    assert_eq!(o.phantom.snr, 3.0);
    assert!(ExperimentConfig::experiment1().with_overrides(&["--snr".into()]).is_err());
    let bad = ExperimentConfig { starve_fraction: 0.0, ..ExperimentConfig::experiment2() };
    assert!(bad.validate().is_err());
    let missing = ExperimentConfig { train_data: Some("/no/such/file".into()), ..ExperimentConfig::experiment1() };
    assert!(missing.validate().is_err());
}

#[test]
fn experiment1_smoke_and_rerun_from_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(ExperimentConfig::experiment1(), &dir.path().join("a"));
    let report = run_experiment1(&cfg, &quiet).unwrap();
    let a = dir.path().join("a");
    for model in ["fcn", "scnn", "dtfit"] {
        for scheme in ["skare", "jones"] {
            assert_eq!(csv_rows(&a.join(format!("rmse_{model}_{scheme}.csv"))), 5);
            assert_eq!(csv_rows(&a.join(format!("rmse_subjects_{model}_{scheme}.csv"))), 10);
        }
    }
    assert_eq!(csv_rows(&a.join("ttests.csv")), 20);
    assert_eq!(csv_rows(&a.join("loss_fcn.csv")), 2);
    assert_eq!(csv_rows(&a.join("equivariance.csv")), 1);
    assert_eq!(read_model(&a.join("scnn.model")).unwrap().kind(), ModelKind::Scnn);
    assert!(verify_manifest(&report.manifest).unwrap().is_empty());
    assert_eq!(report.eval("fcn", "jones").unwrap().per_subject.len(), 2);

    let rerun = ExperimentConfig::experiment1()
        .with_text(&std::fs::read_to_string(&report.manifest).unwrap())
        .unwrap()
        .with_overrides(&["--out_dir".into(), dir.path().join("b").display().to_string()])
        .unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    pool.install(|| run_experiment1(&rerun, &quiet)).unwrap();
    for entry in std::fs::read_dir(&a).unwrap() {
        let name = entry.unwrap().file_name();
        if name == MANIFEST_NAME {
            continue;
        }
        let x = std::fs::read(a.join(&name)).unwrap();
        let y = std::fs::read(dir.path().join("b").join(&name)).unwrap();
        assert!(x == y, "{name:?} differs");
    }
}

#[test]
fn experiment2_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(ExperimentConfig::experiment2(), dir.path());
    let report = run_experiment2(&cfg, &quiet).unwrap();
    for model in ["fcn", "scnn", "scnn_starved"] {
        assert_eq!(csv_rows(&dir.path().join(format!("tiles_{model}.csv"))), 80);
        let svg = std::fs::read_to_string(dir.path().join(format!("tiles_{model}.svg"))).unwrap();
        assert!(svg.contains(r#"width="800" height="400""#));
        assert!(report.tile_map(model).is_some());
    }
    assert_eq!(csv_rows(&dir.path().join("ttests.csv")), 10);
    assert_eq!(csv_rows(&dir.path().join("equivariance.csv")), 2);
    let manifest = std::fs::read_to_string(&report.manifest).unwrap();
    assert!(manifest.contains("starved_voxels = 100"));
    assert!(manifest.contains("orientation_mode = ap_restricted"));
}

#[test]
fn single_step_commands_chain() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);
    let cfg = tiny(ExperimentConfig::experiment1(), dir.path());
    assert_eq!(gen_data(&cfg, Split::Train, &p("train.csv")).unwrap(), 1000);
    assert_eq!(gen_data(&cfg, Split::Test, &p("test.csv")).unwrap(), 300);
    let test = read_dataset(&p("test.csv")).unwrap();
    assert_eq!(test.header.n_subjects, 2);

    let trace = train_on_dataset(ModelKind::Fcn, &p("train.csv"), "skare", &cfg, &p("fcn.model")).unwrap();
    assert_eq!(trace.len(), 2);
    assert!(p("fcn.model.loss.csv").exists());
    assert_eq!(predict(&p("fcn.model"), &p("test.csv"), "jones", &p("pred.csv")).unwrap(), 300);
    let outs = eval_predictions(&p("pred.csv"), &p("test.csv"), &p("ev"), 0.6).unwrap();
    assert_eq!(outs.len(), 4);
    assert_eq!(csv_rows(&p("ev_rmse.csv")), 5);
    assert_eq!(csv_rows(&p("ev_tiles.csv")), 80);

    assert_eq!(fit_dataset(&p("test.csv"), "skare", &p("fit.csv")).unwrap(), 300);
    assert!(predict(&p("fcn.model"), &p("test.csv"), "nope", &p("x.csv")).is_err());

    let r = equiv_test(&p("fcn.model"), 3, 2, 0, Some(&fixture("skare6.txt")), &p("eq.csv")).unwrap();
    assert_eq!(r.evaluations, 6);
    assert_eq!(csv_rows(&p("eq.csv")), 6);
    assert!(equiv_test(&p("fcn.model"), 3, 2, 0, None, &p("eq.csv")).is_err());

    let opt = sphadc::schemes::OptimizerConfig { restarts: 2, iters: 50, ..Default::default() };
    let s = gen_scheme(SchemeKind::Jones, 8, 3, &opt, &p("j8.txt")).unwrap();
    assert_eq!(sphadc::schemes::read_scheme(&p("j8.txt")).unwrap().dirs(), s.dirs());
}
