//! Trains on the Skare-style scheme and tests on it and on the Jones-style
//! scheme. Arguments are config overrides; without any, a reduced run
//! finishes in about a minute. Pass `--config FILE` first to start from a
//! file, e.g. a previous run's `manifest.ini`.
//!
//! ```text
//! cargo run --release --example experiment1
//! cargo run --release --example experiment1 -- --n_train_voxels 100000 --epochs 50
//! ```

use sphadc::cli::{run_experiment1, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args: Vec<String> = std::env::args().skip(1).collect();
    let mut cfg = ExperimentConfig::experiment1();
    cfg.n_train_voxels = 20_000;
    cfg.n_test_voxels = 5_000;
    cfg.train.epochs = 10;
    if args.first().map(String::as_str) == Some("--config") && args.len() > 1 {
        cfg = ExperimentConfig::from_file(args[1].as_ref(), cfg)?;
        args.drain(..2);
    }
    let cfg = cfg.with_overrides(&args)?;
    let report = run_experiment1(&cfg, &|m| eprintln!("{m}"))?;

    println!("{:<8} {:<6} subject-mean RMSE per FA bin", "model", "scheme");
    for ev in &report.evals {
        println!("{:<8} {:<6} {:.4?}", ev.model, ev.scheme, ev.subject_mean());
    }
    for row in report.ttests.iter().filter(|r| r.bin >= 2) {
        if let Some(t) = row.test {
            println!("{} vs {} bin {}: t {:+.2}, p {:.2e}", row.model_a, row.model_b, row.bin, t.t, t.p);
        }
    }
    println!("trained S-CNN max rotation deviation {:.2e}", report.equivariance.max);
    println!("outputs in {}", cfg.out_dir.display());
    Ok(())
}
