//! Trains on fibres aligned with the AP axis and tests on all
//! orientations, including an S-CNN trained on a tenth of the voxels.
//! Arguments are config overrides, as for `experiment1`.
//!
//! ```text
//! cargo run --release --example experiment2
//! ```

use sphadc::cli::{run_experiment2, ExperimentConfig};
use sphadc::datagen::AP_AXIS;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args: Vec<String> = std::env::args().skip(1).collect();
    let mut cfg = ExperimentConfig::experiment2();
    cfg.n_train_voxels = 20_000;
    cfg.n_test_voxels = 5_000;
    cfg.train.epochs = 10;
    if args.first().map(String::as_str) == Some("--config") && args.len() > 1 {
        cfg = ExperimentConfig::from_file(args[1].as_ref(), cfg)?;
        args.drain(..2);
    }
    let cfg = cfg.with_overrides(&args)?;
    let report = run_experiment2(&cfg, &|m| eprintln!("{m}"))?;

    for ev in &report.evals {
        println!("{:<13} {:.4?}", ev.model, ev.subject_mean());
    }
    for (name, map) in &report.tile_maps {
        let near_ap = map.occupied().min_by(|&a, &b| map.angle_to(a, &AP_AXIS).total_cmp(&map.angle_to(b, &AP_AXIS)));
        println!(
            "{name:<13} tile error max/min {:.2}, tile nearest AP {:.4}",
            map.value_ratio(),
            near_ap.map_or(f64::NAN, |i| map.mean_abs_err[i])
        );
    }
    println!("outputs in {}", cfg.out_dir.display());
    Ok(())
}
