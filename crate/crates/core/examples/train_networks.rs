//! Trains the fully-connected network on the six signals and the
//! spherical CNN on the sampled ADC profile, saves both and compares them
//! with the direct tensor fit on held-out voxels.
//!
//! ```text
//! cargo run --release --example train_networks [N_TRAIN] [EPOCHS]
//! ```

use sphadc::datagen::{build_dataset, PhantomConfig};
use sphadc::eval::rmse_binned;
use sphadc::nn::{predict_batch, read_model, train, write_model, ModelSpec, NetworkModel, TrainConfig};
use sphadc::schemes::read_scheme;

fn arg(i: usize, default: usize) -> usize {
    std::env::args().nth(i).and_then(|s| s.parse().ok()).unwrap_or(default)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path: std::path::PathBuf = [env!("CARGO_MANIFEST_DIR"), "fixtures", "skare6.txt"].iter().collect();
    let scheme = read_scheme(&path)?.with_name("skare");
    let train_ds = build_dataset(&PhantomConfig { n_voxels: arg(1, 20_000), seed: 1, ..Default::default() }, std::slice::from_ref(&scheme))?;
    let test_ds = build_dataset(&PhantomConfig { n_voxels: 5000, seed: 99, ..Default::default() }, &[scheme])?;
    let cfg = TrainConfig { epochs: arg(2, 10), ..Default::default() };
    let gt = test_ds.fa_gt();
    let dir = std::env::temp_dir();

    for (name, spec) in [("fcn", ModelSpec::fcn()), ("scnn", ModelSpec::scnn())] {
        let model = NetworkModel::new(spec.clone(), 0)?;
        let grid = model.grid().cloned();
        let x = train_ds.inputs("skare", spec.kind, grid.as_deref())?;
        let t = std::time::Instant::now();
        let (model, trace) = train(model, x.view(), &train_ds.fa_gt(), &cfg)?;
        println!(
            "{name}: {} parameters, loss {:.5} -> {:.5} in {:.1?}",
            spec.num_params(),
            trace[0],
            trace.last().unwrap(),
            t.elapsed()
        );
        let file = dir.join(format!("{name}.model"));
        write_model(&file, &model)?;
        let model = read_model(&file)?;
        let pred = predict_batch(&model, test_ds.inputs("skare", spec.kind, grid.as_deref())?.view())?;
        println!("  held-out RMSE per FA bin {:.4?}", rmse_binned(&pred, &gt)?.rmse);
    }
    let fit = sphadc::cli::dtfit_predictions(&test_ds, "skare")?;
    println!("direct fit RMSE per FA bin {:.4?}", rmse_binned(&fit, &gt)?.rmse);
    Ok(())
}
