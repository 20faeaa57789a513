//! Scores the direct tensor fit on two schemes with FA-binned RMSE,
//! per-subject paired t-tests and an orientation tile map written as
//! CSV and SVG.
//!
//! ```text
//! cargo run --release --example evaluation [OUT_DIR]
//! ```

use std::path::PathBuf;

use sphadc::cli::{dtfit_predictions, evaluate};
use sphadc::datagen::{build_dataset, PhantomConfig};
use sphadc::eval::{per_bin_ttests, sphere_tile_map, tile_map_csv, tile_map_svg, DEFAULT_FA_THRESHOLD};
use sphadc::schemes::read_scheme;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixture = |n: &str| -> PathBuf { [env!("CARGO_MANIFEST_DIR"), "fixtures", n].iter().collect() };
    let schemes = vec![
        read_scheme(&fixture("skare6.txt"))?.with_name("skare"),
        read_scheme(&fixture("jones6.txt"))?.with_name("jones"),
    ];
    let ds = build_dataset(&PhantomConfig { n_voxels: 4000, n_subjects: 12, seed: 5, ..Default::default() }, &schemes)?;

    let mut evals = Vec::new();
    for s in ["skare", "jones"] {
        let ev = evaluate("dtfit", s, &dtfit_predictions(&ds, s)?, &ds)?;
        println!("{s:>6}: subject-mean RMSE per bin {:.4?}", ev.subject_mean());
        evals.push(ev);
    }
    for (bin, t) in per_bin_ttests(&evals[1].per_subject, &evals[0].per_subject)?.iter().enumerate() {
        if let Some(t) = t {
            println!("bin {bin}: jones vs skare t = {:+.3}, p = {:.3e}", t.t, t.p);
        }
    }

    let pred = dtfit_predictions(&ds, "skare")?;
    let dirs: Vec<_> = ds.records.iter().map(|r| r.principal_dir()).collect();
    let map = sphere_tile_map(&pred, &ds.fa_gt(), &dirs, DEFAULT_FA_THRESHOLD)?;
    let (lo, hi) = map.value_range();
    println!("tile map: {} occupied tiles, mean |error| {lo:.4}..{hi:.4}", map.occupied().count());

    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(std::env::temp_dir);
    std::fs::create_dir_all(&out)?;
    std::fs::write(out.join("tiles_dtfit.csv"), tile_map_csv(&map))?;
    std::fs::write(out.join("tiles_dtfit.svg"), tile_map_svg(&map, "direct fit, skare scheme"))?;
    println!("wrote tile map to {}", out.display());
    Ok(())
}
