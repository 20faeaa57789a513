//! Designs six-direction schemes by the two classic criteria and compares
//! them, then matches each onto a dense 90-direction shell.
//!
//! ```text
//! cargo run --release --example gradient_schemes [OUT_DIR]
//! ```
//! With `OUT_DIR`, the two six-direction schemes are written there as
//! `skare6.txt` and `jones6.txt` (this is how `fixtures/` was produced).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sphadc::schemes::{
    condition_number, electrostatic_energy, match_subset, match_subset_cost, optimize_jones, optimize_skare,
    write_scheme, GradientScheme, OptimizerConfig,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = OptimizerConfig::default();
    let skare = optimize_skare(6, &mut ChaCha8Rng::seed_from_u64(1), &cfg)?;
    let jones = optimize_jones(6, &mut ChaCha8Rng::seed_from_u64(2), &cfg)?;
    let ico = GradientScheme::icosahedral6(1000.0);
    let classic = GradientScheme::classic6(1000.0);

    println!("{:<14} {:>10} {:>12}", "scheme", "kappa", "energy");
    for s in [&skare, &jones, &ico, &classic] {
        println!(
            "{:<14} {:>10.5} {:>12.5}",
            s.name(),
            condition_number(s)?,
            electrostatic_energy(s.dirs())?
        );
    }

    let dense = optimize_jones(90, &mut ChaCha8Rng::seed_from_u64(3), &OptimizerConfig { restarts: 2, iters: 500, ..cfg })?;
    for s in [&skare, &jones] {
        let idx = match_subset(&dense, s);
        println!(
            "{} matched onto dense shell: indices {:?}, total folded angle {:.4} rad",
            s.name(),
            idx,
            match_subset_cost(&dense, s, &idx)
        );
    }

    if let Some(dir) = std::env::args().nth(1) {
        let dir = std::path::PathBuf::from(dir);
        std::fs::create_dir_all(&dir)?;
        write_scheme(&dir.join("skare6.txt"), &skare)?;
        write_scheme(&dir.join("jones6.txt"), &jones)?;
        println!("wrote schemes to {}", dir.display());
    }
    Ok(())
}
