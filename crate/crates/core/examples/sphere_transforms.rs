//! Samples a tensor's ADC profile on the equiangular grid, transforms it
//! to real spherical harmonics and back, and checks that rotating the
//! coefficients matches sampling the rotated tensor while the power
//! spectrum stays put.
//!
//! ```text
//! cargo run --release --example sphere_transforms [BANDLIMIT]
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sphadc::sphere::{
    power_spectrum, random_rotation, rotate_coeffs, sample_adc, sht_forward, sht_inverse, SphGrid,
};
use sphadc::tensor::DiffusionTensor;

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let l: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(8);
    let grid = SphGrid::new(l)?;
    println!("bandlimit {l}: {} grid points, {} coefficients", grid.len(), l * l);

    // µm²/ms, so values are O(1)
    let dt = DiffusionTensor::new(1.2, 0.4, 0.5, 0.3, -0.1, 0.2);
    let f = sample_adc(&dt, &grid);
    let c = sht_forward(&f);
    let back = sht_inverse(&c, &grid)?;
    println!("analysis/synthesis roundtrip error {:.3e}", max_diff(f.values(), back.values()));

    let p = power_spectrum(&c);
    println!("power spectrum {}", p.iter().map(|v| format!("{v:.4e}")).collect::<Vec<_>>().join(" "));
    let integral = grid.integrate(&f.values().iter().map(|v| v * v).collect::<Vec<_>>());
    println!("Parseval: Σ P_ℓ = {:.10e}, ∫ f² = {:.10e}", p.iter().sum::<f64>(), integral);

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..3 {
        let r = random_rotation(&mut rng);
        let rotated = sht_inverse(&rotate_coeffs(&c, &r), &grid)?;
        let direct = sample_adc(&dt.rotated(r.matrix()), &grid);
        let pr = power_spectrum(&sht_forward(&rotated));
        println!(
            "rotation: coefficient path vs rotated tensor {:.3e}, spectrum change {:.3e}",
            max_diff(rotated.values(), direct.values()),
            max_diff(&p, &pr)
        );
    }
    Ok(())
}
