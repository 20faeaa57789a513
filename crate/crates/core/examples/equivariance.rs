//! Measures how much network outputs move when the input is rotated:
//! a linearized S-CNN, the ReLU S-CNN with its activation grid at the
//! input bandlimit and oversampled, and the FCN with rotated tensors.
//!
//! ```text
//! cargo run --release --example equivariance
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sphadc::datagen::{sample_ground_truth_dt, PhantomConfig};
use sphadc::eval::{adc_signal, equivariance_error, seeded_rotations, tensor_rotation_error};
use sphadc::nn::{Activation, ModelSpec, NetworkModel};
use sphadc::schemes::GradientScheme;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let tensors: Vec<_> = (0..20).map(|_| sample_ground_truth_dt(&mut rng, &PhantomConfig::default())).collect();
    let rotations = seeded_rotations(100, 1);

    let variants = [
        ("linear S-CNN", ModelSpec::scnn().with_activation(Activation::Identity)),
        ("ReLU S-CNN, L'=8", ModelSpec::scnn().with_act_bandlimit(8)),
        ("ReLU S-CNN, L'=12", ModelSpec::scnn().with_act_bandlimit(12)),
        ("ReLU S-CNN, L'=16", ModelSpec::scnn().with_act_bandlimit(16)),
    ];
    for (name, spec) in variants {
        let model = NetworkModel::new(spec, 3)?;
        let inputs = tensors.iter().map(|dt| adc_signal(&model, dt)).collect::<Result<Vec<_>, _>>()?;
        let r = equivariance_error(&model, &inputs, &rotations)?;
        println!("{name:<18} max |Δ| {:.3e}  mean |Δ| {:.3e}", r.max, r.mean);
    }

    let fcn = NetworkModel::new(ModelSpec::fcn(), 3)?;
    let r = tensor_rotation_error(&fcn, &tensors, &GradientScheme::classic6(1000.0), &rotations)?;
    println!("{:<18} max |Δ| {:.3e}  mean |Δ| {:.3e}", "FCN", r.max, r.mean);
    Ok(())
}
