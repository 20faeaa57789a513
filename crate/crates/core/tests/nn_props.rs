use ndarray::{Array2, Axis};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sphadc::nn::*;
use sphadc::sphere::*;
use sphadc::tensor::DiffusionTensor;

fn random_spd(rng: &mut impl Rng) -> DiffusionTensor {
    let r = random_rotation(rng);
    let l: Vec<f64> = (0..3).map(|_| rng.random_range(0.1e-3..2.0e-3)).collect();
    DiffusionTensor::diagonal(l[0], l[1], l[2]).rotated(r.matrix())
}

fn scnn_batch(n: usize, grid: &SphGrid, rng: &mut impl Rng) -> Array2<f64> {
    let rows: Vec<f64> = (0..n).flat_map(|_| adc_input(&random_spd(rng), grid)).collect();
    Array2::from_shape_vec((n, grid.len()), rows).unwrap()
}

fn fcn_batch(n: usize, rng: &mut impl Rng) -> Array2<f64> {
    Array2::from_shape_fn((n, 6), |_| rng.random_range(0.2..1.0))
}

/// Central differences on `count` random coordinates; returns the worst
/// relative error, with a small absolute floor for near-zero entries.
fn fd_check(model: &NetworkModel, x: &Array2<f64>, t: &[f64], count: usize, seed: u64) -> f64 {
    let (_, grad) = model.loss_and_grad(x.view(), t).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let i = rng.random_range(0..grad.len());
        let mut plus = model.clone();
        plus.params_mut()[i] += h;
        let mut minus = model.clone();
        minus.params_mut()[i] -= h;
        let fp = plus.loss_and_grad(x.view(), t).unwrap().0;
        let fm = minus.loss_and_grad(x.view(), t).unwrap().0;
        let fd = (fp - fm) / (2.0 * h);
        let err = (fd - grad[i]).abs() / grad[i].abs().max(fd.abs()).max(1e-6);
        worst = worst.max(err);
    }
    worst
}

#[test]
fn fcn_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let m = NetworkModel::new(ModelSpec::fcn(), 2).unwrap();
    let x = fcn_batch(20, &mut rng);
    let t: Vec<f64> = (0..20).map(|_| rng.random()).collect();
    let worst = fd_check(&m, &x, &t, 150, 3);
    assert!(worst < 1e-4, "worst relative error {worst}");
}

#[test]
fn scnn_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let m = NetworkModel::new(ModelSpec::scnn(), 5).unwrap();
    let x = scnn_batch(6, m.grid().unwrap(), &mut rng);
    let t: Vec<f64> = (0..6).map(|_| rng.random()).collect();
    let worst = fd_check(&m, &x, &t, 150, 6);
    assert!(worst < 1e-4, "worst relative error {worst}");
}

#[test]
fn spectral_layer_commutes_with_rotation() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let l = 8;
    for _ in 0..5 {
        let inputs: Vec<SHCoeffs> = (0..3)
            .map(|_| SHCoeffs::from_vec(l, (0..l * l).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap())
            .collect();
        let w: Vec<f64> = (0..4 * 3 * l).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r = random_rotation(&mut rng);
        let rotated_in: Vec<SHCoeffs> = inputs.iter().map(|c| rotate_coeffs(c, &r)).collect();
        let a = spectral_filter(&rotated_in, &w, 4).unwrap();
        let b: Vec<SHCoeffs> = spectral_filter(&inputs, &w, 4).unwrap().iter().map(|c| rotate_coeffs(c, &r)).collect();
        for (x, y) in a.iter().zip(&b) {
            for (u, v) in x.as_slice().iter().zip(y.as_slice()) {
                assert!((u - v).abs() < 1e-10);
            }
        }
    }
}

fn max_rotation_deviation(m: &NetworkModel, inputs: usize, rotations: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = m.grid().unwrap().clone();
    let mut worst: f64 = 0.0;
    for _ in 0..inputs {
        let dt = random_spd(&mut rng);
        let base = m.forward(&adc_input(&dt, &grid)).unwrap();
        for _ in 0..rotations {
            let r = random_rotation(&mut rng);
            let moved = m.forward(&adc_input(&dt.rotated(r.matrix()), &grid)).unwrap();
            worst = worst.max((moved - base).abs());
        }
    }
    worst
}

#[test]
fn linear_scnn_is_rotation_invariant() {
    let m = NetworkModel::new(ModelSpec::scnn().with_activation(Activation::Identity), 8).unwrap();
    let worst = max_rotation_deviation(&m, 10, 100, 9);
    assert!(worst < 1e-10, "{worst:e}");
}

#[test]
fn relu_scnn_is_nearly_rotation_invariant() {
    let m = NetworkModel::new(ModelSpec::scnn(), 8).unwrap();
    let worst = max_rotation_deviation(&m, 10, 100, 10);
    assert!(worst < 1e-2, "{worst:e}");
}

#[test]
fn fcn_is_not_rotation_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let m = NetworkModel::new(ModelSpec::fcn(), 13).unwrap();
    let six = sphadc::schemes::GradientScheme::icosahedral6(1000.0);
    let signals = |dt: &DiffusionTensor| -> Vec<f64> {
        six.dirs().iter().map(|g| (-1000.0 * sphadc::tensor::adc(dt, g)).exp()).collect()
    };
    let dt = DiffusionTensor::diagonal(1.7e-3, 0.2e-3, 0.2e-3);
    let base = m.forward(&signals(&dt)).unwrap();
    let worst = (0..20)
        .map(|_| {
            let r = random_rotation(&mut rng);
            (m.forward(&signals(&dt.rotated(r.matrix()))).unwrap() - base).abs()
        })
        .fold(0.0, f64::max);
    assert!(worst > 1e-3, "{worst:e}");
}

#[test]
fn adam_zero_gradient_keeps_parameters() {
    let mut m = NetworkModel::new(ModelSpec::fcn(), 1).unwrap();
    let before = m.params().to_vec();
    let zeros = vec![0.0; before.len()];
    m.adam_step(&zeros, 1e-3);
    assert_eq!(m.params(), &before[..]);
}

#[test]
fn adam_first_moment_decays_to_exact_zero() {
    let mut m = NetworkModel::new(ModelSpec::fcn(), 1).unwrap();
    let n = m.params().len();
    m.adam_step(&vec![1.0; n], 1e-3);
    let zeros = vec![0.0; n];
    for _ in 0..8000 {
        m.adam_step(&zeros, 1e-3);
    }
    assert!(m.adam_state().m.iter().all(|&x| x == 0.0));
}

/// With a constant gradient both bias-corrected moments equal `g` and
/// `g²` exactly, so every step moves each coordinate by
/// `lr·|g|/(|g|+ε)`.
#[test]
fn adam_constant_gradient_step_size() {
    let mut m = NetworkModel::new(ModelSpec::fcn(), 1).unwrap();
    let n = m.params().len();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let g: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    let lr = 1e-3;
    for _ in 0..50 {
        let before = m.params().to_vec();
        m.adam_step(&g, lr);
        for i in 0..n {
            let want = lr * g[i].abs() / (g[i].abs() + 1e-8);
            let got = (m.params()[i] - before[i]).abs();
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
            assert!((m.params()[i] - before[i]) * g[i] < 0.0);
        }
    }
    assert_eq!(m.adam_state().t, 50);
}

#[test]
fn adam_matches_reference_recurrence() {
    let mut m = NetworkModel::new(ModelSpec::fcn(), 3).unwrap();
    let mut twin = m.clone();
    let n = m.params().len();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut mm, mut vv) = (vec![0.0; n], vec![0.0; n]);
    let mut theta = m.params().to_vec();
    for t in 1..=5 {
        let g: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        m.adam_step(&g, 0.01);
        twin.adam_step(&g, 0.01);
        for i in 0..n {
            mm[i] = 0.9 * mm[i] + 0.1 * g[i];
            vv[i] = 0.999 * vv[i] + 0.001 * g[i] * g[i];
            let mh = mm[i] / (1.0 - 0.9f64.powi(t));
            let vh = vv[i] / (1.0 - 0.999f64.powi(t));
            theta[i] -= 0.01 * mh / (vh.sqrt() + 1e-8);
            assert!((theta[i] - m.params()[i]).abs() < 1e-14);
        }
    }
    assert_eq!(m.params(), twin.params());
}

#[test]
fn loss_is_zero_at_own_outputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for spec in [ModelSpec::fcn(), ModelSpec::scnn()] {
        let m = NetworkModel::new(spec.clone(), 6).unwrap();
        let x = match spec.kind {
            ModelKind::Fcn => fcn_batch(10, &mut rng),
            ModelKind::Scnn => scnn_batch(10, m.grid().unwrap(), &mut rng),
        };
        let y = m.forward_batch(x.view()).unwrap();
        let (mse, grad) = m.loss_and_grad(x.view(), &y).unwrap();
        assert_eq!(mse, 0.0);
        assert!(grad.iter().all(|&g| g == 0.0));
    }
}

#[test]
fn duplicated_batch_leaves_loss_and_gradient_unchanged() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for spec in [ModelSpec::fcn(), ModelSpec::scnn()] {
        let m = NetworkModel::new(spec.clone(), 8).unwrap();
        let x = match spec.kind {
            ModelKind::Fcn => fcn_batch(40, &mut rng),
            ModelKind::Scnn => scnn_batch(40, m.grid().unwrap(), &mut rng),
        };
        let t: Vec<f64> = (0..40).map(|_| rng.random()).collect();
        let x2 = ndarray::concatenate(Axis(0), &[x.view(), x.view()]).unwrap();
        let t2 = [t.clone(), t.clone()].concat();
        let (a, ga) = m.loss_and_grad(x.view(), &t).unwrap();
        let (b, gb) = m.loss_and_grad(x2.view(), &t2).unwrap();
        assert!((a - b).abs() < 1e-12 * a.max(1.0));
        let scale = ga.iter().fold(1.0f64, |s, v| s.max(v.abs()));
        for (u, v) in ga.iter().zip(&gb) {
            assert!((u - v).abs() < 1e-12 * scale);
        }
    }
}

#[test]
fn constant_target_is_learned() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let x = fcn_batch(256, &mut rng);
    let t = vec![0.5; 256];
    let cfg = TrainConfig { seed: 1, ..Default::default() };
    let (_, trace) = train(NetworkModel::new(ModelSpec::fcn(), 1).unwrap(), x.view(), &t, &cfg).unwrap();
    assert!(*trace.last().unwrap() < 1e-3, "{trace:?}");

    let m = NetworkModel::new(ModelSpec::scnn(), 1).unwrap();
    let x = scnn_batch(1024, m.grid().unwrap(), &mut rng);
    let t = vec![0.5; 1024];
    let (_, trace) = train(m, x.view(), &t, &cfg).unwrap();
    assert!(*trace.last().unwrap() < 1e-3, "{trace:?}");
}

#[test]
fn training_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let m = NetworkModel::new(ModelSpec::scnn(), 2).unwrap();
    let x = scnn_batch(100, m.grid().unwrap(), &mut rng);
    let t: Vec<f64> = (0..100).map(|_| rng.random()).collect();
    let cfg = TrainConfig { epochs: 3, batch_size: 16, seed: 5, ..Default::default() };
    let (a, ta) = train(m.clone(), x.view(), &t, &cfg).unwrap();
    let (b, tb) = train(m, x.view(), &t, &cfg).unwrap();
    assert_eq!(ta, tb);
    assert_eq!(model_to_bytes(&a), model_to_bytes(&b));
    let threaded = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let (c, _) = threaded.install(|| train(a.clone(), x.view(), &t, &cfg)).unwrap();
    let (d, _) = train(a, x.view(), &t, &cfg).unwrap();
    assert_eq!(model_to_bytes(&c), model_to_bytes(&d));
}

#[test]
fn predictions_are_clamped_and_ordered() {
    let mut m = NetworkModel::zeros(ModelSpec::fcn()).unwrap();
    let n = m.params().len();
    m.params_mut()[n - 1] = 1.2;
    let x = Array2::from_elem((3, 6), 0.5);
    assert_eq!(predict_batch(&m, x.view()).unwrap(), vec![1.0; 3]);
    assert!(predict_batch(&m, Array2::<f64>::zeros((0, 6)).view()).unwrap().is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn permuting_inputs_permutes_outputs(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = NetworkModel::new(ModelSpec::fcn(), seed).unwrap();
        let x = fcn_batch(150, &mut rng);
        let mut perm: Vec<usize> = (0..150).collect();
        for i in (1..150).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let y = predict_batch(&m, x.view()).unwrap();
        let yp = predict_batch(&m, x.select(Axis(0), &perm).view()).unwrap();
        for (k, &p) in perm.iter().enumerate() {
            prop_assert_eq!(yp[k], y[p]);
        }
    }
}
