use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sphadc::eval::*;
use sphadc::nn::{Activation, ModelSpec, NetworkModel};
use sphadc::sphere::Rotation;
use sphadc::tensor::DiffusionTensor;

fn brute_rmse(pred: &[f64], gt: &[f64], lo: f64, hi: f64, last: bool) -> (usize, f64) {
    let mut n = 0;
    let mut acc = 0.0;
    for i in 0..gt.len() {
        let inside = gt[i] >= lo && (gt[i] < hi || (last && gt[i] <= hi));
        if inside {
            n += 1;
            acc += (pred[i] - gt[i]) * (pred[i] - gt[i]);
        }
    }
    (n, if n == 0 { f64::NAN } else { (acc / n as f64).sqrt() })
}

#[test]
fn binned_rmse_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let gt: Vec<f64> = (0..5000).map(|_| rng.random::<f64>()).collect();
    let pred: Vec<f64> = gt.iter().map(|g| (g + 0.2 * (rng.random::<f64>() - 0.5)).clamp(0.0, 1.0)).collect();
    let r = rmse_binned(&pred, &gt).unwrap();
    let edges = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];
    for b in 0..5 {
        let (n, want) = brute_rmse(&pred, &gt, edges[b], edges[b + 1], b == 4);
        assert_eq!(r.count[b], n);
        assert!((r.rmse[b] - want).abs() < 1e-12);
    }
    assert_eq!(r.total(), gt.len());
}

#[test]
fn perfect_predictions_have_zero_error() {
    let gt = [0.05, 0.3, 0.5, 0.7, 0.95];
    let r = rmse_binned(&gt, &gt).unwrap();
    assert_eq!(r.rmse, [0.0; 5]);
}

proptest! {
    #[test]
    fn binned_rmse_combines_by_count(
        a in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..60),
        b in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..60),
    ) {
        let split = |v: &[(f64, f64)]| -> (Vec<f64>, Vec<f64>) { v.iter().copied().unzip() };
        let (pa, ga) = split(&a);
        let (pb, gb) = split(&b);
        let ra = rmse_binned(&pa, &ga).unwrap();
        let rb = rmse_binned(&pb, &gb).unwrap();
        let both = rmse_binned(&[pa, pb].concat(), &[ga, gb].concat()).unwrap();
        for k in 0..5 {
            prop_assert_eq!(both.count[k], ra.count[k] + rb.count[k]);
            if both.count[k] == 0 {
                prop_assert!(both.rmse[k].is_nan());
                continue;
            }
            let part = |r: &BinnedRmse| if r.count[k] == 0 { 0.0 } else { r.rmse[k].powi(2) * r.count[k] as f64 };
            let want = ((part(&ra) + part(&rb)) / both.count[k] as f64).sqrt();
            prop_assert!((both.rmse[k] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn ttest_is_antisymmetric(pairs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2..20)) {
        let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let ab = paired_ttest(&a, &b).unwrap();
        let ba = paired_ttest(&b, &a).unwrap();
        prop_assert!((ab.t + ba.t).abs() < 1e-12 * (1.0 + ab.t.abs()));
        prop_assert!((ab.p - ba.p).abs() < 1e-12);
    }

    #[test]
    fn t_cdf_is_monotone(t in -30.0f64..30.0, dt in 1e-6f64..5.0, df in 1.0f64..40.0) {
        prop_assert!(student_t_cdf(t, df) <= student_t_cdf(t + dt, df));
    }

    #[test]
    fn every_direction_lands_in_one_upper_tile(x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0) {
        let n = (x * x + y * y + z * z).sqrt();
        prop_assume!(n > 1e-6);
        let v = [x / n, y / n, z / n];
        let tiles = icosphere_tiles();
        let i = tile_index(&tiles, &v);
        prop_assert_eq!(i, tile_index(&tiles, &[-v[0], -v[1], -v[2]]));
        prop_assert!(tiles[i].vertices.iter().all(|p| p[2] >= -1e-12));
    }
}

#[test]
fn alternating_differences_give_zero_t() {
    let a: Vec<f64> = (0..12).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let r = paired_ttest(&a, &[0.0; 12]).unwrap();
    assert_eq!(r.t, 0.0);
    assert_eq!(r.p, 1.0);
    assert_eq!(r.df, 11);
    assert_eq!(student_t_cdf(0.0, 11.0), 0.5);
}

/// Student-t density for 11 degrees of freedom with the normalizing
/// constant written out: Γ(6) = 120, Γ(11/2) = (945/32)·√π.
fn t11_density(x: f64) -> f64 {
    let nu = 11.0;
    let pi = std::f64::consts::PI;
    let c = 120.0 / ((nu * pi).sqrt() * 945.0 / 32.0 * pi.sqrt());
    c * (1.0 + x * x / nu).powf(-(nu + 1.0) / 2.0)
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let m = 0.5 * (a + b);
    (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b))
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: usize) -> f64 {
    let m = 0.5 * (a + b);
    let left = simpson(f, a, m);
    let right = simpson(f, m, b);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        return left + right + (left + right - whole) / 15.0;
    }
    adaptive_simpson(f, a, m, left, tol / 2.0, depth - 1) + adaptive_simpson(f, m, b, right, tol / 2.0, depth - 1)
}

fn oracle_two_sided_p(t: f64) -> f64 {
    let t = t.abs();
    if t == 0.0 {
        return 1.0;
    }
    let whole = simpson(&t11_density, 0.0, t);
    1.0 - 2.0 * adaptive_simpson(&t11_density, 0.0, t, whole, 1e-10, 50)
}

#[test]
fn p_values_match_quadrature_oracle() {
    let mut worst: f64 = 0.0;
    for k in 0..=240 {
        let t = k as f64 * 0.05;
        let (p, _) = two_sided_p(t, 11.0);
        worst = worst.max((p - oracle_two_sided_p(t)).abs());
    }
    assert!(worst < 1e-6, "{worst}");
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..200 {
        let a: Vec<f64> = (0..12).map(|_| rng.sample(StandardNormal)).collect();
        let b: Vec<f64> = (0..12).map(|_| rng.sample::<f64, _>(StandardNormal) + 0.3).collect();
        let r = paired_ttest(&a, &b).unwrap();
        if r.t.abs() <= 12.0 {
            assert!((r.p - oracle_two_sided_p(r.t)).abs() < 1e-6);
        }
    }
}

#[test]
fn tile_map_edge_cases() {
    let below = sphere_tile_map(&[0.3, 0.2], &[0.5, 0.6], &[[0.0, 1.0, 0.0], [1.0, 0.0, 0.0]], 0.6).unwrap();
    assert!(below.counts.iter().all(|&c| c == 0));
    let one = sphere_tile_map(&[0.55], &[0.8], &[[0.0, 1.0, 0.0]], 0.6).unwrap();
    let occupied: Vec<usize> = one.occupied().collect();
    assert_eq!(occupied.len(), 1);
    assert!((one.mean_abs_err[occupied[0]] - 0.25).abs() < 1e-15);
    assert!(matches!(sphere_tile_map(&[0.1], &[0.1, 0.2], &[[0.0, 0.0, 1.0]; 2], 0.6), Err(EvalError::LengthMismatch { .. })));
}

#[test]
fn uniform_directions_fill_tiles_evenly() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 100_000;
    let dirs: Vec<[f64; 3]> = (0..n)
        .map(|_| {
            let v: [f64; 3] = std::array::from_fn(|_| rng.sample(StandardNormal));
            let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            [v[0] / r, v[1] / r, v[2] / r]
        })
        .collect();
    let map = sphere_tile_map(&vec![1.0; n], &vec![0.9; n], &dirs, 0.6).unwrap();
    let occ: Vec<usize> = map.occupied().map(|i| map.counts[i]).collect();
    assert_eq!(occ.len(), 40);
    assert_eq!(occ.iter().sum::<usize>(), n);
    let ratio = *occ.iter().max().unwrap() as f64 / *occ.iter().min().unwrap() as f64;
    assert!(ratio < 2.0, "{ratio}");
}

fn small_scnn(act: Activation, seed: u64) -> NetworkModel {
    let mut spec = ModelSpec::scnn().with_activation(act);
    spec.scnn_channels = vec![1, 4, 4];
    spec.readout_hidden = 8;
    NetworkModel::new(spec, seed).unwrap()
}

fn tensors(n: usize, seed: u64) -> Vec<DiffusionTensor> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let r = sphadc::sphere::random_rotation(&mut rng);
            let l: [f64; 3] = std::array::from_fn(|_| 0.2e-3 + 1.5e-3 * rng.random::<f64>());
            DiffusionTensor::diagonal(l[0], l[1], l[2]).rotated(r.matrix())
        })
        .collect()
}

#[test]
fn identity_rotation_has_zero_error() {
    let m = small_scnn(Activation::Relu, 4);
    let inputs: Vec<_> = tensors(5, 5).iter().map(|dt| adc_signal(&m, dt).unwrap()).collect();
    let r = equivariance_error(&m, &inputs, &[Rotation::identity()]).unwrap();
    assert!(r.max < 1e-12);
}

#[test]
fn linear_network_is_invariant() {
    let m = small_scnn(Activation::Identity, 6);
    let inputs: Vec<_> = tensors(5, 7).iter().map(|dt| adc_signal(&m, dt).unwrap()).collect();
    let r = equivariance_error(&m, &inputs, &seeded_rotations(20, 8)).unwrap();
    assert_eq!(r.evaluations, 100);
    assert!(r.max <= 1e-10, "{}", r.max);
}

#[test]
fn fcn_is_rejected_on_the_signal_path_but_measurable_by_tensor() {
    let fcn = NetworkModel::new(ModelSpec::fcn(), 9).unwrap();
    let scnn = small_scnn(Activation::Relu, 9);
    let inputs = vec![adc_signal(&scnn, &tensors(1, 10)[0]).unwrap()];
    assert!(matches!(equivariance_error(&fcn, &inputs, &[Rotation::identity()]), Err(EvalError::WrongModelKind(_))));
    let scheme = sphadc::schemes::GradientScheme::classic6(1000.0);
    let rots = seeded_rotations(10, 11);
    let f = tensor_rotation_error(&fcn, &tensors(5, 12), &scheme, &rots).unwrap();
    let s = tensor_rotation_error(&small_scnn(Activation::Identity, 13), &tensors(5, 12), &scheme, &rots).unwrap();
    assert!(f.max > 1e-4);
    assert!(s.max < 1e-10);
}
