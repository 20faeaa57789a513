use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sphadc::linalg;
use sphadc::schemes::*;
use sphadc::sphere::{random_rotation, Rotation};

fn svd_condition(scheme: &GradientScheme) -> f64 {
    let rows = design_matrix(scheme);
    let m = DMatrix::from_fn(rows.len(), 6, |i, j| rows[i][j]);
    let sv = m.singular_values();
    sv.max() / sv.min()
}

fn random_scheme(n: usize, rng: &mut impl Rng) -> GradientScheme {
    let dirs = (0..n)
        .map(|_| {
            let r = random_rotation(rng);
            r.apply(&[0.0, 0.0, 1.0])
        })
        .collect();
    GradientScheme::new("random", 1000.0, dirs).unwrap()
}

fn quick(restarts: usize, iters: usize) -> OptimizerConfig {
    OptimizerConfig { restarts, iters, ..Default::default() }
}

/// Exact minimum assignment cost by dynamic programming over subsets of
/// targets while sweeping dense columns.
fn dp_assignment_cost(cost: &[Vec<f64>]) -> f64 {
    let n = cost.len();
    let m = cost[0].len();
    let full = 1usize << n;
    let mut best = vec![f64::INFINITY; full];
    best[0] = 0.0;
    for j in 0..m {
        let prev = best.clone();
        for mask in 0..full {
            if !prev[mask].is_finite() {
                continue;
            }
            for i in 0..n {
                if mask & (1 << i) == 0 {
                    let next = mask | (1 << i);
                    let c = prev[mask] + cost[i][j];
                    if c < best[next] {
                        best[next] = c;
                    }
                }
            }
        }
    }
    best[full - 1]
}

#[test]
fn classic_scheme_condition_matches_svd() {
    let s = GradientScheme::classic6(1000.0);
    assert!((condition_number(&s).unwrap() - svd_condition(&s)).abs() < 1e-8);
}

#[test]
fn coplanar_directions_are_rank_deficient_by_svd() {
    let dirs = (0..6)
        .map(|k| {
            let a = k as f64 * 0.5;
            [a.cos(), a.sin(), 0.0]
        })
        .collect();
    let s = GradientScheme::new("flat", 1000.0, dirs).unwrap();
    let rows = design_matrix(&s);
    let m = DMatrix::from_fn(6, 6, |i, j| rows[i][j]);
    assert!(m.rank(1e-10) < 6);
    assert!(matches!(condition_number(&s), Err(SchemeError::RankDeficient)));
}

#[test]
fn skare_six_beats_classic_and_icosahedral() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let s = optimize_skare(6, &mut rng, &quick(8, 2000)).unwrap();
    let k = svd_condition(&s);
    assert!(k < svd_condition(&GradientScheme::classic6(1000.0)));
    assert!(k < svd_condition(&GradientScheme::icosahedral6(1000.0)), "skare κ {k}");
}

#[test]
fn skare_ninety_is_well_conditioned() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let s = optimize_skare(90, &mut rng, &quick(1, 300)).unwrap();
    assert!(svd_condition(&s) < 1.6);
}

#[test]
fn jones_three_is_orthogonal() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let s = optimize_jones(3, &mut rng, &quick(5, 2000)).unwrap();
    for i in 0..3 {
        for j in (i + 1)..3 {
            assert!(linalg::dot(&s.dirs()[i], &s.dirs()[j]).abs() < 1e-3);
        }
    }
}

#[test]
fn jones_six_is_icosahedral() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let s = optimize_jones(6, &mut rng, &quick(5, 2000)).unwrap();
    let target = 1.0 / 5f64.sqrt();
    for i in 0..6 {
        for j in (i + 1)..6 {
            let d = linalg::dot(&s.dirs()[i], &s.dirs()[j]).abs();
            assert!((d - target).abs() < 1e-3, "|dot| = {d}");
        }
    }
}

#[test]
fn optimizers_are_deterministic() {
    let a = optimize_jones(10, &mut ChaCha8Rng::seed_from_u64(5), &quick(4, 300)).unwrap();
    let b = optimize_jones(10, &mut ChaCha8Rng::seed_from_u64(5), &quick(4, 300)).unwrap();
    assert_eq!(a, b);
    let a = optimize_skare(6, &mut ChaCha8Rng::seed_from_u64(5), &quick(2, 200)).unwrap();
    let b = optimize_skare(6, &mut ChaCha8Rng::seed_from_u64(5), &quick(2, 200)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn match_subset_agrees_with_exhaustive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..20 {
        let dense = random_scheme(90, &mut rng);
        let target = random_scheme(6, &mut rng);
        let idx = match_subset(&dense, &target);
        let mut seen = idx.clone();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 6, "assignment must be injective");
        let cost: Vec<Vec<f64>> = target
            .dirs()
            .iter()
            .map(|t| dense.dirs().iter().map(|d| folded_angle(t, d)).collect())
            .collect();
        let got = match_subset_cost(&dense, &target, &idx);
        assert!((got - dp_assignment_cost(&cost)).abs() < 1e-12);
    }
}

#[test]
fn match_cost_positive_unless_subset() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let dense = random_scheme(30, &mut rng);
    let target = random_scheme(6, &mut rng);
    let idx = match_subset(&dense, &target);
    assert!(match_subset_cost(&dense, &target, &idx) > 0.0);
    let sub = dense.select("sub", &[3, 17, 8, 25, 0, 11]);
    let idx = match_subset(&dense, &sub);
    assert_eq!(idx, vec![3, 17, 8, 25, 0, 11]);
    assert!(match_subset_cost(&dense, &sub, &idx) < 1e-10);
}

#[test]
fn canonical_fixtures_are_valid() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let skare = read_scheme(&dir.join("skare6.txt")).unwrap();
    let jones = read_scheme(&dir.join("jones6.txt")).unwrap();
    assert_eq!(skare.len(), 6);
    assert_eq!(jones.len(), 6);
    assert!(svd_condition(&skare) < svd_condition(&GradientScheme::icosahedral6(1000.0)));
    let e_ico = electrostatic_energy(GradientScheme::icosahedral6(1000.0).dirs()).unwrap();
    assert!((electrostatic_energy(jones.dirs()).unwrap() - e_ico).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn energy_invariant_under_rotation_and_sign_flips(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_scheme(8, &mut rng);
        let e = electrostatic_energy(s.dirs()).unwrap();
        let r = random_rotation(&mut rng);
        let rotated: Vec<_> = s.dirs().iter().map(|d| r.apply(d)).collect();
        prop_assert!((electrostatic_energy(&rotated).unwrap() - e).abs() < 1e-9);
        let flipped: Vec<_> = s.dirs().iter().enumerate()
            .map(|(i, d)| if i % 3 == 0 { linalg::scale(d, -1.0) } else { *d })
            .collect();
        prop_assert_eq!(electrostatic_energy(&flipped).unwrap(), e);
    }

    #[test]
    fn condition_invariant_under_permutation(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_scheme(12, &mut rng);
        let k = condition_number(&s).unwrap();
        let mut dirs = s.dirs().to_vec();
        dirs.reverse();
        dirs.swap(0, 5);
        let k2 = condition_number(&GradientScheme::new("m", 1000.0, dirs).unwrap()).unwrap();
        prop_assert!((k - k2).abs() < 1e-8 * k);
    }

    #[test]
    fn condition_invariant_under_octahedral_rotations(seed in any::<u64>(), axis in 0usize..3, quarter in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_scheme(12, &mut rng);
        let k = condition_number(&s).unwrap();
        let angle = quarter as f64 * std::f64::consts::FRAC_PI_2;
        let r = match axis {
            0 => Rotation::from_euler_zyz(-std::f64::consts::FRAC_PI_2, angle, std::f64::consts::FRAC_PI_2),
            1 => Rotation::from_euler_zyz(0.0, angle, 0.0),
            _ => Rotation::from_euler_zyz(angle, 0.0, 0.0),
        };
        let moved: Vec<_> = s.dirs().iter().map(|d| r.apply(d)).collect();
        let k2 = condition_number(&GradientScheme::new("m", 1000.0, moved).unwrap()).unwrap();
        prop_assert!((k - k2).abs() < 1e-8 * k);
    }
}

/// With off-diagonal columns weighted by 2 the design basis is not
/// orthonormal for the Frobenius product, so a generic rotation changes κ.
/// Only rotations that permute and flip coordinate axes preserve it.
#[test]
fn generic_rotation_changes_condition_number() {
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let s = random_scheme(12, &mut rng);
    let k = condition_number(&s).unwrap();
    let r = random_rotation(&mut rng);
    let moved: Vec<_> = s.dirs().iter().map(|d| r.apply(d)).collect();
    let k2 = condition_number(&GradientScheme::new("m", 1000.0, moved).unwrap()).unwrap();
    assert!((k - k2).abs() > 1e-6 * k, "{k} vs {k2}");
}
