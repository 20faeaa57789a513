use super::GradientScheme;
use crate::linalg::{self, Vec3};

/// Angle between two axes, folding antipodes: `min(∠(u,v), ∠(u,−v))`.
pub fn folded_angle(u: &Vec3, v: &Vec3) -> f64 {
    let a = linalg::normalize(u).unwrap_or(*u);
    let b = linalg::normalize(v).unwrap_or(*v);
    // half-angle form stays accurate for nearly parallel axes
    let angle = 2.0 * linalg::norm(&linalg::sub(&a, &b)).atan2(linalg::norm(&linalg::add(&a, &b)));
    angle.min(std::f64::consts::PI - angle)
}

/// Minimum-cost assignment of every row to a distinct column for a
/// `rows × cols` cost matrix with `rows ≤ cols` (Hungarian method with
/// potentials). Returns the column chosen for each row.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let m = cost[0].len();
    assert!(n <= m, "hungarian needs rows <= cols");
    // 1-based arrays; index 0 is the virtual start column
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=m {
        if p[j] != 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

/// For each target direction, the index of its partner in `dense`,
/// minimizing the total folded angular distance over injective
/// assignments.
pub fn match_subset(dense: &GradientScheme, target: &GradientScheme) -> Vec<usize> {
    assert!(dense.len() >= target.len(), "dense scheme must be at least as large as target");
    let cost: Vec<Vec<f64>> = target
        .dirs()
        .iter()
        .map(|t| dense.dirs().iter().map(|d| folded_angle(t, d)).collect())
        .collect();
    hungarian(&cost)
}

/// Total folded angle of an assignment produced by [`match_subset`].
pub fn match_subset_cost(dense: &GradientScheme, target: &GradientScheme, idx: &[usize]) -> f64 {
    target
        .dirs()
        .iter()
        .zip(idx)
        .map(|(t, &i)| folded_angle(t, &dense.dirs()[i]))
        .sum()
}
