//! Separable transforms between real harmonic coefficients of degree
//! `< L` and an equiangular grid of bandlimit `L' ≥ L`. On the grid
//! `Y_ℓm(θ_i, φ_j) = Λ_ℓm(θ_i) · T_m(φ_j)`, so synthesis is one Legendre
//! product per order followed by one Fourier product along the rings.
//! Since `T_m(φ + π) = (−1)^m T_m(φ)`, the Fourier product only needs the
//! first half of each ring, once for even and once for odd orders.
//!
//! Coefficients are stored order-major: each order's degrees `ℓ = |m|..L`
//! occupy one contiguous column range.

use std::ops::Range;

use ndarray::{s, Array2, ArrayView2};

use crate::sphere::{num_coeffs, real_sh_row, sh_index, SphGrid, SphereError};

#[derive(Debug)]
pub(crate) struct RingTransform {
    /// Rings, and samples per ring: `2L'`.
    n: usize,
    k: usize,
    /// Orders with even `|m|` come first.
    even: usize,
    /// Per order `m = −(L−1)..=L−1`: the column range of `ℓ = |m|..L`.
    cols: Vec<Range<usize>>,
    /// Degree of each column.
    degree: Vec<usize>,
    /// Standard harmonic index of each column.
    #[cfg_attr(not(test), allow(dead_code))]
    layout: Vec<usize>,
    /// Per order: `(L − |m|) × n`, entry `(ℓ − |m|, i)` is `Λ_ℓm(θ_i)`.
    legendre: Vec<Array2<f64>>,
    /// `legendre` with each ring column scaled by its solid-angle weight.
    weighted: Vec<Array2<f64>>,
    /// `(2L − 1) × n/2`: `cos(mφ_j)` for `m ≥ 0`, `sin(|m|φ_j)` below.
    fourier: Array2<f64>,
}

impl RingTransform {
    pub fn new(bandlimit: usize, grid_bandlimit: usize) -> Result<Self, SphereError> {
        let grid = SphGrid::new(grid_bandlimit.max(bandlimit))?;
        let n = 2 * grid.bandlimit();
        let l = bandlimit;
        let rows: Vec<Vec<f64>> = grid.thetas().iter().map(|t| real_sh_row(l, t.cos(), t.sin(), 0.0)).collect();
        let mut orders: Vec<i64> = (-(l as i64 - 1)..l as i64).collect();
        orders.sort_by_key(|m| m.rem_euclid(2));
        let even = orders.iter().filter(|m| m.rem_euclid(2) == 0).count();
        let mut cols = Vec::with_capacity(orders.len());
        let (mut degree, mut layout) = (Vec::new(), Vec::new());
        let mut legendre = Vec::with_capacity(orders.len());
        for &m in &orders {
            let a = m.unsigned_abs() as usize;
            cols.push(degree.len()..degree.len() + l - a);
            degree.extend(a..l);
            layout.extend((a..l).map(|deg| sh_index(deg, m)));
            legendre.push(Array2::from_shape_fn((l - a, n), |(q, i)| rows[i][sh_index(a + q, a as i64)]));
        }
        let fourier = Array2::from_shape_fn((orders.len(), n / 2), |(r, j)| {
            let m = orders[r];
            let phi = grid.phis()[j];
            if m >= 0 {
                (m as f64 * phi).cos()
            } else {
                (-m as f64 * phi).sin()
            }
        });
        let area: Vec<f64> = (0..n).map(|i| grid.area(i * n)).collect();
        let weighted = legendre
            .iter()
            .map(|leg| Array2::from_shape_fn(leg.raw_dim(), |(q, i)| leg[[q, i]] * area[i]))
            .collect();
        Ok(Self { n, k: num_coeffs(l), even, cols, degree, layout, legendre, weighted, fourier })
    }

    /// Degree of each coefficient column.
    pub fn degrees(&self) -> &[usize] {
        &self.degree
    }

    #[cfg(test)]
    fn grid_len(&self) -> usize {
        self.n * self.n
    }

    /// `[R, L²]` coefficients to `[R, n²]` ring-major samples.
    pub fn synth(&self, c: ArrayView2<f64>) -> Array2<f64> {
        self.expand(c, &self.legendre)
    }

    /// Adjoint of [`synth`](Self::synth).
    pub fn synth_adjoint(&self, v: ArrayView2<f64>) -> Array2<f64> {
        self.project(v, &self.legendre)
    }

    /// Quadrature analysis, `[R, n²]` samples to `[R, L²]` coefficients.
    pub fn analysis(&self, v: ArrayView2<f64>) -> Array2<f64> {
        self.project(v, &self.weighted)
    }

    /// Adjoint of [`analysis`](Self::analysis).
    pub fn analysis_adjoint(&self, c: ArrayView2<f64>) -> Array2<f64> {
        self.expand(c, &self.weighted)
    }

    fn expand(&self, c: ArrayView2<f64>, legendre: &[Array2<f64>]) -> Array2<f64> {
        let (r, n) = (c.nrows(), self.n);
        let mut ut = Vec::with_capacity(self.cols.len() * r * n);
        for (cols, leg) in self.cols.iter().zip(legendre) {
            let um = c.slice(s![.., cols.clone()]).dot(leg);
            ut.extend_from_slice(um.as_slice().expect("standard layout"));
        }
        let ut = ArrayView2::from_shape((self.cols.len(), r * n), &ut).expect("sized above");
        let (h, e) = (n / 2, self.even);
        let even = ut.slice(s![..e, ..]).t().dot(&self.fourier.slice(s![..e, ..]));
        let odd = ut.slice(s![e.., ..]).t().dot(&self.fourier.slice(s![e.., ..]));
        let (even, odd) = (even.as_slice().expect("owned"), odd.as_slice().expect("owned"));
        let mut out = Vec::with_capacity(r * n * n);
        for (a, b) in even.chunks_exact(h).zip(odd.chunks_exact(h)) {
            out.extend(a.iter().zip(b).map(|(x, y)| x + y));
            out.extend(a.iter().zip(b).map(|(x, y)| x - y));
        }
        Array2::from_shape_vec((r, n * n), out).expect("sized above")
    }

    fn project(&self, v: ArrayView2<f64>, legendre: &[Array2<f64>]) -> Array2<f64> {
        let (r, n) = (v.nrows(), self.n);
        let (h, e) = (n / 2, self.even);
        let v = v.as_standard_layout();
        let v = v.as_slice().expect("standard layout");
        let (mut sum, mut diff) = (Vec::with_capacity(r * n * h), Vec::with_capacity(r * n * h));
        for ring in v.chunks_exact(n) {
            let (lo, hi) = ring.split_at(h);
            sum.extend(lo.iter().zip(hi).map(|(x, y)| x + y));
            diff.extend(lo.iter().zip(hi).map(|(x, y)| x - y));
        }
        let sum = ArrayView2::from_shape((r * n, h), &sum).expect("sized above");
        let diff = ArrayView2::from_shape((r * n, h), &diff).expect("sized above");
        let even = self.fourier.slice(s![..e, ..]).dot(&sum.t());
        let odd = self.fourier.slice(s![e.., ..]).dot(&diff.t());
        let mut out = Array2::<f64>::zeros((r, self.k));
        for (mi, (cols, leg)) in self.cols.iter().zip(legendre).enumerate() {
            let row = if mi < e { even.row(mi) } else { odd.row(mi - e) };
            let um = row.into_shape_with_order((r, n)).expect("contiguous");
            out.slice_mut(s![.., cols.clone()]).assign(&um.dot(&leg.t()));
        }
        out
    }
}
