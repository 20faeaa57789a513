//! Spectral spherical CNN.
//!
//! Each layer transforms every input channel to harmonic coefficients,
//! mixes channels with one weight per degree (shared across orders, so
//! filters are isotropic and the layer commutes with rotations), returns
//! to the grid and applies bias plus the activation pointwise. The readout
//! takes the power spectrum of every output channel, divided by the sphere
//! area so each feature is the mean square of one degree's component, and
//! feeds it to a small dense head.
//!
//! Parameter layout: per layer `w[c_out][c_in][ℓ]` then `bias[c_out]`,
//! followed by the dense head `[C·L, hidden, 1]`.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{Array2, ArrayView2};

use super::{dense, ModelSpec};
use super::ring::RingTransform;
use crate::sphere::{SphGrid, SphereError};

/// Transforms for one bandlimit. Inputs live on the grid of bandlimit
/// `L`; bias and activation are applied on a possibly finer grid of
/// bandlimit `L' ≥ L` whose quadrature projects back onto the first `L²`
/// harmonics, which reduces aliasing from the nonlinearity.
#[derive(Debug)]
pub(crate) struct ScnnPlan {
    pub grid: Arc<SphGrid>,
    input: RingTransform,
    act: RingTransform,
    degree: Vec<usize>,
}

impl ScnnPlan {
    pub fn new(bandlimit: usize, act_bandlimit: usize) -> Result<Self, SphereError> {
        let input = RingTransform::new(bandlimit, bandlimit)?;
        let degree = input.degrees().to_vec();
        Ok(Self { grid: SphGrid::new(bandlimit)?, input, act: RingTransform::new(bandlimit, act_bandlimit)?, degree })
    }

    fn bandlimit(&self) -> usize {
        self.grid.bandlimit()
    }
}

pub(super) fn param_count(spec: &ModelSpec) -> usize {
    let l = spec.scnn_bandlimit;
    let conv: usize = spec.scnn_channels.windows(2).map(|w| w[0] * w[1] * l + w[1]).sum();
    conv + dense::param_count(&head_sizes(spec))
}

pub(super) fn head_sizes(spec: &ModelSpec) -> [usize; 3] {
    [spec.scnn_channels.last().copied().unwrap_or(0) * spec.scnn_bandlimit, spec.readout_hidden, 1]
}

fn layer_offsets(spec: &ModelSpec) -> Vec<usize> {
    let l = spec.scnn_bandlimit;
    let mut offs = vec![0];
    for w in spec.scnn_channels.windows(2) {
        offs.push(offs.last().unwrap() + w[0] * w[1] * l + w[1]);
    }
    offs
}

/// Fan-in of every parameter, used for He-style initialization; biases
/// report 0.
pub(super) fn fan_in(spec: &ModelSpec) -> Vec<usize> {
    let l = spec.scnn_bandlimit;
    let mut out = Vec::with_capacity(param_count(spec));
    for w in spec.scnn_channels.windows(2) {
        out.extend(std::iter::repeat_n(w[0], w[0] * w[1] * l));
        out.extend(std::iter::repeat_n(0, w[1]));
    }
    let head = head_sizes(spec);
    for w in head.windows(2) {
        out.extend(std::iter::repeat_n(w[0], w[0] * w[1]));
        out.extend(std::iter::repeat_n(0, w[1]));
    }
    out
}

struct LayerTape {
    coeffs_in: Array2<f64>,
    pre: Array2<f64>,
}

pub(super) struct ScnnTape {
    layers: Vec<LayerTape>,
    final_coeffs: Array2<f64>,
    head: dense::DenseTape,
}

/// `h[b·c_out + o, k] = Σ_i w[o][i][ℓ(k)] · c[b·c_in + i, k]`
pub(super) fn mix(c: &Array2<f64>, w: &[f64], c_in: usize, c_out: usize, degree: &[usize], l: usize) -> Array2<f64> {
    let k = c.ncols();
    let rows = c.nrows() / c_in;
    let mut h = Array2::<f64>::zeros((rows * c_out, k));
    let cs = c.as_slice().expect("standard layout");
    let hs = h.as_slice_mut().expect("standard layout");
    for b in 0..rows {
        for o in 0..c_out {
            let dst = &mut hs[(b * c_out + o) * k..(b * c_out + o + 1) * k];
            for i in 0..c_in {
                let src = &cs[(b * c_in + i) * k..(b * c_in + i + 1) * k];
                let wl = &w[(o * c_in + i) * l..(o * c_in + i + 1) * l];
                for (idx, (d, s)) in dst.iter_mut().zip(src).enumerate() {
                    *d += wl[degree[idx]] * s;
                }
            }
        }
    }
    h
}

pub(super) fn degrees(bandlimit: usize) -> Vec<usize> {
    (0..bandlimit).flat_map(|l| std::iter::repeat_n(l, 2 * l + 1)).collect()
}

pub(super) fn forward(
    spec: &ModelSpec,
    plan: &ScnnPlan,
    params: &[f64],
    x: ArrayView2<f64>,
) -> (Vec<f64>, ScnnTape) {
    let act = spec.activation;
    let l = plan.bandlimit();
    let offs = layer_offsets(spec);
    let mut grid_vals = x.to_owned();
    let mut layers = Vec::with_capacity(spec.scnn_channels.len() - 1);
    for (j, w) in spec.scnn_channels.windows(2).enumerate() {
        let (c_in, c_out) = (w[0], w[1]);
        let wts = &params[offs[j]..offs[j] + c_out * c_in * l];
        let bias = &params[offs[j] + c_out * c_in * l..offs[j + 1]];
        let transform = if j == 0 { &plan.input } else { &plan.act };
        let coeffs_in = transform.analysis(grid_vals.view());
        let h = mix(&coeffs_in, wts, c_in, c_out, &plan.degree, l);
        let mut pre = plan.act.synth(h.view());
        for (r, mut row) in pre.rows_mut().into_iter().enumerate() {
            let b = bias[r % c_out];
            row.mapv_inplace(|v| v + b);
        }
        grid_vals = pre.mapv(|v| act.apply(v));
        layers.push(LayerTape { coeffs_in, pre });
    }
    let c = *spec.scnn_channels.last().unwrap();
    let final_coeffs = plan.act.analysis(grid_vals.view());
    let rows = x.nrows();
    let mut feats = Array2::<f64>::zeros((rows, c * l));
    for b in 0..rows {
        for ch in 0..c {
            let row = final_coeffs.row(b * c + ch);
            for (idx, v) in row.iter().enumerate() {
                feats[[b, ch * l + plan.degree[idx]]] += v * v / (4.0 * PI);
            }
        }
    }
    let head = head_sizes(spec);
    let (out, head_tape) = dense::forward(&head, &params[offs[offs.len() - 1]..], feats, act);
    (out.column(0).to_vec(), ScnnTape { layers, final_coeffs, head: head_tape })
}

pub(super) fn backward(spec: &ModelSpec, plan: &ScnnPlan, params: &[f64], tape: &ScnnTape, dy: &[f64]) -> Vec<f64> {
    let act = spec.activation;
    let l = plan.bandlimit();
    let offs = layer_offsets(spec);
    let head_off = offs[offs.len() - 1];
    let mut grad = vec![0.0; params.len()];
    let head = head_sizes(spec);
    let dout = Array2::from_shape_vec((dy.len(), 1), dy.to_vec()).expect("column");
    let dfeat = dense::backward(&head, &params[head_off..], &tape.head, dout, act, &mut grad[head_off..]);

    let c = *spec.scnn_channels.last().unwrap();
    let mut dcoeffs = tape.final_coeffs.clone();
    for (r, mut row) in dcoeffs.rows_mut().into_iter().enumerate() {
        let (b, ch) = (r / c, r % c);
        for (idx, v) in row.iter_mut().enumerate() {
            *v *= 2.0 * dfeat[[b, ch * l + plan.degree[idx]]] / (4.0 * PI);
        }
    }
    let mut dgrid = plan.act.analysis_adjoint(dcoeffs.view());

    for (j, w) in spec.scnn_channels.windows(2).enumerate().rev() {
        let (c_in, c_out) = (w[0], w[1]);
        let lt = &tape.layers[j];
        let w_off = offs[j];
        let b_off = offs[j] + c_out * c_in * l;
        dgrid.zip_mut_with(&lt.pre, |g, &z| *g *= act.derivative(z));
        for (r, row) in dgrid.rows().into_iter().enumerate() {
            grad[b_off + r % c_out] += row.sum();
        }
        let dh = plan.act.synth_adjoint(dgrid.view());
        let k = dh.ncols();
        let rows = dh.nrows() / c_out;
        let dhs = dh.as_slice().expect("standard layout");
        let cs = lt.coeffs_in.as_slice().expect("standard layout");
        let wts = &params[w_off..b_off];
        let mut dc = Array2::<f64>::zeros((rows * c_in, k));
        let dcs = dc.as_slice_mut().expect("standard layout");
        for b in 0..rows {
            for o in 0..c_out {
                let src = &dhs[(b * c_out + o) * k..(b * c_out + o + 1) * k];
                for i in 0..c_in {
                    let cin = &cs[(b * c_in + i) * k..(b * c_in + i + 1) * k];
                    let wl = &wts[(o * c_in + i) * l..(o * c_in + i + 1) * l];
                    let gl = &mut grad[w_off + (o * c_in + i) * l..w_off + (o * c_in + i + 1) * l];
                    let dst = &mut dcs[(b * c_in + i) * k..(b * c_in + i + 1) * k];
                    for idx in 0..k {
                        let deg = plan.degree[idx];
                        gl[deg] += src[idx] * cin[idx];
                        dst[idx] += wl[deg] * src[idx];
                    }
                }
            }
        }
        if j > 0 {
            dgrid = plan.act.analysis_adjoint(dc.view());
        }
    }
    grad
}
