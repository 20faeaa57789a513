//! Fully-connected stack shared by the FCN and the S-CNN readout head.
//!
//! Layer `j` stores its weight as an `out × in` row-major block followed by
//! `out` biases. Hidden layers apply the activation, the last is linear.

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};

use super::Activation;

pub(super) fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

pub(super) struct DenseTape {
    inputs: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
}

fn views<'a>(sizes: &[usize], params: &'a [f64], j: usize) -> (ArrayView2<'a, f64>, ArrayView1<'a, f64>) {
    let off: usize = param_count(&sizes[..=j]);
    let (n_in, n_out) = (sizes[j], sizes[j + 1]);
    let w = ArrayView2::from_shape((n_out, n_in), &params[off..off + n_out * n_in]).expect("layout");
    let b = ArrayView1::from(&params[off + n_out * n_in..off + n_out * n_in + n_out]);
    (w, b)
}

pub(super) fn forward(sizes: &[usize], params: &[f64], x: Array2<f64>, act: Activation) -> (Array2<f64>, DenseTape) {
    let last = sizes.len() - 2;
    let mut tape = DenseTape { inputs: Vec::with_capacity(last + 1), pre: Vec::with_capacity(last + 1) };
    let mut a = x;
    for j in 0..=last {
        let (w, b) = views(sizes, params, j);
        let mut z = a.dot(&w.t());
        z += &b;
        let out = if j < last { z.mapv(|v| act.apply(v)) } else { z.clone() };
        tape.inputs.push(a);
        tape.pre.push(z);
        a = out;
    }
    (a, tape)
}

/// Accumulates parameter gradients into `grad` (same layout as `params`)
/// and returns the gradient with respect to the stack input.
pub(super) fn backward(
    sizes: &[usize],
    params: &[f64],
    tape: &DenseTape,
    dout: Array2<f64>,
    act: Activation,
    grad: &mut [f64],
) -> Array2<f64> {
    let last = sizes.len() - 2;
    let mut d = dout;
    for j in (0..=last).rev() {
        if j < last {
            d.zip_mut_with(&tape.pre[j], |g, &z| *g *= act.derivative(z));
        }
        let (w, _) = views(sizes, params, j);
        let off: usize = param_count(&sizes[..=j]);
        let (n_in, n_out) = (sizes[j], sizes[j + 1]);
        let dw = d.t().dot(&tape.inputs[j]);
        for (g, v) in grad[off..off + n_out * n_in].iter_mut().zip(dw.iter()) {
            *g += v;
        }
        let db = d.sum_axis(Axis(0));
        for (g, v) in grad[off + n_out * n_in..off + n_out * n_in + n_out].iter_mut().zip(db.iter()) {
            *g += v;
        }
        d = d.dot(&w);
    }
    d
}
