//! Band-limited real functions on the sphere.
//!
//! Sampling, harmonic transforms, rotations of coefficient vectors, power
//! spectra and dense sampling of tensor ADC profiles. All rotations are
//! active: rotating `f` by `R` produces `x ↦ f(R⁻¹x)`.

mod grid;
mod harmonics;
mod rotation;
mod wigner;

use std::sync::Arc;

use thiserror::Error;

use crate::tensor::{adc, DiffusionTensor};

pub use grid::SphGrid;
pub use harmonics::{
    num_coeffs, power_spectrum, real_sh_at, real_sh_row, sh_index, sht_forward, sht_inverse, SHCoeffs, SphSignal,
};
pub use rotation::{random_rotation, Rotation};
pub use wigner::{real_wigner_blocks, rotate_coeffs, rotate_with_blocks, wigner_small_d};

/// Default bandlimit for network inputs.
pub const DEFAULT_BANDLIMIT: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SphereError {
    #[error("bandlimit must be at least 2, got {0}")]
    InvalidBandlimit(usize),
    #[error("coefficients have bandlimit {coeffs} but the grid only {grid}")]
    BandlimitMismatch { coeffs: usize, grid: usize },
    #[error("expected {expected} samples, got {got}")]
    SampleCount { expected: usize, got: usize },
    #[error("bandlimit {bandlimit} needs L² coefficients, got {got}")]
    CoeffCount { bandlimit: usize, got: usize },
    #[error("signal contains non-finite samples")]
    NonFinite,
}

/// ADC profile `gᵀDg` sampled at every grid direction.
pub fn sample_adc(dt: &DiffusionTensor, grid: &Arc<SphGrid>) -> SphSignal {
    let values = grid.dirs().iter().map(|g| adc(dt, g)).collect();
    SphSignal::new(grid.clone(), values).expect("finite tensor gives finite samples")
}

/// Rotates a band-limited grid signal by transforming, rotating the
/// coefficients and resynthesizing on the same grid.
pub fn rotate_signal(signal: &SphSignal, rot: &Rotation) -> SphSignal {
    let c = rotate_coeffs(&sht_forward(signal), rot);
    sht_inverse(&c, signal.grid()).expect("same bandlimit")
}
