//! Rotation of real harmonic coefficients through Wigner matrices.
//!
//! `d^ℓ_{m'm}(β)` comes from a three-term recursion in `ℓ` for each
//! `(m', m)` pair, seeded at `ℓ = max(|m|, |m'|)` where the closed-form sum
//! has a single term. The complex `D = e^{-im'α} d e^{-imγ}` is then
//! conjugated into the real basis.

use num_complex::Complex64;

use super::{Rotation, SHCoeffs};

fn ln_factorial(n: i64) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// Closed-form `d^j_{m'm}(β)` (sum over `s`); only used at the recursion
/// seeds where exactly one term survives.
fn wigner_d_explicit(j: i64, mp: i64, m: i64, beta: f64) -> f64 {
    let (sh, ch) = (0.5 * beta).sin_cos();
    let lnpre = 0.5 * (ln_factorial(j + mp) + ln_factorial(j - mp) + ln_factorial(j + m) + ln_factorial(j - m));
    let s_min = 0.max(m - mp);
    let s_max = (j + m).min(j - mp);
    let mut total = 0.0;
    for s in s_min..=s_max {
        let denom = ln_factorial(j + m - s) + ln_factorial(s) + ln_factorial(mp - m + s) + ln_factorial(j - mp - s);
        let sign = if (mp - m + s) % 2 == 0 { 1.0 } else { -1.0 };
        let pc = (2 * j + m - mp - 2 * s) as i32;
        let ps = (mp - m + 2 * s) as i32;
        total += sign * (lnpre - denom).exp() * ch.powi(pc) * sh.powi(ps);
    }
    total
}

/// Real `d^ℓ(β)` blocks for `ℓ < bandlimit`; block `ℓ` is row-major
/// `(2ℓ+1)²` indexed by `(m' + ℓ, m + ℓ)`.
pub fn wigner_small_d(bandlimit: usize, beta: f64) -> Vec<Vec<f64>> {
    let mut blocks: Vec<Vec<f64>> = (0..bandlimit).map(|l| vec![0.0; (2 * l + 1) * (2 * l + 1)]).collect();
    let cb = beta.cos();
    let lmax = bandlimit as i64 - 1;
    for mp in -lmax..=lmax {
        for m in -lmax..=lmax {
            let j0 = mp.abs().max(m.abs());
            let mut prev = 0.0;
            let mut cur = wigner_d_explicit(j0, mp, m, beta);
            let mut j = j0;
            loop {
                let w = (2 * j + 1) as usize;
                blocks[j as usize][(mp + j) as usize * w + (m + j) as usize] = cur;
                if j == lmax {
                    break;
                }
                let jf = j as f64;
                let (mf, mpf) = (m as f64, mp as f64);
                let next_norm = (((jf + 1.0).powi(2) - mf * mf) * ((jf + 1.0).powi(2) - mpf * mpf)).sqrt();
                let next = if j == 0 {
                    // only m = m' = 0 reaches here
                    cb * cur
                } else {
                    let a = cb - mf * mpf / (jf * (jf + 1.0));
                    let b = ((jf * jf - mf * mf) * (jf * jf - mpf * mpf)).sqrt() / (jf * (2.0 * jf + 1.0));
                    (jf + 1.0) * (2.0 * jf + 1.0) / next_norm * (a * cur - b * prev)
                };
                prev = cur;
                cur = next;
                j += 1;
            }
        }
    }
    blocks
}

/// Complex-to-real change of basis for degree `ℓ`: row `m_r + ℓ`, column
/// `m_c + ℓ`, such that `Y^real = U · Y^complex` (complex harmonics with
/// the Condon–Shortley phase).
fn real_basis_change(l: i64) -> Vec<Complex64> {
    let w = (2 * l + 1) as usize;
    let mut u = vec![Complex64::new(0.0, 0.0); w * w];
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let idx = |mr: i64, mc: i64| (mr + l) as usize * w + (mc + l) as usize;
    u[idx(0, 0)] = Complex64::new(1.0, 0.0);
    for m in 1..=l {
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        u[idx(m, -m)] = Complex64::new(r, 0.0);
        u[idx(m, m)] = Complex64::new(sign * r, 0.0);
        u[idx(-m, -m)] = Complex64::new(0.0, r);
        u[idx(-m, m)] = Complex64::new(0.0, -sign * r);
    }
    u
}

/// Real-basis rotation matrices for every degree `< bandlimit`; block `ℓ`
/// maps coefficients `a_ℓ` of `f` to those of `x ↦ f(R⁻¹x)`.
pub fn real_wigner_blocks(bandlimit: usize, rot: &Rotation) -> Vec<Vec<f64>> {
    let (alpha, beta, gamma) = rot.to_euler_zyz();
    let small = wigner_small_d(bandlimit, beta);
    (0..bandlimit)
        .map(|lu| {
            let l = lu as i64;
            let w = 2 * lu + 1;
            let d = &small[lu];
            let mut big = vec![Complex64::new(0.0, 0.0); w * w];
            for mp in -l..=l {
                for m in -l..=l {
                    let phase = Complex64::from_polar(1.0, -(mp as f64) * alpha - (m as f64) * gamma);
                    big[(mp + l) as usize * w + (m + l) as usize] = phase * d[(mp + l) as usize * w + (m + l) as usize];
                }
            }
            let u = real_basis_change(l);
            // conj(U) · D · Uᵀ
            let mut tmp = vec![Complex64::new(0.0, 0.0); w * w];
            for i in 0..w {
                for k in 0..w {
                    let uc = u[i * w + k].conj();
                    if uc.norm_sqr() == 0.0 {
                        continue;
                    }
                    for j in 0..w {
                        tmp[i * w + j] += uc * big[k * w + j];
                    }
                }
            }
            let mut out = vec![0.0; w * w];
            for i in 0..w {
                for j in 0..w {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for k in 0..w {
                        acc += tmp[i * w + k] * u[j * w + k];
                    }
                    out[i * w + j] = acc.re;
                }
            }
            out
        })
        .collect()
}

/// Coefficients of the rotated function `x ↦ f(R⁻¹x)`.
pub fn rotate_coeffs(coeffs: &SHCoeffs, rot: &Rotation) -> SHCoeffs {
    let blocks = real_wigner_blocks(coeffs.bandlimit(), rot);
    rotate_with_blocks(coeffs, &blocks)
}

pub fn rotate_with_blocks(coeffs: &SHCoeffs, blocks: &[Vec<f64>]) -> SHCoeffs {
    let mut out = SHCoeffs::zeros(coeffs.bandlimit());
    for l in 0..coeffs.bandlimit() {
        let w = 2 * l + 1;
        let src = coeffs.degree(l);
        let dst = out.degree_mut(l);
        let b = &blocks[l];
        for i in 0..w {
            dst[i] = (0..w).map(|j| b[i * w + j] * src[j]).sum();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recursion_matches_closed_form_at_low_degree() {
        for &beta in &[0.0, 0.3, 1.2, 2.9, std::f64::consts::PI] {
            let blocks = wigner_small_d(6, beta);
            for l in 0..6i64 {
                let w = (2 * l + 1) as usize;
                for mp in -l..=l {
                    for m in -l..=l {
                        let got = blocks[l as usize][(mp + l) as usize * w + (m + l) as usize];
                        let want = wigner_d_explicit(l, mp, m, beta);
                        assert!((got - want).abs() < 1e-12, "l={l} m'={mp} m={m} beta={beta}: {got} vs {want}");
                    }
                }
            }
        }
    }

    #[test]
    fn small_d_blocks_are_orthogonal() {
        let blocks = wigner_small_d(17, 1.1);
        for (l, b) in blocks.iter().enumerate() {
            let w = 2 * l + 1;
            for i in 0..w {
                for j in 0..w {
                    let dotp: f64 = (0..w).map(|k| b[i * w + k] * b[j * w + k]).sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((dotp - want).abs() < 1e-11, "l={l}");
                }
            }
        }
    }

    #[test]
    fn identity_rotation_is_identity() {
        let blocks = real_wigner_blocks(8, &Rotation::identity());
        for (l, b) in blocks.iter().enumerate() {
            let w = 2 * l + 1;
            for i in 0..w {
                for j in 0..w {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((b[i * w + j] - want).abs() < 1e-13);
                }
            }
        }
    }
}
