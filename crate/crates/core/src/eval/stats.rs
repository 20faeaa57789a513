//! Paired t-tests and the Student-t distribution.

use super::EvalError;

/// Smallest p-value reported; anything below is returned as 0 with
/// [`TTest::underflow`] set.
pub const P_FLOOR: f64 = 1e-300;

const CF_TOL: f64 = 1e-12;
const CF_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub t: f64,
    /// Two-sided.
    pub p: f64,
    pub df: usize,
    /// All differences were identical. `t` is then ±∞ (or 0 when the
    /// differences are all zero) and `p` is 0 (or 1).
    pub zero_variance: bool,
    pub underflow: bool,
}

/// Paired two-sided t-test on `d = a − b`.
pub fn paired_ttest(a: &[f64], b: &[f64]) -> Result<TTest, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch { left: a.len(), right: b.len() });
    }
    let n = a.len();
    if n < 2 {
        return Err(EvalError::TooFewSamples { need: 2, got: n });
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let df = n - 1;
    if d.iter().all(|&v| v == d[0]) {
        let (t, p) = if d[0] == 0.0 { (0.0, 1.0) } else { (f64::INFINITY.copysign(d[0]), 0.0) };
        return Ok(TTest { t, p, df, zero_variance: true, underflow: false });
    }
    let t = mean / (var.sqrt() / (n as f64).sqrt());
    let (p, underflow) = two_sided_p(t, df as f64);
    Ok(TTest { t, p, df, zero_variance: false, underflow })
}

/// `P(|T| ≥ |t|)` for `df` degrees of freedom, with an underflow flag.
pub fn two_sided_p(t: f64, df: f64) -> (f64, bool) {
    if t == 0.0 {
        return (1.0, false);
    }
    if !t.is_finite() {
        return (0.0, true);
    }
    let t2 = t * t;
    // x = df/(df+t²) and 1 − x, each formed without cancellation
    let x = df / (df + t2);
    let y = t2 / (df + t2);
    let ln_p = ln_reg_inc_beta(df / 2.0, 0.5, x, y);
    if ln_p < P_FLOOR.ln() {
        (0.0, true)
    } else {
        (ln_p.exp().min(1.0), false)
    }
}

/// Student-t CDF. Exactly 0.5 at `t = 0`.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    if t == 0.0 {
        return 0.5;
    }
    let (p, _) = two_sided_p(t, df);
    if t > 0.0 {
        1.0 - 0.5 * p
    } else {
        0.5 * p
    }
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn reg_inc_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    ln_reg_inc_beta(a, b, x, 1.0 - x).exp()
}

/// `ln I_x(a, b)` with `y = 1 − x` supplied separately.
fn ln_reg_inc_beta(a: f64, b: f64, x: f64, y: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if y <= 0.0 {
        return 0.0;
    }
    let ln_front = a * x.ln() + b * y.ln() - ln_beta(a, b);
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front + (beta_cf(a, b, x) / a).ln()
    } else {
        let tail = (ln_front + (beta_cf(b, a, y) / b).ln()).exp();
        (-tail).ln_1p()
    }
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Lanczos approximation, g = 7, nine terms.
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut s = C[0];
    for (i, c) in C.iter().enumerate().skip(1) {
        s += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + s.ln()
}

/// Continued fraction for the incomplete beta, modified Lentz.
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_TOL {
            break;
        }
    }
    h
}
