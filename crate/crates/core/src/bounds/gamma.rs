//! Complete and upper incomplete gamma functions.

use std::f64::consts::PI;

use super::BoundError;

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

const MAX_ITER: usize = 1_000;
const TINY: f64 = 1e-300;

/// `ln Gamma(a)` for `a > 0` (Lanczos, g = 7).
pub fn ln_gamma(a: f64) -> f64 {
    if a < 0.5 {
        // reflection: Gamma(a) Gamma(1 - a) = pi / sin(pi a)
        return (PI / (PI * a).sin()).ln() - ln_gamma(1.0 - a);
    }
    let z = a - 1.0;
    let mut sum = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        sum += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + sum.ln()
}

/// `Gamma(a)` for `a > 0`.
pub fn gamma(a: f64) -> f64 {
    if a == a.floor() && a <= 171.0 {
        // exact factorial for small integers
        return (1..a as u64).map(|k| k as f64).product();
    }
    ln_gamma(a).exp()
}

fn check(a: f64, x: f64) -> Result<(), BoundError> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(BoundError::InvalidArgument(format!(
            "incomplete gamma needs a > 0, got a={a}"
        )));
    }
    if x.is_nan() || x < 0.0 {
        return Err(BoundError::InvalidArgument(format!(
            "incomplete gamma needs x >= 0, got x={x}"
        )));
    }
    Ok(())
}

/// Lower series: `sum_{n>=0} x^n / (a (a+1) ... (a+n))`, so that
/// `gamma_lower(a, x) = x^a e^{-x} * series`.
fn lower_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * f64::EPSILON {
            break;
        }
    }
    sum
}

/// Modified Lentz evaluation of the continued fraction
/// `1 / (x + 1 - a - 1(1-a)/(x + 3 - a - 2(2-a)/(x + 5 - a - ...)))`,
/// so that `Gamma(a, x) = x^a e^{-x} * cf`.
fn upper_fraction(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < f64::EPSILON {
            break;
        }
    }
    h
}

/// `ln Gamma(a, x)`, finite even where `Gamma(a, x)` underflows.
pub fn ln_upper_incomplete_gamma(a: f64, x: f64) -> Result<f64, BoundError> {
    check(a, x)?;
    if x == 0.0 {
        return Ok(ln_gamma(a));
    }
    if x.is_infinite() {
        return Ok(f64::NEG_INFINITY);
    }
    if x < a + 1.0 {
        let lower = (a * x.ln() - x + lower_series(a, x).ln()).exp();
        let full = gamma(a);
        Ok((full - lower).ln())
    } else {
        Ok(a * x.ln() - x + upper_fraction(a, x).ln())
    }
}

/// `Gamma(a, x) = int_x^inf t^(a-1) e^(-t) dt` for `a > 0`, `x >= 0`.
///
/// Series for `x < a + 1`, continued fraction otherwise.
pub fn upper_incomplete_gamma(a: f64, x: f64) -> Result<f64, BoundError> {
    if x == 0.0 {
        check(a, x)?;
        return Ok(gamma(a));
    }
    ln_upper_incomplete_gamma(a, x).map(f64::exp)
}
