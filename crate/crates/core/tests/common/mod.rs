#![allow(dead_code)]

/// Adaptive Simpson on `[a, b]` to absolute tolerance `tol`.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 18)
}

/// `int_b^inf k0 exp(-k1 z^tau) dz` by quadrature on `[b, b + L]` where the
/// integrand has fallen below `1e-300` relative to its start.
pub fn tail_integral_quadrature(k0: f64, k1: f64, tau: f64, b: f64) -> f64 {
    let f = |z: f64| k0 * (-k1 * z.powf(tau)).exp();
    // integrate in unit-ish chunks until contributions vanish
    let scale = (1.0 / k1).powf(1.0 / tau);
    let width = scale.max(1e-3);
    let mut total = 0.0;
    let mut lo = b;
    loop {
        let hi = lo + width;
        let piece = simpson(&f, lo, hi, 1e-12 * f(lo) * width);
        total += piece;
        if piece.abs() <= 1e-18 * total.abs() || f(hi) == 0.0 {
            break;
        }
        lo = hi;
    }
    total
}

/// `P(|sum of n fair signs| >= eps)` by enumeration of all `2^n` vectors.
pub fn rademacher_tail_exact(n: u32, eps: f64) -> f64 {
    let mut hits = 0u64;
    for mask in 0u64..(1 << n) {
        let plus = mask.count_ones() as i64;
        let sum = 2 * plus - n as i64;
        if (sum.abs() as f64) >= eps {
            hits += 1;
        }
    }
    hits as f64 / (1u64 << n) as f64
}

pub fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        ((a - b) / b).abs()
    }
}
