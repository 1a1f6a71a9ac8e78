/// Golden-section minimisation of a unimodal `f` on `[lo, hi]`.
///
/// Stops once the bracket is narrower than `rel_tol` times its midpoint (or
/// after `max_iter` reductions) and returns the best interior point seen.
pub fn golden_section(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, rel_tol: f64, max_iter: usize) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut best = if fc <= fd { (c, fc) } else { (d, fd) };
    for _ in 0..max_iter {
        if (b - a) <= rel_tol * 0.5 * (a.abs() + b.abs()) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
            if fc <= best.1 {
                best = (c, fc);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
            if fd < best.1 {
                best = (d, fd);
            }
        }
    }
    best
}
