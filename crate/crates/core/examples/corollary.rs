//! Exponential mixing along n = (m, m): the rule-based blocking and the
//! first-factor exponent.

use lattice_bernstein::bounds::{corollary_bound, default_blocking, FieldSpec};
use lattice_bernstein::mixing::MixingModel;

fn main() {
    let spec = FieldSpec::bounded(2, 1.0, 1.0, MixingModel::exponential(0.25, 1.0).unwrap()).unwrap();
    for m in [100u64, 1_000, 5_000, 10_000, 100_000] {
        let rule = default_blocking(&[m, m]);
        match corollary_bound(&spec, &[m, m], 0.05 * (m * m) as f64, 1.0) {
            Ok(c) => println!(
                "m={m:>6}: P=Q={:>6} ln(first exponent)={:>8.2} value={:.3e} surrogate={:.3e}",
                rule.p[0], c.ln_first_factor_exponent, c.result.value, c.denominator_surrogate
            ),
            Err(e) => println!("m={m:>6}: {e}"),
        }
    }
}
