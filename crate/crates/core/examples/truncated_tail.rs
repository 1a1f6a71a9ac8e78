//! Unbounded field with a Gaussian-type tail: truncation level search.

use lattice_bernstein::bounds::{ext_bernstein_bound, optimize_beta_extended, optimize_truncation, FieldSpec, TailParams};
use lattice_bernstein::lattice::make_blocking;
use lattice_bernstein::mixing::MixingModel;

fn main() {
    let tail = TailParams::new(2.0, 0.5, 2.0).unwrap();
    let spec = FieldSpec::tailed(1, 1.0, tail, MixingModel::independent()).unwrap();
    let n = [10_000];
    let scheme = make_blocking(&n, &[1], &[1]).unwrap();
    let eps = 5000.0;

    for b in [1.0, 2.0, 4.0, 8.0] {
        let opt = optimize_beta_extended(&spec, &n, &scheme, eps, b).unwrap();
        println!("B={b}: truncation={:.3e} value={:.3e}", opt.result.truncation_term, opt.result.value);
    }
    let best = optimize_truncation(&spec, &n, &scheme, eps).unwrap();
    println!("grid optimum B*={} beta*={:.3e} value={:.3e}", best.trunc_b, best.beta_star, best.result.value);

    let fixed = ext_bernstein_bound(&spec, &n, &scheme, 1e-3, eps, 2.0).unwrap();
    println!("B=2 beta=1e-3: feasible={} value={:.3e}", fixed.feasible, fixed.value);
}
