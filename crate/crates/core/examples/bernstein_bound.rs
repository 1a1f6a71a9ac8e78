//! Bounded-field bound: fixed beta, tuned beta, and the effect of dependence.

use lattice_bernstein::bounds::{beta_limit, bernstein_bound, optimize_beta, FieldSpec};
use lattice_bernstein::lattice::make_blocking;
use lattice_bernstein::mixing::MixingModel;

fn main() {
    let n = [1000];
    let scheme = make_blocking(&n, &[10], &[10]).unwrap();
    let iid = FieldSpec::bounded(1, 1.0, 1.0, MixingModel::independent()).unwrap();

    let fixed = bernstein_bound(&iid, &n, &scheme, 0.001, 200.0).unwrap();
    println!("beta=0.001: value={:.4} expFactor={:.4}", fixed.value, fixed.exp_factor);
    println!("admissible beta < {:.6}", beta_limit(&iid, &n, &scheme).unwrap());

    for eps in [100.0, 200.0, 400.0, 800.0] {
        let opt = optimize_beta(&iid, &n, &scheme, eps).unwrap();
        println!(
            "eps={eps:>5}: beta*={:.6} beta0={:.6} value={:.4e}",
            opt.beta_star, opt.beta0, opt.result.value
        );
    }

    let mixing = MixingModel::exponential(0.25, 0.5).unwrap();
    let dependent = FieldSpec::bounded(1, 1.0, 1.0, mixing).unwrap();
    let n = [100_000];
    for q in [50u64, 200, 400] {
        let scheme = make_blocking(&n, &[20_000], &[q]).unwrap();
        let opt = optimize_beta(&dependent, &n, &scheme, 90_000.0).unwrap();
        println!(
            "Q={q:>3}: mixingFactor={:.4e} expFactor={:.4} value={:.4e} vacuous={}",
            opt.result.mixing_factor,
            opt.result.exp_factor,
            opt.result.value,
            opt.result.is_vacuous()
        );
    }
}
