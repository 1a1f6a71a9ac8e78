//! Monte Carlo tail frequencies of a 2-D moving average against the bound.

use lattice_bernstein::fields::{field_spec, FieldModel, Kernel, Noise, Transform};
use lattice_bernstein::montecarlo::{auto_blocking, default_eps_grid, estimate_tail, verify};

fn main() {
    let kernel = Kernel::new(vec![3, 3], vec![0.05, 0.1, 0.05, 0.1, 0.4, 0.1, 0.05, 0.1, 0.05]).unwrap();
    let model = FieldModel::moving_average(kernel, Noise::Rademacher, Transform::Identity).unwrap();
    let spec = field_spec(&model).unwrap();
    println!("B={:?} sigma2={} mixing={:?}", spec.bound(), spec.sigma2(), spec.mixing());

    let n = [32, 32];
    let scheme = auto_blocking(&model, &n).unwrap();
    let grid = default_eps_grid(&model, &n, &scheme).unwrap();
    let workers = std::thread::available_parallelism().map_or(1, |w| w.get());
    let experiment = estimate_tail(&model, &n, &grid, 5_000, 42, workers).unwrap();
    print!("{}", verify(&experiment).to_table());
}
