//! Sample a clipped 2-D moving average and write it as CSV to stdout.

use lattice_bernstein::fields::{sample_field, write_csv, FieldModel, Kernel, Noise, Transform};
use lattice_bernstein::lattice::LatticeBox;

fn main() {
    let kernel = Kernel::new(vec![3, 3], vec![1.0; 9]).unwrap();
    let model = FieldModel::moving_average(kernel, Noise::Uniform, Transform::Clip(2.0)).unwrap();
    let field = sample_field(&model, &LatticeBox::cube(&[8, 8]).unwrap(), 2024).unwrap();
    write_csv(&field, std::io::stdout().lock()).unwrap();
}
