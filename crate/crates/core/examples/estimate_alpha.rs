//! Empirical lower bound for alpha between two sites at growing distance.

use lattice_bernstein::fields::{field_spec, sample_points, stream_seed, FieldModel, Kernel, Noise, Transform};
use lattice_bernstein::mixing::{estimate_alpha_lower, ThresholdEvents};

fn main() {
    let model = FieldModel::moving_average(Kernel::line(vec![0.2, 0.6, 0.2]).unwrap(), Noise::Uniform, Transform::Identity).unwrap();
    let declared = field_spec(&model).unwrap();
    let reps = 20_000;
    for d in 0..=4i64 {
        let (i, j) = (vec![vec![0]], vec![vec![d]]);
        let (mut si, mut sj) = (Vec::new(), Vec::new());
        for r in 0..reps {
            let seed = stream_seed(1, r);
            si.push(sample_points(&model, &i, seed).unwrap());
            sj.push(sample_points(&model, &j, seed).unwrap());
        }
        let lower = estimate_alpha_lower(&si, &sj, &ThresholdEvents::default()).unwrap();
        println!("d={d}: estimate {lower:.4}, declared {}", declared.mixing().alpha(d as u64));
    }
}
