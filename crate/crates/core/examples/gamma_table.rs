//! Shell counts around a lattice point and the constant `gamma = 3^N - 1`.

use lattice_bernstein::mixing::{gamma_min, shell_count};

fn main() {
    println!("{:>2} {:>8} {:>12} {:>12} {:>12}", "N", "gamma", "u=1", "u=10", "u=100");
    for dim in 1..=6 {
        let ratio = |u: u64| shell_count(dim, u).unwrap() as f64 / (u as f64).powi(dim as i32 - 1);
        println!(
            "{dim:>2} {:>8} {:>12.3} {:>12.3} {:>12.3}",
            gamma_min(dim),
            ratio(1),
            ratio(10),
            ratio(100)
        );
    }
}
