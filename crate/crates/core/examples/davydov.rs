//! Exact alpha of a discrete pair and both sides of the covariance inequality.

use lattice_bernstein::mixing::{davydov_check, JointTable};

fn main() {
    // xi and eta agree with probability 0.8
    let table = JointTable::from_cells(&[(-1.0, -1.0, 0.4), (-1.0, 1.0, 0.1), (1.0, -1.0, 0.1), (1.0, 1.0, 0.4)]).unwrap();
    println!("Cov = {}, alpha = {}", table.covariance(), table.alpha().unwrap());
    for (p, q, r) in [(2.0, 2.0, f64::INFINITY), (4.0, 4.0, 2.0), (f64::INFINITY, f64::INFINITY, 1.0)] {
        let c = davydov_check(&table, p, q, r).unwrap();
        println!("p={p} q={q} r={r}: |Cov|={:.3} <= {:.3} ({})", c.lhs, c.rhs, c.holds);
    }
}
