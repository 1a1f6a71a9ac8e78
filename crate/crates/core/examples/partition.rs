//! Big/small block partition of a 10 x 10 cube and the block-sum identity.

use lattice_bernstein::lattice::{block_sums, make_blocking, partition, LatticeBox, LatticeField};

fn main() {
    let n = [10, 10];
    let scheme = make_blocking(&n, &[3, 3], &[2, 2]).expect("valid blocking");
    println!(
        "R={:?} n*={:?} bigP={} qMin={} pMax={}",
        scheme.r(),
        scheme.n_star(),
        scheme.big_p(),
        scheme.q_min(),
        scheme.p_max()
    );
    let part = partition(&scheme);
    print!("{}", part.dump());

    let field = LatticeField::from_fn(LatticeBox::cube(&n).unwrap(), |s| (s[0] * 7 + s[1] * 3) as f64 % 5.0 - 2.0);
    let sums = block_sums(&field, &part).unwrap();
    for l in 1..=sums.type_count() {
        println!("T({l}, R) = {}", sums.t(l, sums.block_count()));
    }
    println!("sum of T = {}, direct sum = {}", sums.total(), field.sum());
}
