use lattice_bernstein::fields::{sample_field, stream_seed, FieldModel, Kernel, Noise, Transform};
use lattice_bernstein::lattice::{block_sums, make_blocking, partition, LatticeBox, LatticeField};
use lattice_bernstein::montecarlo::replicate_sums;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_scheme(rng: &mut ChaCha8Rng, dim: usize) -> (Vec<u64>, Vec<u64>, Vec<u64>) {
    let mut n = Vec::new();
    let mut p = Vec::new();
    let mut q = Vec::new();
    for _ in 0..dim {
        let nk = rng.gen_range(3..=40u64);
        let qk = rng.gen_range(1..=((nk - 1) / 2).max(1));
        let pk = rng.gen_range(qk..=(nk - 1 - qk).max(qk));
        n.push(nk);
        p.push(pk);
        q.push(qk);
    }
    (n, p, q)
}

#[test]
fn block_sums_reassemble_random_fields() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let dim = rng.gen_range(1..=3);
        let (n, p, q) = random_scheme(&mut rng, dim);
        let Ok(scheme) = make_blocking(&n, &p, &q) else { continue };
        let part = partition(&scheme);
        let field = LatticeField::from_fn(LatticeBox::cube(&n).unwrap(), |_| rng.gen_range(-1e3..1e3));
        let sums = block_sums(&field, &part).unwrap();
        let direct = field.sum();
        let scale = field.values().iter().map(|v| v.abs()).sum::<f64>();
        assert!((sums.total() - direct).abs() <= 1e-10 * scale.max(direct.abs()));
    }
}

#[test]
fn replicated_sums_match_block_decomposition() {
    let model = FieldModel::moving_average(Kernel::new(vec![3, 3], vec![0.1; 9]).unwrap(), Noise::Uniform, Transform::Clip(0.5)).unwrap();
    let n = [17, 23];
    let scheme = make_blocking(&n, &[3, 4], &[3, 2]).unwrap();
    let part = partition(&scheme);
    let sums = replicate_sums(&model, &n, 20, 8, 2, false).unwrap();
    for (r, s) in sums.iter().enumerate() {
        let field = sample_field(&model, &LatticeBox::cube(&n).unwrap(), stream_seed(8, r as u64)).unwrap();
        let decomposed = block_sums(&field, &part).unwrap().total();
        let scale = field.values().iter().map(|v| v.abs()).sum::<f64>();
        assert!((decomposed - s).abs() <= 1e-10 * scale.max(1.0));
    }
}
