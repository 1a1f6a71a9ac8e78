//! Index-set geometry on `Z^N`.
//!
//! Boxes `[lo, hi]` with the `d_inf` (max-coordinate) metric, the big-block /
//! small-block scheme `(P, Q, R, n*)`, and the concrete rectangles `I(l, u)`
//! the scheme cuts the enlarged cube `I_{n*} = [1, n*]` into.
//!
//! Conventions used throughout:
//!
//! * Type index `l` runs over `1..=2^N`. Bit `k` of `l - 1` selects the short
//!   `Q_k` interval on axis `k`; `l = 1` is therefore the all-`P` type.
//! * Block index `u` runs over `1..=R_1 * ... * R_N` in row-major order over
//!   the per-axis block indices (last axis fastest).
//! * Inside a macro block the `P_k` interval comes first, then the `Q_k` one.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LatticeError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("empty box on axis {axis}: lo={lo} > hi={hi}")]
    EmptyBox { axis: usize, lo: i64, hi: i64 },
    #[error("blocking condition violated on axis {axis}: {reason} (n={n}, P={p}, Q={q}); requires 1 <= Q_k <= P_k < P_k + Q_k < n_k")]
    InfeasibleBlocking {
        axis: usize,
        reason: &'static str,
        n: u64,
        p: u64,
        q: u64,
    },
    #[error("no value at lattice point {point:?}")]
    IncompleteData { point: Vec<i64> },
    #[error("{what} does not fit in 128 bits")]
    Overflow { what: &'static str },
    #[error("field has {got} values, box holds {expected}")]
    ValueCount { expected: u128, got: usize },
}

pub type Result<T> = std::result::Result<T, LatticeError>;

fn same_dim(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(LatticeError::DimensionMismatch { left, right });
    }
    Ok(())
}

/// `d_inf(s, t) = max_k |s_k - t_k|`.
pub fn d_inf(s: &[i64], t: &[i64]) -> Result<u64> {
    same_dim(s.len(), t.len())?;
    Ok(s.iter()
        .zip(t)
        .map(|(a, b)| a.abs_diff(*b))
        .max()
        .unwrap_or(0))
}

/// A nonempty axis-aligned box `{ s : lo <= s <= hi }` in `Z^N`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeBox {
    lo: Vec<i64>,
    hi: Vec<i64>,
}

impl LatticeBox {
    pub fn new(lo: Vec<i64>, hi: Vec<i64>) -> Result<Self> {
        same_dim(lo.len(), hi.len())?;
        if lo.is_empty() {
            return Err(LatticeError::ZeroDimension);
        }
        for (axis, (&l, &h)) in lo.iter().zip(&hi).enumerate() {
            if l > h {
                return Err(LatticeError::EmptyBox { axis, lo: l, hi: h });
            }
        }
        Ok(Self { lo, hi })
    }

    /// The cube `I_n = [e_N, n]`.
    pub fn cube(n: &[u64]) -> Result<Self> {
        let hi = n.iter().map(|&v| v as i64).collect();
        Self::new(vec![1; n.len()], hi)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[i64] {
        &self.lo
    }

    pub fn hi(&self) -> &[i64] {
        &self.hi
    }

    /// Edge length (number of lattice points) along `axis`.
    pub fn side(&self, axis: usize) -> u64 {
        (self.hi[axis] - self.lo[axis]) as u64 + 1
    }

    pub fn sides(&self) -> Vec<u64> {
        (0..self.dim()).map(|k| self.side(k)).collect()
    }

    pub fn cardinality(&self) -> u128 {
        self.sides().iter().map(|&s| s as u128).product()
    }

    /// `max { d_inf(s, t) : s, t in box }`, i.e. the longest edge minus one.
    pub fn diameter(&self) -> u64 {
        self.sides().into_iter().max().unwrap_or(1) - 1
    }

    pub fn contains(&self, point: &[i64]) -> bool {
        point.len() == self.dim()
            && point
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(p, (l, h))| l <= p && p <= h)
    }

    pub fn contains_box(&self, other: &LatticeBox) -> bool {
        other.dim() == self.dim() && self.contains(&other.lo) && self.contains(&other.hi)
    }

    /// Box grown by `radius[k]` on both sides of axis `k`.
    pub fn enlarged(&self, radius: &[u64]) -> Result<Self> {
        same_dim(self.dim(), radius.len())?;
        let lo = self.lo.iter().zip(radius).map(|(l, r)| l - *r as i64).collect();
        let hi = self.hi.iter().zip(radius).map(|(h, r)| h + *r as i64).collect();
        Self::new(lo, hi)
    }

    pub fn intersection(&self, other: &LatticeBox) -> Option<LatticeBox> {
        if self.dim() != other.dim() {
            return None;
        }
        let lo: Vec<i64> = self.lo.iter().zip(&other.lo).map(|(a, b)| *a.max(b)).collect();
        let hi: Vec<i64> = self.hi.iter().zip(&other.hi).map(|(a, b)| *a.min(b)).collect();
        LatticeBox::new(lo, hi).ok()
    }

    /// Row-major offset of `point` (last axis fastest), or `None` outside.
    pub fn offset_of(&self, point: &[i64]) -> Option<usize> {
        if !self.contains(point) {
            return None;
        }
        let mut offset = 0usize;
        for k in 0..self.dim() {
            offset = offset * self.side(k) as usize + (point[k] - self.lo[k]) as usize;
        }
        Some(offset)
    }

    /// All points in row-major order.
    pub fn points(&self) -> PointIter<'_> {
        PointIter {
            domain: self,
            next: Some(self.lo.clone()),
        }
    }
}

pub struct PointIter<'a> {
    domain: &'a LatticeBox,
    next: Option<Vec<i64>>,
}

impl Iterator for PointIter<'_> {
    type Item = Vec<i64>;

    fn next(&mut self) -> Option<Vec<i64>> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        for k in (0..succ.len()).rev() {
            if succ[k] < self.domain.hi[k] {
                succ[k] += 1;
                self.next = Some(succ);
                break;
            }
            succ[k] = self.domain.lo[k];
        }
        Some(current)
    }
}

/// Set distance `min { d_inf(s, t) : s in a, t in b }`.
///
/// For boxes this factorises: the per-axis interval gap (0 when the intervals
/// overlap), maximised over axes.
pub fn box_distance(a: &LatticeBox, b: &LatticeBox) -> Result<u64> {
    same_dim(a.dim(), b.dim())?;
    Ok((0..a.dim())
        .map(|k| {
            let gap = (b.lo[k] - a.hi[k]).max(a.lo[k] - b.hi[k]);
            gap.max(0) as u64
        })
        .max()
        .unwrap_or(0))
}

/// Big-block / small-block lengths for the cube `I_n` plus derived data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockingScheme {
    n: Vec<u64>,
    p: Vec<u64>,
    q: Vec<u64>,
    r: Vec<u64>,
    n_star: Vec<u64>,
    big_n: u128,
    big_p: u128,
    big_r: u128,
}

/// Build a blocking scheme, checking `1 <= Q_k <= P_k < P_k + Q_k < n_k` per axis.
///
/// `R_k = ceil(n_k / (P_k + Q_k))`, so `(R_k - 1)(P_k + Q_k) < n_k <= R_k (P_k + Q_k) = n*_k`.
pub fn make_blocking(n: &[u64], p: &[u64], q: &[u64]) -> Result<BlockingScheme> {
    same_dim(n.len(), p.len())?;
    same_dim(n.len(), q.len())?;
    if n.is_empty() {
        return Err(LatticeError::ZeroDimension);
    }
    for axis in 0..n.len() {
        let (nk, pk, qk) = (n[axis], p[axis], q[axis]);
        let reason = if qk < 1 {
            Some("Q_k >= 1 violated")
        } else if qk > pk {
            Some("Q_k <= P_k violated")
        } else if pk + qk >= nk {
            Some("P_k + Q_k < n_k violated")
        } else {
            None
        };
        if let Some(reason) = reason {
            return Err(LatticeError::InfeasibleBlocking {
                axis: axis + 1,
                reason,
                n: nk,
                p: pk,
                q: qk,
            });
        }
    }
    let r: Vec<u64> = n
        .iter()
        .zip(p.iter().zip(q))
        .map(|(nk, (pk, qk))| nk.div_ceil(pk + qk))
        .collect();
    let n_star: Vec<u64> = r
        .iter()
        .zip(p.iter().zip(q))
        .map(|(rk, (pk, qk))| rk * (pk + qk))
        .collect();
    Ok(BlockingScheme {
        big_n: checked_product(n, "product of n")?,
        big_p: checked_product(p, "product of P")?,
        big_r: checked_product(&r, "product of R")?,
        n: n.to_vec(),
        p: p.to_vec(),
        q: q.to_vec(),
        r,
        n_star,
    })
}

fn checked_product(v: &[u64], what: &'static str) -> Result<u128> {
    v.iter().try_fold(1u128, |acc, &x| {
        acc.checked_mul(x as u128).ok_or(LatticeError::Overflow { what })
    })
}

impl BlockingScheme {
    pub fn dim(&self) -> usize {
        self.n.len()
    }
    pub fn n(&self) -> &[u64] {
        &self.n
    }
    pub fn p(&self) -> &[u64] {
        &self.p
    }
    pub fn q(&self) -> &[u64] {
        &self.q
    }
    pub fn r(&self) -> &[u64] {
        &self.r
    }
    pub fn n_star(&self) -> &[u64] {
        &self.n_star
    }
    /// `|I_n| = n_1 * ... * n_N`.
    pub fn big_n(&self) -> u128 {
        self.big_n
    }
    pub fn big_p(&self) -> u128 {
        self.big_p
    }
    pub fn big_r(&self) -> u128 {
        self.big_r
    }
    pub fn q_min(&self) -> u64 {
        *self.q.iter().min().expect("nonempty")
    }
    pub fn p_max(&self) -> u64 {
        *self.p.iter().max().expect("nonempty")
    }
    pub fn type_count(&self) -> usize {
        1usize << self.dim()
    }
}

/// The rectangles `I(l, u)` tiling `I_{n*}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPartition {
    scheme: BlockingScheme,
    blocks: usize,
    rects: Vec<LatticeBox>,
}

/// Cut `I_{n*}` into `2^N * R` rectangles.
pub fn partition(scheme: &BlockingScheme) -> BlockPartition {
    let dim = scheme.dim();
    let blocks = scheme.big_r as usize;
    let mut rects = Vec::with_capacity(scheme.type_count() * blocks);
    for l in 0..scheme.type_count() {
        let mut block_idx = vec![0u64; dim];
        for _ in 0..blocks {
            let mut lo = Vec::with_capacity(dim);
            let mut hi = Vec::with_capacity(dim);
            for k in 0..dim {
                let start = block_idx[k] * (scheme.p[k] + scheme.q[k]) + 1;
                let (a, len) = if (l >> k) & 1 == 0 {
                    (start, scheme.p[k])
                } else {
                    (start + scheme.p[k], scheme.q[k])
                };
                lo.push(a as i64);
                hi.push((a + len - 1) as i64);
            }
            rects.push(LatticeBox { lo, hi });
            // row-major increment, last axis fastest
            for k in (0..dim).rev() {
                block_idx[k] += 1;
                if block_idx[k] < scheme.r[k] {
                    break;
                }
                block_idx[k] = 0;
            }
        }
    }
    BlockPartition {
        scheme: scheme.clone(),
        blocks,
        rects,
    }
}

impl BlockPartition {
    pub fn scheme(&self) -> &BlockingScheme {
        &self.scheme
    }

    pub fn type_count(&self) -> usize {
        self.scheme.type_count()
    }

    pub fn block_count(&self) -> usize {
        self.blocks
    }

    /// `I(l, u)` with 1-based `l` and `u`.
    pub fn rect(&self, l: usize, u: usize) -> &LatticeBox {
        assert!(l >= 1 && l <= self.type_count(), "type index out of range");
        assert!(u >= 1 && u <= self.blocks, "block index out of range");
        &self.rects[(l - 1) * self.blocks + (u - 1)]
    }

    /// `(l, u, I(l, u))` sorted by `(l, u)`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &LatticeBox)> {
        self.rects
            .iter()
            .enumerate()
            .map(move |(i, b)| (i / self.blocks + 1, i % self.blocks + 1, b))
    }

    pub fn len(&self) -> usize {
        self.rects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rects.is_empty()
    }

    /// The covered box `I_{n*}`.
    pub fn covered(&self) -> LatticeBox {
        LatticeBox::cube(&self.scheme.n_star).expect("valid scheme")
    }

    /// Text dump, one `l u lo_1..lo_N hi_1..hi_N` line per rectangle.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (l, u, rect) in self.iter() {
            write!(out, "{l} {u}").unwrap();
            for v in rect.lo.iter().chain(&rect.hi) {
                write!(out, " {v}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Real values on a box, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeField {
    domain: LatticeBox,
    values: Vec<f64>,
}

impl LatticeField {
    pub fn new(domain: LatticeBox, values: Vec<f64>) -> Result<Self> {
        if domain.cardinality() != values.len() as u128 {
            return Err(LatticeError::ValueCount {
                expected: domain.cardinality(),
                got: values.len(),
            });
        }
        Ok(Self { domain, values })
    }

    pub fn from_fn(domain: LatticeBox, mut f: impl FnMut(&[i64]) -> f64) -> Self {
        let values = domain.points().map(|p| f(&p)).collect();
        Self { domain, values }
    }

    pub fn domain(&self) -> &LatticeBox {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, point: &[i64]) -> Option<f64> {
        self.domain.offset_of(point).map(|i| self.values[i])
    }

    /// Sum over all points, row-major.
    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Sum over the points of `region` (must lie inside the domain).
    pub fn sum_over(&self, region: &LatticeBox) -> Result<f64> {
        if !self.domain.contains_box(region) {
            let point = region
                .points()
                .find(|p| !self.domain.contains(p))
                .unwrap_or_else(|| region.lo.clone());
            return Err(LatticeError::IncompleteData { point });
        }
        Ok(region
            .points()
            .map(|p| self.values[self.domain.offset_of(&p).expect("inside")])
            .sum())
    }
}

/// Block sums `S(l, u)` and their running totals `T(l, r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSums {
    types: usize,
    blocks: usize,
    sums: Vec<f64>,
    cumulative: Vec<f64>,
}

impl BlockSums {
    /// `S(l, u)`, 1-based.
    pub fn s(&self, l: usize, u: usize) -> f64 {
        self.sums[(l - 1) * self.blocks + (u - 1)]
    }

    /// `T(l, r) = S(l, 1) + ... + S(l, r)`, with `T(l, 0) = 0`.
    pub fn t(&self, l: usize, r: usize) -> f64 {
        if r == 0 {
            return 0.0;
        }
        self.cumulative[(l - 1) * self.blocks + (r - 1)]
    }

    pub fn type_count(&self) -> usize {
        self.types
    }

    pub fn block_count(&self) -> usize {
        self.blocks
    }

    /// `sum_l T(l, R)`.
    pub fn total(&self) -> f64 {
        (1..=self.types).map(|l| self.t(l, self.blocks)).sum()
    }
}

/// Sum `values` over every rectangle of `part`.
///
/// `values` must cover `I_n`. Points of `I_{n*}` the field does not cover are
/// zero-filled; covered points are used as given.
pub fn block_sums(values: &LatticeField, part: &BlockPartition) -> Result<BlockSums> {
    let scheme = part.scheme();
    same_dim(values.domain.dim(), scheme.dim())?;
    let cube = LatticeBox::cube(scheme.n())?;
    if !values.domain.contains_box(&cube) {
        let point = cube
            .points()
            .find(|p| !values.domain.contains(p))
            .expect("some point missing");
        return Err(LatticeError::IncompleteData { point });
    }
    let types = part.type_count();
    let blocks = part.block_count();
    let mut sums = Vec::with_capacity(part.len());
    for (_, _, rect) in part.iter() {
        let s = match rect.intersection(&values.domain) {
            Some(live) => values.sum_over(&live)?,
            None => 0.0,
        };
        sums.push(s);
    }
    let mut cumulative = sums.clone();
    for l in 0..types {
        for u in 1..blocks {
            cumulative[l * blocks + u] += cumulative[l * blocks + u - 1];
        }
    }
    Ok(BlockSums {
        types,
        blocks,
        sums,
        cumulative,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bx(lo: &[i64], hi: &[i64]) -> LatticeBox {
        LatticeBox::new(lo.to_vec(), hi.to_vec()).unwrap()
    }

    #[test]
    fn d_inf_examples() {
        assert_eq!(d_inf(&[0, 0], &[0, 0]).unwrap(), 0);
        assert_eq!(d_inf(&[1, 5], &[4, 3]).unwrap(), 3);
        assert_eq!(d_inf(&[1, 1, 1], &[2, 2, 9]).unwrap(), 8);
        assert!(matches!(
            d_inf(&[1], &[1, 2]),
            Err(LatticeError::DimensionMismatch { .. })
        ));
    }

    fn brute_distance(a: &LatticeBox, b: &LatticeBox) -> u64 {
        a.points()
            .flat_map(|s| b.points().map(move |t| d_inf(&s, &t).unwrap()))
            .min()
            .unwrap()
    }

    #[test]
    fn box_distance_examples() {
        let a = bx(&[1, 1], &[3, 3]);
        assert_eq!(box_distance(&a, &a).unwrap(), 0);
        assert_eq!(box_distance(&bx(&[1], &[3]), &bx(&[6], &[9])).unwrap(), 3);
        let (a, b) = (bx(&[1, 1], &[2, 2]), bx(&[5, 1], &[6, 2]));
        assert_eq!(brute_distance(&a, &b), 3);
        assert_eq!(box_distance(&a, &b).unwrap(), 3);
        assert!(box_distance(&bx(&[1], &[2]), &a).is_err());
    }

    #[test]
    fn make_blocking_examples() {
        let s = make_blocking(&[10, 10], &[3, 3], &[2, 2]).unwrap();
        assert_eq!(s.r(), &[2, 2]);
        assert_eq!(s.n_star(), &[10, 10]);
        assert_eq!((s.big_p(), s.q_min(), s.p_max()), (9, 2, 3));

        let s = make_blocking(&[7], &[3], &[3]).unwrap();
        assert_eq!((s.r(), s.n_star()), (&[2u64][..], &[12u64][..]));

        match make_blocking(&[5], &[2], &[3]) {
            Err(LatticeError::InfeasibleBlocking { axis, reason, .. }) => {
                assert_eq!(axis, 1);
                assert!(reason.contains("Q_k <= P_k"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(make_blocking(&[6], &[3], &[3]).is_err());
        assert!(make_blocking(&[6], &[3], &[0]).is_err());
        match make_blocking(&[20, 6], &[3, 3], &[2, 3]) {
            Err(LatticeError::InfeasibleBlocking { axis, .. }) => assert_eq!(axis, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn partition_one_dimensional_example() {
        let part = partition(&make_blocking(&[5], &[2], &[1]).unwrap());
        assert_eq!(part.rect(1, 1), &bx(&[1], &[2]));
        assert_eq!(part.rect(2, 1), &bx(&[3], &[3]));
        assert_eq!(part.rect(1, 2), &bx(&[4], &[5]));
        assert_eq!(part.rect(2, 2), &bx(&[6], &[6]));
        assert_eq!(part.covered(), bx(&[1], &[6]));
        assert_eq!(part.dump(), "1 1 1 2\n1 2 4 5\n2 1 3 3\n2 2 6 6\n");
    }

    #[test]
    fn partition_two_dimensional_shapes() {
        let part = partition(&make_blocking(&[10, 10], &[3, 3], &[2, 2]).unwrap());
        assert_eq!(part.len(), 16);
        for u in 1..=4 {
            assert_eq!(part.rect(1, u).sides(), vec![3, 3]);
            // bit 0 set: Q on axis 1
            assert_eq!(part.rect(2, u).sides(), vec![2, 3]);
            assert_eq!(part.rect(3, u).sides(), vec![3, 2]);
            assert_eq!(part.rect(4, u).sides(), vec![2, 2]);
        }
        // row-major blocks: u=2 moves along the last axis
        assert_eq!(part.rect(1, 2), &bx(&[1, 6], &[3, 8]));
        assert_eq!(part.rect(1, 3), &bx(&[6, 1], &[8, 3]));
    }

    #[test]
    fn block_sums_of_ones() {
        let part = partition(&make_blocking(&[5], &[2], &[1]).unwrap());
        let star = part.covered();
        let field = LatticeField::from_fn(star, |_| 1.0);
        let sums = block_sums(&field, &part).unwrap();
        assert_eq!((sums.s(1, 1), sums.s(1, 2)), (2.0, 2.0));
        assert_eq!((sums.s(2, 1), sums.s(2, 2)), (1.0, 1.0));
        assert_eq!((sums.t(1, 2), sums.t(2, 2), sums.t(1, 0)), (4.0, 2.0, 0.0));
        assert_eq!(sums.total(), 6.0);
    }

    #[test]
    fn block_sums_zero_fill_outside_cube() {
        let part = partition(&make_blocking(&[5], &[2], &[1]).unwrap());
        let field = LatticeField::from_fn(LatticeBox::cube(&[5]).unwrap(), |_| 1.0);
        let sums = block_sums(&field, &part).unwrap();
        // point 6 is not covered by the field
        assert_eq!((sums.s(2, 1), sums.s(2, 2)), (1.0, 0.0));
        assert_eq!(sums.total(), field.sum());
    }

    #[test]
    fn block_sums_zero_field_and_missing_data() {
        let part = partition(&make_blocking(&[10, 10], &[3, 3], &[2, 2]).unwrap());
        let zero = LatticeField::from_fn(LatticeBox::cube(&[10, 10]).unwrap(), |_| 0.0);
        let sums = block_sums(&zero, &part).unwrap();
        assert!((1..=4).all(|l| (0..=4).all(|r| sums.t(l, r) == 0.0)));

        let short = LatticeField::from_fn(LatticeBox::cube(&[10, 9]).unwrap(), |_| 1.0);
        assert!(matches!(
            block_sums(&short, &part),
            Err(LatticeError::IncompleteData { .. })
        ));
    }

    #[test]
    fn point_iteration_is_row_major() {
        let b = bx(&[0, 5], &[1, 6]);
        let pts: Vec<_> = b.points().collect();
        assert_eq!(pts, vec![vec![0, 5], vec![0, 6], vec![1, 5], vec![1, 6]]);
        for (i, p) in pts.iter().enumerate() {
            assert_eq!(b.offset_of(p), Some(i));
        }
    }

    fn scheme_strategy() -> impl Strategy<Value = (Vec<u64>, Vec<u64>, Vec<u64>)> {
        (1usize..=3).prop_flat_map(|dim| {
            proptest::collection::vec((1u64..6, 0u64..5, 1u64..8), dim).prop_map(|axes| {
                let mut n = Vec::new();
                let mut p = Vec::new();
                let mut q = Vec::new();
                for (qk, extra, slack) in axes {
                    let pk = qk + extra;
                    n.push(pk + qk + slack);
                    p.push(pk);
                    q.push(qk);
                }
                (n, p, q)
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn partition_tiles_n_star((n, p, q) in scheme_strategy()) {
            let scheme = make_blocking(&n, &p, &q).unwrap();
            for k in 0..n.len() {
                prop_assert!((scheme.r()[k] - 1) * (p[k] + q[k]) < n[k]);
                prop_assert!(n[k] <= scheme.n_star()[k]);
            }
            let part = partition(&scheme);
            let star = part.covered();
            let mut hits = vec![0u8; star.cardinality() as usize];
            for (l, _, rect) in part.iter() {
                for k in 0..n.len() {
                    let want = if ((l - 1) >> k) & 1 == 0 { p[k] } else { q[k] };
                    prop_assert_eq!(rect.side(k), want);
                }
                prop_assert!(rect.cardinality() <= scheme.big_p());
                prop_assert!(rect.diameter() < scheme.p_max());
                for pt in rect.points() {
                    let idx = star.offset_of(&pt);
                    prop_assert!(idx.is_some());
                    hits[idx.unwrap()] += 1;
                }
            }
            prop_assert!(hits.iter().all(|&h| h == 1));
        }

        #[test]
        fn same_type_rects_are_separated((n, p, q) in scheme_strategy()) {
            let scheme = make_blocking(&n, &p, &q).unwrap();
            let part = partition(&scheme);
            for l in 1..=part.type_count() {
                for u in 1..=part.block_count() {
                    for v in (u + 1)..=part.block_count() {
                        let d = box_distance(part.rect(l, u), part.rect(l, v)).unwrap();
                        prop_assert!(d > scheme.q_min());
                    }
                }
            }
        }

        #[test]
        fn box_distance_matches_brute_force(
            a in proptest::collection::vec((-4i64..4, 0i64..3), 2),
            b in proptest::collection::vec((-4i64..4, 0i64..3), 2),
        ) {
            let mk = |v: &Vec<(i64, i64)>| bx(
                &v.iter().map(|x| x.0).collect::<Vec<_>>(),
                &v.iter().map(|x| x.0 + x.1).collect::<Vec<_>>(),
            );
            let (a, b) = (mk(&a), mk(&b));
            prop_assert_eq!(box_distance(&a, &b).unwrap(), brute_distance(&a, &b));
        }
    }
}
