//! Stationary random fields with known `B`, `sigma^2`, mixing and tail.
//!
//! Every model draws its randomness from a counter-based generator: the noise
//! at lattice point `t` under seed `k` is a pure hash of `(k, t)`. Sampling is
//! therefore independent of traversal order, overlapping boxes agree, and a
//! field can be evaluated at a single point without touching its neighbours.
//!
//! Moving averages `Z(s) = sum_o w(o) eps(s + o - m)` with a kernel of side
//! `2 m_k + 1` on axis `k` depend on noise within `d_inf` radius `max m_k`, so
//! they are exactly `2 max m_k`-dependent.

use std::io::Write;

use serde::Deserialize;
use thiserror::Error;

use crate::bounds::{BoundError, FieldSpec, TailParams};
use crate::lattice::{LatticeBox, LatticeError, LatticeField};
use crate::mixing::MixingModel;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("kernel side {side} on axis {axis} is even; sides must be 2m+1 (pad with a zero tap to centre it)")]
    MisalignedKernel { axis: usize, side: u64 },
    #[error("invalid field model: {0}")]
    InvalidModel(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Bound(#[from] BoundError),
}

pub type Result<T> = std::result::Result<T, FieldError>;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replication `r` derived from a base seed.
pub fn stream_seed(seed: u64, r: u64) -> u64 {
    mix64(mix64(seed ^ GOLDEN).wrapping_add(r.wrapping_mul(GOLDEN)))
}

/// 64 random bits attached to a lattice point.
#[inline]
pub fn point_bits(seed: u64, point: &[i64]) -> u64 {
    let mut h = mix64(seed.wrapping_add(GOLDEN));
    for &c in point {
        h = mix64(h ^ (c as u64).wrapping_mul(0xD1B5_4A32_D192_ED03));
    }
    h
}

#[inline]
fn unit(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Symmetric noise on `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Noise {
    /// `+-1` with probability 1/2 each.
    Rademacher,
    /// Uniform on `[-1, 1]`.
    Uniform,
}

impl Noise {
    pub fn bound(self) -> f64 {
        1.0
    }

    pub fn variance(self) -> f64 {
        match self {
            Noise::Rademacher => 1.0,
            Noise::Uniform => 1.0 / 3.0,
        }
    }

    #[inline]
    fn draw(self, bits: u64) -> f64 {
        match self {
            Noise::Rademacher => {
                if bits >> 63 == 0 {
                    -1.0
                } else {
                    1.0
                }
            }
            Noise::Uniform => 2.0 * unit(bits) - 1.0,
        }
    }

    fn parse(name: &str) -> Result<Self> {
        match name {
            "rademacher" => Ok(Noise::Rademacher),
            "uniform" => Ok(Noise::Uniform),
            other => Err(FieldError::InvalidModel(format!(
                "unknown noise '{other}' (expected rademacher or uniform)"
            ))),
        }
    }
}

/// Moving-average weights on a box of side `sides[k]` per axis, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    sides: Vec<u64>,
    weights: Vec<f64>,
}

impl Kernel {
    pub fn new(sides: Vec<u64>, weights: Vec<f64>) -> Result<Self> {
        if sides.is_empty() || sides.contains(&0) {
            return Err(FieldError::InvalidModel("kernel sides must be >= 1".into()));
        }
        let count: u64 = sides.iter().product();
        if count as usize != weights.len() {
            return Err(FieldError::InvalidModel(format!(
                "kernel of sides {sides:?} needs {count} weights, got {}",
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(FieldError::InvalidModel("kernel weights must be finite".into()));
        }
        Ok(Self { sides, weights })
    }

    /// One-dimensional kernel.
    pub fn line(weights: Vec<f64>) -> Result<Self> {
        Self::new(vec![weights.len() as u64], weights)
    }

    /// Pads every even axis with a trailing zero tap so the kernel has odd
    /// sides. `(1/2, 1/2)` becomes `(1/2, 1/2, 0)`, i.e. radius 1.
    pub fn centered_pad(&self) -> Self {
        let mut sides = self.sides.clone();
        let mut weights = self.weights.clone();
        for axis in 0..sides.len() {
            if sides[axis] % 2 == 1 {
                continue;
            }
            let inner: u64 = sides[axis + 1..].iter().product();
            let outer: u64 = sides[..axis].iter().product();
            let side = sides[axis];
            let mut next = Vec::with_capacity(weights.len() + (outer * inner) as usize);
            for o in 0..outer {
                let start = (o * side * inner) as usize;
                next.extend_from_slice(&weights[start..start + (side * inner) as usize]);
                next.extend(std::iter::repeat_n(0.0, inner as usize));
            }
            sides[axis] += 1;
            weights = next;
        }
        Self { sides, weights }
    }

    pub fn dim(&self) -> usize {
        self.sides.len()
    }

    pub fn sides(&self) -> &[u64] {
        &self.sides
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn l1(&self) -> f64 {
        self.weights.iter().map(|w| w.abs()).sum()
    }

    pub fn l2_squared(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum()
    }

    fn check_aligned(&self) -> Result<()> {
        match self.sides.iter().position(|s| s % 2 == 0) {
            Some(axis) => Err(FieldError::MisalignedKernel {
                axis: axis + 1,
                side: self.sides[axis],
            }),
            None => Ok(()),
        }
    }

    /// Per-axis radius `m_k` (side `2 m_k + 1`).
    pub fn radii(&self) -> Vec<u64> {
        self.sides.iter().map(|s| (s - 1) / 2).collect()
    }

    pub fn radius(&self) -> u64 {
        self.radii().into_iter().max().unwrap_or(0)
    }

    /// Offsets relative to the centre, in the order of `weights`.
    fn offsets(&self) -> Vec<Vec<i64>> {
        let radii = self.radii();
        let lo: Vec<i64> = radii.iter().map(|&m| -(m as i64)).collect();
        let hi: Vec<i64> = self.sides.iter().zip(&radii).map(|(&s, &m)| s as i64 - 1 - m as i64).collect();
        LatticeBox::new(lo, hi).expect("kernel sides are >= 1").points().collect()
    }
}

/// Post-processing of a moving average.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transform {
    Identity,
    /// `z -> max(-c, min(c, z))`.
    Clip(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldKind {
    /// `+-b` fair signs.
    IidRademacher { b: f64 },
    /// Uniform on `[-b, b]`.
    IidUniform { b: f64 },
    /// Bounded moving average of bounded symmetric noise.
    MovingAverage {
        kernel: Kernel,
        noise: Noise,
        transform: Transform,
    },
    /// The same linear field described only through its sub-Gaussian tail.
    MovingAverageSubgaussian { kernel: Kernel, noise: Noise },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldModel {
    dim: u32,
    kind: FieldKind,
}

impl FieldModel {
    pub fn new(dim: u32, kind: FieldKind) -> Result<Self> {
        if dim == 0 {
            return Err(FieldError::InvalidModel("dimension must be >= 1".into()));
        }
        match &kind {
            FieldKind::IidRademacher { b } | FieldKind::IidUniform { b } => {
                if !(*b >= 0.0 && b.is_finite()) {
                    return Err(FieldError::InvalidModel(format!("B must be finite and >= 0, got {b}")));
                }
            }
            FieldKind::MovingAverage { kernel, transform, .. } => {
                check_kernel_dim(kernel, dim)?;
                if let Transform::Clip(c) = transform {
                    if !(*c > 0.0 && c.is_finite()) {
                        return Err(FieldError::InvalidModel(format!("clip level must be > 0, got {c}")));
                    }
                }
            }
            FieldKind::MovingAverageSubgaussian { kernel, .. } => check_kernel_dim(kernel, dim)?,
        }
        Ok(Self { dim, kind })
    }

    pub fn iid_rademacher(dim: u32, b: f64) -> Result<Self> {
        Self::new(dim, FieldKind::IidRademacher { b })
    }

    pub fn iid_uniform(dim: u32, b: f64) -> Result<Self> {
        Self::new(dim, FieldKind::IidUniform { b })
    }

    pub fn moving_average(kernel: Kernel, noise: Noise, transform: Transform) -> Result<Self> {
        Self::new(kernel.dim() as u32, FieldKind::MovingAverage { kernel, noise, transform })
    }

    pub fn moving_average_subgaussian(kernel: Kernel, noise: Noise) -> Result<Self> {
        Self::new(kernel.dim() as u32, FieldKind::MovingAverageSubgaussian { kernel, noise })
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }

    fn kernel(&self) -> Option<&Kernel> {
        match &self.kind {
            FieldKind::MovingAverage { kernel, .. } | FieldKind::MovingAverageSubgaussian { kernel, .. } => Some(kernel),
            _ => None,
        }
    }

    /// Largest `d_inf` at which two sites can be dependent.
    pub fn dependence_range(&self) -> u64 {
        self.kernel().map_or(0, |k| 2 * k.radius())
    }
}

fn check_kernel_dim(kernel: &Kernel, dim: u32) -> Result<()> {
    if kernel.dim() != dim as usize {
        return Err(FieldError::InvalidModel(format!(
            "kernel has {} axes, field has dimension {dim}",
            kernel.dim()
        )));
    }
    Ok(())
}

/// The parameters the bounds need, certified by construction.
pub fn field_spec(model: &FieldModel) -> Result<FieldSpec> {
    let dim = model.dim;
    let spec = match &model.kind {
        FieldKind::IidRademacher { b } => FieldSpec::bounded(dim, *b, b * b, MixingModel::independent())?,
        FieldKind::IidUniform { b } => FieldSpec::bounded(dim, *b, b * b / 3.0, MixingModel::independent())?,
        FieldKind::MovingAverage {
            kernel,
            noise,
            transform,
        } => {
            kernel.check_aligned()?;
            let mixing = MixingModel::m_dependent(2 * kernel.radius());
            let linear_b = kernel.l1() * noise.bound();
            // clipping is a contraction towards 0, so the linear variance stays an upper bound
            let sigma2 = kernel.l2_squared() * noise.variance();
            let b = match transform {
                Transform::Identity => linear_b,
                Transform::Clip(c) => linear_b.min(*c),
            };
            FieldSpec::bounded(dim, b, sigma2.min(b * b), mixing)?
        }
        FieldKind::MovingAverageSubgaussian { kernel, noise } => {
            kernel.check_aligned()?;
            let l2 = kernel.l2_squared();
            if l2 == 0.0 {
                return Err(FieldError::InvalidModel("sub-Gaussian model needs a nonzero kernel".into()));
            }
            let proxy = noise.bound();
            let tail = TailParams::new(2.0, 1.0 / (2.0 * l2 * proxy * proxy), 2.0)?;
            FieldSpec::tailed(dim, l2 * noise.variance(), tail, MixingModel::m_dependent(2 * kernel.radius()))?
        }
    };
    Ok(spec)
}

/// Per-model evaluation plan, shared by the buffered and streaming paths so
/// both produce identical values.
struct Plan<'a> {
    model: &'a FieldModel,
    offsets: Vec<Vec<i64>>,
}

impl<'a> Plan<'a> {
    fn new(model: &'a FieldModel) -> Result<Self> {
        let offsets = match model.kernel() {
            Some(k) => {
                k.check_aligned()?;
                k.offsets()
            }
            None => Vec::new(),
        };
        Ok(Self { model, offsets })
    }

    #[inline]
    fn at(&self, point: &[i64], mut noise_at: impl FnMut(&[i64]) -> f64, scratch: &mut [i64]) -> f64 {
        match &self.model.kind {
            FieldKind::IidRademacher { b } => b * noise_at(point),
            FieldKind::IidUniform { b } => b * noise_at(point),
            FieldKind::MovingAverage { kernel, transform, .. } => {
                let z = self.convolve(kernel, point, &mut noise_at, scratch);
                match transform {
                    Transform::Identity => z,
                    Transform::Clip(c) => z.clamp(-c, *c),
                }
            }
            FieldKind::MovingAverageSubgaussian { kernel, .. } => self.convolve(kernel, point, &mut noise_at, scratch),
        }
    }

    #[inline]
    fn convolve(&self, kernel: &Kernel, point: &[i64], noise_at: &mut impl FnMut(&[i64]) -> f64, scratch: &mut [i64]) -> f64 {
        let mut z = 0.0;
        for (w, off) in kernel.weights.iter().zip(&self.offsets) {
            if *w == 0.0 {
                continue;
            }
            for k in 0..point.len() {
                scratch[k] = point[k] + off[k];
            }
            z += w * noise_at(scratch);
        }
        z
    }

    fn noise(&self) -> Noise {
        match &self.model.kind {
            FieldKind::IidRademacher { .. } => Noise::Rademacher,
            FieldKind::IidUniform { .. } => Noise::Uniform,
            FieldKind::MovingAverage { noise, .. } | FieldKind::MovingAverageSubgaussian { noise, .. } => *noise,
        }
    }
}

fn check_box_dim(model: &FieldModel, domain: &LatticeBox) -> Result<()> {
    if domain.dim() != model.dim as usize {
        return Err(LatticeError::DimensionMismatch {
            left: model.dim as usize,
            right: domain.dim(),
        }
        .into());
    }
    Ok(())
}

/// Field values on `domain` under `seed`.
pub fn sample_field(model: &FieldModel, domain: &LatticeBox, seed: u64) -> Result<LatticeField> {
    check_box_dim(model, domain)?;
    let plan = Plan::new(model)?;
    let noise = plan.noise();
    let radii = model.kernel().map(|k| k.radii()).unwrap_or_else(|| vec![0; domain.dim()]);
    let outer = domain.enlarged(&radii)?;
    let buffer: Vec<f64> = outer.points().map(|t| noise.draw(point_bits(seed, &t))).collect();
    let mut scratch = vec![0i64; domain.dim()];
    let values = domain
        .points()
        .map(|s| {
            plan.at(
                &s,
                |t| buffer[outer.offset_of(t).expect("enlarged box covers the kernel window")],
                &mut scratch,
            )
        })
        .collect();
    Ok(LatticeField::new(domain.clone(), values)?)
}

/// `Z(point)` under `seed`, computed from the hash directly.
pub fn value_at(model: &FieldModel, point: &[i64], seed: u64) -> Result<f64> {
    if point.len() != model.dim as usize {
        return Err(LatticeError::DimensionMismatch {
            left: model.dim as usize,
            right: point.len(),
        }
        .into());
    }
    let plan = Plan::new(model)?;
    let noise = plan.noise();
    let mut scratch = vec![0i64; point.len()];
    Ok(plan.at(point, |t| noise.draw(point_bits(seed, t)), &mut scratch))
}

/// `sum_{s in domain} Z(s)`, either from a materialised noise buffer or
/// point by point without one. Both paths add the same values in the same
/// order and return identical results.
pub fn field_sum(model: &FieldModel, domain: &LatticeBox, seed: u64, streaming: bool) -> Result<f64> {
    if !streaming {
        return Ok(sample_field(model, domain, seed)?.sum());
    }
    check_box_dim(model, domain)?;
    let plan = Plan::new(model)?;
    let noise = plan.noise();
    let mut scratch = vec![0i64; domain.dim()];
    Ok(domain
        .points()
        .map(|s| plan.at(&s, |t| noise.draw(point_bits(seed, t)), &mut scratch))
        .sum())
}

/// `Z` at the given points under `seed`.
pub fn sample_points(model: &FieldModel, points: &[Vec<i64>], seed: u64) -> Result<Vec<f64>> {
    points.iter().map(|p| value_at(model, p, seed)).collect()
}

/// CSV with header `s_1,...,s_N,value`, one row per lattice point.
pub fn write_csv(field: &LatticeField, mut out: impl Write) -> std::io::Result<()> {
    let dim = field.domain().dim();
    let header: Vec<String> = (1..=dim).map(|k| format!("s_{k}")).collect();
    writeln!(out, "{},value", header.join(","))?;
    for (s, v) in field.domain().points().zip(field.values()) {
        for c in &s {
            write!(out, "{c},")?;
        }
        writeln!(out, "{v}")?;
    }
    Ok(())
}

/// Config-file shape: keys `kind`, `N`, `B`, `kernel`, `noise`, `m`, `clip`.
///
/// `kernel` is a flat row-major list of `(2m+1)^N` weights. When `m` is
/// absent it is inferred from the list length; an even one-dimensional list
/// is accepted and centred by a trailing zero tap.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    pub kind: String,
    #[serde(rename = "N", alias = "dim", default = "one")]
    pub dim: u32,
    #[serde(rename = "B", default)]
    pub b: Option<f64>,
    #[serde(default)]
    pub kernel: Option<Vec<f64>>,
    #[serde(default)]
    pub noise: Option<String>,
    #[serde(default)]
    pub m: Option<u64>,
    #[serde(default)]
    pub clip: Option<f64>,
}

fn one() -> u32 {
    1
}

impl FieldConfig {
    fn kernel(&self) -> Result<Kernel> {
        let weights = self
            .kernel
            .clone()
            .ok_or_else(|| FieldError::InvalidModel(format!("kind '{}' needs key 'kernel'", self.kind)))?;
        let dim = self.dim;
        if let Some(m) = self.m {
            return Kernel::new(vec![2 * m + 1; dim as usize], weights);
        }
        if dim == 1 {
            return Ok(Kernel::line(weights)?.centered_pad());
        }
        let side = (weights.len() as f64).powf(1.0 / dim as f64).round() as u64;
        if side.pow(dim) as usize != weights.len() {
            return Err(FieldError::InvalidModel(format!(
                "{} kernel weights do not form a cube in dimension {dim}; give 'm'",
                weights.len()
            )));
        }
        Kernel::new(vec![side; dim as usize], weights)
    }

    fn noise(&self) -> Result<Noise> {
        Noise::parse(self.noise.as_deref().unwrap_or("rademacher"))
    }
}

impl TryFrom<FieldConfig> for FieldModel {
    type Error = FieldError;

    fn try_from(cfg: FieldConfig) -> Result<Self> {
        let b = || cfg.b.unwrap_or(1.0);
        match cfg.kind.as_str() {
            "iid-rademacher" => FieldModel::iid_rademacher(cfg.dim, b()),
            "iid-uniform" => FieldModel::iid_uniform(cfg.dim, b()),
            "ma-bounded" => {
                let transform = cfg.clip.map_or(Transform::Identity, Transform::Clip);
                FieldModel::moving_average(cfg.kernel()?, cfg.noise()?, transform)
            }
            "ma-subgaussian" => FieldModel::moving_average_subgaussian(cfg.kernel()?, cfg.noise()?),
            other => Err(FieldError::InvalidModel(format!(
                "unknown kind '{other}' (expected iid-rademacher, iid-uniform, ma-bounded or ma-subgaussian)"
            ))),
        }
    }
}

impl<'de> Deserialize<'de> for FieldModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let cfg = FieldConfig::deserialize(d)?;
        FieldModel::try_from(cfg).map_err(serde::de::Error::custom)
    }
}
