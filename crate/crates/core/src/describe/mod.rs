//! Descriptor extraction, distances and nearest-neighbour matching.

mod brief;
mod patch;
mod pattern;

pub use brief::{brief, quantize_angle, steered_brief, ANGLE_BINS};
pub use patch::{patch_descriptor, PATCH_SIDE};
pub use pattern::{make_pattern, SamplingPattern, PATTERN_RADIUS, PATTERN_SEED, PATTERN_SIGMA};

use std::fmt;
use std::str::FromStr;

use crate::scalar::Scalar;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum DescribeError {
    #[error("sampling around ({x}, {y}) leaves the image")]
    OutOfBounds { x: i64, y: i64 },
    #[error("candidate set is empty")]
    EmptyCandidateSet,
    #[error("unknown descriptor {name:?}; registered: {}", REGISTERED.join(", "))]
    UnknownDescriptor { name: String },
    #[error(
        "cannot compare {left} descriptors of dimension {left_dim} with {right} descriptors of dimension {right_dim}"
    )]
    IncompatibleDistance {
        left: &'static str,
        left_dim: usize,
        right: &'static str,
        right_dim: usize,
    },
    #[error("descriptor payload of length {got} does not match dimension {dim}")]
    DimensionMismatch { dim: usize, got: usize },
}

/// Descriptor names accepted by [`DescriptorChoice::from_str`].
pub const REGISTERED: &[&str] = &["brief", "orb", "patch"];

/// Compared by Hamming distance.
pub const BINARY_BITS: usize = 256;
/// Length of the float patch descriptor.
pub const FLOAT_DIM: usize = 256;

/// 256 comparison bits, bit `i` at byte `i / 8`, position `i % 8` (LSB first).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct BinaryDescriptor(pub [u8; BINARY_BITS / 8]);

impl BinaryDescriptor {
    pub fn bit(&self, i: usize) -> bool {
        self.0[i / 8] >> (i % 8) & 1 == 1
    }

    pub fn set_bit(&mut self, i: usize) {
        self.0[i / 8] |= 1 << (i % 8);
    }

    pub fn hamming(&self, other: &Self) -> u32 {
        hamming_bytes(&self.0, &other.0)
    }
}

/// Real-valued descriptor; unit L2 norm unless degenerate (all zero).
#[derive(Debug, Clone, PartialEq)]
pub struct FloatDescriptor<T>(pub Vec<T>);

impl<T: Scalar> FloatDescriptor<T> {
    /// Zero-variance input maps to the all-zero vector.
    pub fn is_degenerate(&self) -> bool {
        self.0.iter().all(|v| *v == T::zero())
    }

    pub fn norm(&self) -> T {
        self.0.iter().fold(T::zero(), |acc, &v| acc + v * v).sqrt()
    }

    pub fn euclidean(&self, other: &Self) -> T {
        euclidean(&self.0, &other.0)
    }
}

pub fn hamming_bytes(a: &[u8], b: &[u8]) -> u32 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0u32;
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        let x = u64::from_le_bytes(x.try_into().expect("8 bytes"));
        let y = u64::from_le_bytes(y.try_into().expect("8 bytes"));
        acc += (x ^ y).count_ones();
    }
    for (x, y) in ra.iter().zip(rb) {
        acc += (x ^ y).count_ones();
    }
    acc
}

/// Euclidean distance, accumulated in `f64`.
pub fn euclidean<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let s: f64 = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x.as_f64() - y.as_f64();
            d * d
        })
        .sum();
    T::of(s.sqrt())
}

/// Something with a descriptor distance.
pub trait Descriptor {
    fn distance(&self, other: &Self) -> f64;
}

impl Descriptor for BinaryDescriptor {
    fn distance(&self, other: &Self) -> f64 {
        f64::from(self.hamming(other))
    }
}

impl<T: Scalar> Descriptor for FloatDescriptor<T> {
    fn distance(&self, other: &Self) -> f64 {
        self.euclidean(other).as_f64()
    }
}

/// Index and distance of the nearest candidate; ties go to the lowest index.
pub fn match_nn<D: Descriptor>(query: &D, candidates: &[D]) -> Result<(usize, f64), DescribeError> {
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in candidates.iter().enumerate() {
        let d = query.distance(c);
        if best.is_none_or(|(_, b)| d < b) {
            best = Some((i, d));
        }
    }
    best.ok_or(DescribeError::EmptyCandidateSet)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DescriptorKind {
    Binary,
    Float,
}

impl DescriptorKind {
    pub fn name(self) -> &'static str {
        match self {
            DescriptorKind::Binary => "binary",
            DescriptorKind::Float => "float",
        }
    }
}

/// Descriptors of one image, stored row-major in a flat buffer.
#[derive(Debug, Clone, PartialEq)]
pub enum DescriptorSet {
    /// `bits / 8` bytes per row.
    Binary {
        bits: usize,
        data: Vec<u8>,
    },
    Float {
        dim: usize,
        data: Vec<f32>,
    },
}

impl DescriptorSet {
    pub fn empty(kind: DescriptorKind, dim: usize) -> Self {
        match kind {
            DescriptorKind::Binary => DescriptorSet::Binary {
                bits: dim,
                data: Vec::new(),
            },
            DescriptorKind::Float => DescriptorSet::Float { dim, data: Vec::new() },
        }
    }

    pub fn from_binary(rows: &[BinaryDescriptor]) -> Self {
        DescriptorSet::Binary {
            bits: BINARY_BITS,
            data: rows.iter().flat_map(|d| d.0).collect(),
        }
    }

    pub fn from_float(rows: &[crate::FloatDescriptor]) -> Self {
        DescriptorSet::Float {
            dim: FLOAT_DIM,
            data: rows.iter().flat_map(|d| d.0.iter().copied()).collect(),
        }
    }

    pub fn kind(&self) -> DescriptorKind {
        match self {
            DescriptorSet::Binary { .. } => DescriptorKind::Binary,
            DescriptorSet::Float { .. } => DescriptorKind::Float,
        }
    }

    /// Bits for binary sets, entries for float sets.
    pub fn dim(&self) -> usize {
        match self {
            DescriptorSet::Binary { bits, .. } => *bits,
            DescriptorSet::Float { dim, .. } => *dim,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            DescriptorSet::Binary { bits, data } => data.len() / (bits / 8).max(1),
            DescriptorSet::Float { dim, data } => data.len() / (*dim).max(1),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn binary_row(&self, i: usize) -> Option<&[u8]> {
        match self {
            DescriptorSet::Binary { bits, data } => Some(&data[i * bits / 8..(i + 1) * bits / 8]),
            DescriptorSet::Float { .. } => None,
        }
    }

    pub fn float_row(&self, i: usize) -> Option<&[f32]> {
        match self {
            DescriptorSet::Float { dim, data } => Some(&data[i * dim..(i + 1) * dim]),
            DescriptorSet::Binary { .. } => None,
        }
    }

    pub fn check_compatible(&self, other: &Self) -> Result<(), DescribeError> {
        if self.kind() != other.kind() || self.dim() != other.dim() {
            return Err(DescribeError::IncompatibleDistance {
                left: self.kind().name(),
                left_dim: self.dim(),
                right: other.kind().name(),
                right_dim: other.dim(),
            });
        }
        Ok(())
    }

    /// Distance between row `i` of `self` and row `j` of `other`. Both sets must
    /// be compatible.
    pub fn distance(&self, i: usize, other: &Self, j: usize) -> f64 {
        match (self, other) {
            (DescriptorSet::Binary { bits, data }, DescriptorSet::Binary { data: od, .. }) => {
                let n = bits / 8;
                f64::from(hamming_bytes(&data[i * n..(i + 1) * n], &od[j * n..(j + 1) * n]))
            }
            (DescriptorSet::Float { dim, data }, DescriptorSet::Float { data: od, .. }) => {
                let n = *dim;
                euclidean(&data[i * n..(i + 1) * n], &od[j * n..(j + 1) * n]).as_f64()
            }
            _ => panic!("incompatible descriptor sets"),
        }
    }

    /// Nearest row of `candidates` to row `i` of `self`, ties to the lowest index.
    pub fn nearest(&self, i: usize, candidates: &Self) -> Result<(usize, f64), DescribeError> {
        self.check_compatible(candidates)?;
        let mut best: Option<(usize, f64)> = None;
        for j in 0..candidates.len() {
            let d = self.distance(i, candidates, j);
            if best.is_none_or(|(_, b)| d < b) {
                best = Some((j, d));
            }
        }
        best.ok_or(DescribeError::EmptyCandidateSet)
    }
}

/// Registered descriptor extractors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DescriptorChoice {
    /// Unsteered binary tests; keypoint orientation is ignored.
    Brief,
    /// Binary tests steered by keypoint orientation.
    Orb,
    /// Normalized 16x16 intensity patch.
    Patch,
}

impl DescriptorChoice {
    pub fn name(self) -> &'static str {
        match self {
            DescriptorChoice::Brief => "brief",
            DescriptorChoice::Orb => "orb",
            DescriptorChoice::Patch => "patch",
        }
    }

    pub fn kind(self) -> DescriptorKind {
        match self {
            DescriptorChoice::Brief | DescriptorChoice::Orb => DescriptorKind::Binary,
            DescriptorChoice::Patch => DescriptorKind::Float,
        }
    }
}

impl fmt::Display for DescriptorChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DescriptorChoice {
    type Err = DescribeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "brief" => Ok(DescriptorChoice::Brief),
            "orb" => Ok(DescriptorChoice::Orb),
            "patch" => Ok(DescriptorChoice::Patch),
            _ => Err(DescribeError::UnknownDescriptor { name: s.to_string() }),
        }
    }
}
