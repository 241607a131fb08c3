use crate::rng::XorShift64Star;

pub const PATTERN_SEED: u64 = 0x9E37_79B9_7F4A_7C15;
/// Offsets are confined to `[-PATTERN_RADIUS, PATTERN_RADIUS]` per axis.
pub const PATTERN_RADIUS: i32 = 15;
/// Standard deviation of the isotropic Gaussian, 31 / 5.
pub const PATTERN_SIGMA: f64 = 31.0 / 5.0;

/// 256 test pairs `(p, q)` of integer offsets around a keypoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplingPattern {
    pairs: Vec<[(i32, i32); 2]>,
}

impl SamplingPattern {
    pub fn pairs(&self) -> &[[(i32, i32); 2]] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// The process-wide pattern built from [`PATTERN_SEED`].
    pub fn global() -> &'static SamplingPattern {
        static GLOBAL: std::sync::OnceLock<SamplingPattern> = std::sync::OnceLock::new();
        GLOBAL.get_or_init(|| make_pattern(PATTERN_SEED))
    }
}

/// Draws 512 Gaussian points (each axis rounded to the nearest integer and redrawn
/// when outside the radius) and pairs them sequentially.
pub fn make_pattern(seed: u64) -> SamplingPattern {
    let mut rng = XorShift64Star::new(seed);
    let mut coord = || loop {
        let v = (rng.next_gaussian() * PATTERN_SIGMA).round();
        if v.abs() <= f64::from(PATTERN_RADIUS) {
            return v as i32;
        }
    };
    let points: Vec<(i32, i32)> = (0..512).map(|_| (coord(), coord())).collect();
    SamplingPattern {
        pairs: points.chunks_exact(2).map(|c| [c[0], c[1]]).collect(),
    }
}
