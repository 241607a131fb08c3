use std::f64::consts::TAU;

use super::{BinaryDescriptor, DescribeError, SamplingPattern};
use crate::detect::Keypoint;
use crate::imaging::Intensity;

/// Orientation is quantized to multiples of `2 pi / ANGLE_BINS`.
pub const ANGLE_BINS: usize = 30;

/// Nearest bin index in `0..ANGLE_BINS`.
pub fn quantize_angle(theta: f64) -> usize {
    let step = TAU / ANGLE_BINS as f64;
    ((theta / step).round() as i64).rem_euclid(ANGLE_BINS as i64) as usize
}

/// Binary intensity tests over `img`, which the caller is expected to have
/// smoothed. Bit `i` is set iff `I(kp + p_i) < I(kp + q_i)`.
pub fn brief<I: Intensity>(
    img: &I,
    kp: &Keypoint,
    pattern: &SamplingPattern,
) -> Result<BinaryDescriptor, DescribeError> {
    tests(img, kp, pattern.pairs().iter().copied())
}

/// BRIEF with each offset rotated by the quantized keypoint orientation and
/// rounded to the nearest pixel.
pub fn steered_brief<I: Intensity>(
    img: &I,
    kp: &Keypoint,
    pattern: &SamplingPattern,
) -> Result<BinaryDescriptor, DescribeError> {
    let bin = quantize_angle(kp.orientation);
    if bin == 0 {
        return brief(img, kp, pattern);
    }
    let angle = bin as f64 * TAU / ANGLE_BINS as f64;
    let (s, c) = angle.sin_cos();
    let rotate = |(x, y): (i32, i32)| {
        let (x, y) = (f64::from(x), f64::from(y));
        ((c * x - s * y).round() as i32, (s * x + c * y).round() as i32)
    };
    tests(img, kp, pattern.pairs().iter().map(|&[p, q]| [rotate(p), rotate(q)]))
}

fn tests<I: Intensity>(
    img: &I,
    kp: &Keypoint,
    pairs: impl Iterator<Item = [(i32, i32); 2]>,
) -> Result<BinaryDescriptor, DescribeError> {
    let (cx, cy) = kp.pixel();
    let (w, h) = (img.width() as i64, img.height() as i64);
    let sample = |(dx, dy): (i32, i32)| -> Result<f64, DescribeError> {
        let (x, y) = (cx + i64::from(dx), cy + i64::from(dy));
        if x < 0 || y < 0 || x >= w || y >= h {
            return Err(DescribeError::OutOfBounds { x: cx, y: cy });
        }
        Ok(img.intensity(x as usize, y as usize))
    };
    let mut d = BinaryDescriptor::default();
    for (i, [p, q]) in pairs.enumerate() {
        if sample(p)? < sample(q)? {
            d.set_bit(i);
        }
    }
    Ok(d)
}
