use super::{DescribeError, FloatDescriptor};
use crate::detect::Keypoint;
use crate::imaging::Intensity;
use crate::scalar::Scalar;

/// Side of the square patch; offsets run from `-PATCH_SIDE/2` to `PATCH_SIDE/2 - 1`.
pub const PATCH_SIDE: usize = 16;

/// Mean-subtracted, L2-normalized 16x16 patch around the keypoint's nearest pixel.
/// A constant patch yields the all-zero (degenerate) descriptor.
pub fn patch_descriptor<T: Scalar, I: Intensity>(img: &I, kp: &Keypoint) -> Result<FloatDescriptor<T>, DescribeError> {
    let (cx, cy) = kp.pixel();
    let half = (PATCH_SIDE / 2) as i64;
    let (x0, y0) = (cx - half, cy - half);
    if x0 < 0 || y0 < 0 || x0 + PATCH_SIDE as i64 > img.width() as i64 || y0 + PATCH_SIDE as i64 > img.height() as i64 {
        return Err(DescribeError::OutOfBounds { x: cx, y: cy });
    }
    let mut values = Vec::with_capacity(PATCH_SIDE * PATCH_SIDE);
    for y in 0..PATCH_SIDE {
        for x in 0..PATCH_SIDE {
            values.push(img.intensity(x0 as usize + x, y0 as usize + y));
        }
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter_mut().for_each(|v| *v -= mean);
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm <= 1e-12 {
        return Ok(FloatDescriptor(vec![T::zero(); values.len()]));
    }
    Ok(FloatDescriptor(values.into_iter().map(|v| T::of(v / norm)).collect()))
}
