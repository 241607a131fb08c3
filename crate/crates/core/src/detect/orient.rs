use super::{DetectError, Keypoint};
use crate::imaging::GrayImage;

pub const DEFAULT_ORIENT_RADIUS: usize = 15;

/// Intensity-centroid orientation: `atan2(m01, m10)` of the first moments over
/// the disc of `radius` around the keypoint's nearest pixel.
pub fn orient_ic(img: &GrayImage, kp: &Keypoint, radius: usize) -> Result<f64, DetectError> {
    let (cx, cy) = kp.pixel();
    let r = radius as i64;
    if cx - r < 0 || cy - r < 0 || cx + r >= img.width() as i64 || cy + r >= img.height() as i64 {
        return Err(DetectError::OutOfBounds { x: cx, y: cy });
    }
    let (mut m10, mut m01) = (0i64, 0i64);
    for dy in -r..=r {
        let span = ((r * r - dy * dy) as f64).sqrt() as i64;
        let y = (cy + dy) as usize;
        for dx in -span..=span {
            let v = i64::from(img.get((cx + dx) as usize, y));
            m10 += dx * v;
            m01 += dy * v;
        }
    }
    if m10 == 0 && m01 == 0 {
        return Ok(0.0);
    }
    Ok((m01 as f64).atan2(m10 as f64))
}
