use super::{nms, top_k, DetectError, DetectorConfig, Keypoint};
use crate::imaging::{GrayImage, ImageError};

/// Bresenham circle of radius 3, clockwise from the top.
pub const RING: [(isize, isize); 16] = [
    (0, -3),
    (1, -3),
    (2, -2),
    (3, -1),
    (3, 0),
    (3, 1),
    (2, 2),
    (1, 3),
    (0, 3),
    (-1, 3),
    (-2, 2),
    (-3, 1),
    (-3, 0),
    (-3, -1),
    (-2, -2),
    (-1, -3),
];

/// Segment test on one ring. Returns the corner score, the largest sum of
/// `|ring - center|` over a cyclic run of at least `arc` pixels that are all
/// brighter than `center + threshold` or all darker than `center - threshold`.
pub fn segment_test(center: u8, ring: &[u8; 16], threshold: u8, arc: usize) -> Option<u32> {
    let c = i32::from(center);
    let t = i32::from(threshold);
    let class = |v: u8| -> i8 {
        let v = i32::from(v);
        if v > c + t {
            1
        } else if v < c - t {
            -1
        } else {
            0
        }
    };
    let classes: [i8; 16] = std::array::from_fn(|i| class(ring[i]));
    let diff = |i: usize| (i32::from(ring[i]) - c).unsigned_abs();

    if classes.iter().all(|&k| k == classes[0]) {
        return (classes[0] != 0).then(|| (0..16).map(diff).sum());
    }
    // walk once starting from the beginning of some run
    let start = (0..16)
        .find(|&i| classes[i] != classes[(i + 15) % 16])
        .expect("mixed classes");
    let mut best: Option<u32> = None;
    let mut i = 0;
    while i < 16 {
        let k = classes[(start + i) % 16];
        let mut len = 0;
        let mut sum = 0;
        while i + len < 16 && classes[(start + i + len) % 16] == k {
            sum += diff((start + i + len) % 16);
            len += 1;
        }
        if k != 0 && len >= arc {
            best = Some(best.map_or(sum, |b: u32| b.max(sum)));
        }
        i += len;
    }
    best
}

fn ring_at(img: &GrayImage, x: usize, y: usize) -> [u8; 16] {
    std::array::from_fn(|i| {
        let (dx, dy) = RING[i];
        img.get((x as isize + dx) as usize, (y as isize + dy) as usize)
    })
}

/// Every segment-test corner inside the margin frame, before suppression,
/// in row-major order.
pub fn fast_candidates(img: &GrayImage, cfg: &DetectorConfig) -> Result<Vec<Keypoint>, DetectError> {
    let (w, h) = (img.width(), img.height());
    if w < 7 || h < 7 {
        return Err(ImageError::ImageTooSmall {
            width: w,
            height: h,
            min_width: 7,
            min_height: 7,
        }
        .into());
    }
    let mut out = Vec::new();
    for y in 3..h - 3 {
        for x in 3..w - 3 {
            if !cfg.inside_margin(x, y, w, h) {
                continue;
            }
            if let Some(score) = segment_test(img.get(x, y), &ring_at(img, x, y), cfg.fast_threshold, cfg.fast_arc) {
                out.push(Keypoint::new(x as f64, y as f64, f64::from(score)));
            }
        }
    }
    Ok(out)
}

pub fn fast(img: &GrayImage, cfg: &DetectorConfig) -> Result<Vec<Keypoint>, DetectError> {
    cfg.validate()?;
    let candidates = fast_candidates(img, cfg)?;
    Ok(top_k(nms(candidates, cfg.nms_radius), cfg.max_keypoints))
}
