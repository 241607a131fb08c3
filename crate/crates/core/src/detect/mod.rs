//! Single-scale keypoint detectors.

mod fast;
mod harris;
mod nms;
mod orient;

pub use fast::{fast, fast_candidates, segment_test, RING};
pub use harris::{gftt, gftt_response, harris, harris_response, structure_tensor, StructureTensor};
pub use nms::{nms, top_k};
pub use orient::{orient_ic, DEFAULT_ORIENT_RADIUS};

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::imaging::{GrayImage, ImageError};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum DetectError {
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error("patch around ({x}, {y}) leaves the image")]
    OutOfBounds { x: i64, y: i64 },
    #[error("invalid detector config: {0}")]
    InvalidConfig(String),
    #[error("unknown detector {name:?}; registered: {}", REGISTERED.join(", "))]
    UnknownDetector { name: String },
}

/// Detector names accepted by [`DetectorKind::from_str`].
pub const REGISTERED: &[&str] = &["harris", "gftt", "fast", "orb"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    pub score: f64,
    /// Radians in `[-pi, pi]`.
    pub orientation: f64,
    pub scale: f64,
}

impl Keypoint {
    pub fn new(x: f64, y: f64, score: f64) -> Self {
        Self {
            x,
            y,
            score,
            orientation: 0.0,
            scale: 1.0,
        }
    }

    pub fn with_orientation(mut self, orientation: f64) -> Self {
        self.orientation = orientation;
        self
    }

    /// Nearest pixel position.
    pub fn pixel(&self) -> (i64, i64) {
        (self.x.round() as i64, self.y.round() as i64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectorConfig {
    pub harris_k: f64,
    pub harris_sigma_d: f64,
    pub harris_sigma_i: f64,
    pub fast_threshold: u8,
    pub fast_arc: usize,
    pub gftt_quality: f64,
    pub nms_radius: f64,
    pub max_keypoints: usize,
    pub border_margin: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            harris_k: 0.04,
            harris_sigma_d: 1.0,
            harris_sigma_i: 2.0,
            fast_threshold: 20,
            fast_arc: 9,
            gftt_quality: 0.01,
            nms_radius: 5.0,
            max_keypoints: 500,
            border_margin: 22,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<(), DetectError> {
        let bad = |m: &str| Err(DetectError::InvalidConfig(m.to_string()));
        if !(self.harris_k > 0.0 && self.harris_sigma_d > 0.0 && self.harris_sigma_i > 0.0) {
            return bad("harris parameters must be positive");
        }
        if self.fast_threshold == 0 {
            return bad("fast_threshold must be positive");
        }
        if !(9..=16).contains(&self.fast_arc) {
            return bad("fast_arc must lie in [9, 16]");
        }
        if !(self.gftt_quality > 0.0 && self.gftt_quality <= 1.0) {
            return bad("gftt_quality must lie in (0, 1]");
        }
        if self.nms_radius.is_nan() || self.nms_radius <= 0.0 || self.max_keypoints == 0 || self.border_margin == 0 {
            return bad("nms_radius, max_keypoints and border_margin must be positive");
        }
        Ok(())
    }

    /// Whether pixel (x, y) keeps `border_margin` from every edge.
    pub(crate) fn inside_margin(&self, x: usize, y: usize, width: usize, height: usize) -> bool {
        let m = self.border_margin;
        x >= m && y >= m && x + m < width && y + m < height
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DetectorKind {
    Harris,
    Gftt,
    Fast,
    /// FAST corners re-scored by the Harris response and oriented by intensity centroid.
    Orb,
}

impl DetectorKind {
    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::Harris => "harris",
            DetectorKind::Gftt => "gftt",
            DetectorKind::Fast => "fast",
            DetectorKind::Orb => "orb",
        }
    }

    pub fn detect(self, img: &GrayImage, cfg: &DetectorConfig) -> Result<Vec<Keypoint>, DetectError> {
        match self {
            DetectorKind::Harris => harris(img, cfg),
            DetectorKind::Gftt => gftt(img, cfg),
            DetectorKind::Fast => fast(img, cfg),
            DetectorKind::Orb => orb(img, cfg),
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DetectorKind {
    type Err = DetectError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "harris" => Ok(DetectorKind::Harris),
            "gftt" => Ok(DetectorKind::Gftt),
            "fast" => Ok(DetectorKind::Fast),
            "orb" => Ok(DetectorKind::Orb),
            _ => Err(DetectError::UnknownDetector { name: s.to_string() }),
        }
    }
}

/// FAST segment-test corners, scored by Harris response, capped, then oriented.
pub fn orb(img: &GrayImage, cfg: &DetectorConfig) -> Result<Vec<Keypoint>, DetectError> {
    cfg.validate()?;
    let response = harris_response(img, cfg)?;
    let mut candidates = fast_candidates(img, cfg)?;
    for kp in &mut candidates {
        kp.score = response.get(kp.x as usize, kp.y as usize);
    }
    let kept = top_k(nms(candidates, cfg.nms_radius), cfg.max_keypoints);
    kept.into_iter()
        .map(|kp| Ok(kp.with_orientation(orient_ic(img, &kp, DEFAULT_ORIENT_RADIUS)?)))
        .collect()
}
