use super::{nms, top_k, DetectError, DetectorConfig, Keypoint};
use crate::imaging::{gaussian_blur, sobel_gradients, FloatImage, GrayImage, ImageError};
use crate::scalar::Scalar;

const MIN_SIDE: usize = 16;

/// Gaussian-weighted second-moment matrix entries per pixel.
#[derive(Debug, Clone)]
pub struct StructureTensor<T> {
    pub xx: FloatImage<T>,
    pub xy: FloatImage<T>,
    pub yy: FloatImage<T>,
}

impl<T: Scalar> StructureTensor<T> {
    /// `det(M) - k trace(M)^2`.
    pub fn harris(&self, k: T) -> FloatImage<T> {
        FloatImage::from_fn(self.xx.width(), self.xx.height(), |x, y| {
            let (a, b, c) = (self.xx.get(x, y), self.xy.get(x, y), self.yy.get(x, y));
            let tr = a + c;
            a * c - b * b - k * tr * tr
        })
    }

    /// Smaller eigenvalue of M.
    pub fn min_eigenvalue(&self) -> FloatImage<T> {
        let two = T::of(2.0);
        FloatImage::from_fn(self.xx.width(), self.xx.height(), |x, y| {
            let (a, b, c) = (self.xx.get(x, y), self.xy.get(x, y), self.yy.get(x, y));
            // (tr - sqrt(tr^2 - 4 det)) / 2, with the discriminant written as (a-c)^2 + 4b^2
            let half_diff = (a - c) / two;
            (a + c) / two - (half_diff * half_diff + b * b).sqrt()
        })
    }
}

fn check_size(img: &GrayImage) -> Result<(), ImageError> {
    if img.width() < MIN_SIDE || img.height() < MIN_SIDE {
        return Err(ImageError::ImageTooSmall {
            width: img.width(),
            height: img.height(),
            min_width: MIN_SIDE,
            min_height: MIN_SIDE,
        });
    }
    Ok(())
}

/// Tensor from gradients of the `sigma_d`-smoothed image, integrated with `sigma_i`.
pub fn structure_tensor<T: Scalar>(img: &GrayImage, sigma_d: T, sigma_i: T) -> Result<StructureTensor<T>, ImageError> {
    check_size(img)?;
    let smoothed = gaussian_blur(&img.to_float::<T>(), sigma_d);
    let (gx, gy) = sobel_gradients(&smoothed)?;
    Ok(StructureTensor {
        xx: gaussian_blur(&gx.zip_map(&gx, |a, b| a * b), sigma_i),
        xy: gaussian_blur(&gx.zip_map(&gy, |a, b| a * b), sigma_i),
        yy: gaussian_blur(&gy.zip_map(&gy, |a, b| a * b), sigma_i),
    })
}

pub fn harris_response(img: &GrayImage, cfg: &DetectorConfig) -> Result<FloatImage<f64>, ImageError> {
    Ok(structure_tensor(img, cfg.harris_sigma_d, cfg.harris_sigma_i)?.harris(cfg.harris_k))
}

pub fn gftt_response(img: &GrayImage, cfg: &DetectorConfig) -> Result<FloatImage<f64>, ImageError> {
    Ok(structure_tensor(img, cfg.harris_sigma_d, cfg.harris_sigma_i)?.min_eigenvalue())
}

pub fn harris(img: &GrayImage, cfg: &DetectorConfig) -> Result<Vec<Keypoint>, DetectError> {
    cfg.validate()?;
    let response = harris_response(img, cfg)?;
    Ok(select_peaks(&response, cfg))
}

pub fn gftt(img: &GrayImage, cfg: &DetectorConfig) -> Result<Vec<Keypoint>, DetectError> {
    cfg.validate()?;
    let response = gftt_response(img, cfg)?;
    Ok(select_peaks(&response, cfg))
}

/// 3x3 local maxima above `gftt_quality * max(response)` inside the margin frame,
/// then radius suppression and the keypoint cap.
fn select_peaks(response: &FloatImage<f64>, cfg: &DetectorConfig) -> Vec<Keypoint> {
    let (w, h) = (response.width(), response.height());
    let max = response.data().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.is_nan() || max <= 0.0 {
        return Vec::new();
    }
    let threshold = cfg.gftt_quality * max;
    let mut candidates = Vec::new();
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            if !cfg.inside_margin(x, y, w, h) {
                continue;
            }
            let r = response.get(x, y);
            if r <= threshold {
                continue;
            }
            let is_peak = (-1isize..=1).all(|dy| {
                (-1isize..=1).all(|dx| response.get((x as isize + dx) as usize, (y as isize + dy) as usize) <= r)
            });
            if is_peak {
                candidates.push(Keypoint::new(x as f64, y as f64, r));
            }
        }
    }
    top_k(nms(candidates, cfg.nms_radius), cfg.max_keypoints)
}
