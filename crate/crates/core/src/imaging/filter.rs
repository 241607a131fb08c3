use super::{FloatImage, ImageError};
use crate::scalar::Scalar;

/// Normalized 1-D Gaussian of radius `ceil(3 sigma)`. A zero sigma yields `[1]`.
pub fn gaussian_kernel<T: Scalar>(sigma: T) -> Vec<T> {
    assert!(sigma >= T::zero(), "sigma must be non-negative");
    if sigma == T::zero() {
        return vec![T::one()];
    }
    let radius = (T::of(3.0) * sigma).ceil().to_usize().expect("finite sigma");
    let two_s2 = T::of(2.0) * sigma * sigma;
    let mut k: Vec<T> = (0..=2 * radius)
        .map(|i| {
            let d = T::of(i as f64 - radius as f64);
            (-(d * d) / two_s2).exp()
        })
        .collect();
    let total = k.iter().fold(T::zero(), |a, &b| a + b);
    for w in &mut k {
        *w = *w / total;
    }
    k
}

/// Separable Gaussian blur with edge replication.
pub fn gaussian_blur<T: Scalar>(img: &FloatImage<T>, sigma: T) -> FloatImage<T> {
    if sigma == T::zero() {
        return img.clone();
    }
    let kernel = gaussian_kernel(sigma);
    let r = (kernel.len() / 2) as isize;
    let (w, h) = (img.width(), img.height());
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;

    let mut horiz = vec![T::zero(); w * h];
    for y in 0..h {
        let row = &img.data()[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = T::zero();
            for (i, &kw) in kernel.iter().enumerate() {
                acc = acc + kw * row[clamp(x as isize + i as isize - r, w)];
            }
            horiz[y * w + x] = acc;
        }
    }
    let mut out = vec![T::zero(); w * h];
    for y in 0..h {
        for (i, &kw) in kernel.iter().enumerate() {
            let sy = clamp(y as isize + i as isize - r, h);
            let src = &horiz[sy * w..(sy + 1) * w];
            let dst = &mut out[y * w..(y + 1) * w];
            for (d, &s) in dst.iter_mut().zip(src) {
                *d = *d + kw * s;
            }
        }
    }
    FloatImage::new(w, h, out).expect("same dimensions")
}

/// 3x3 Sobel derivatives scaled by 1/8, so a unit ramp has unit gradient.
/// The one-pixel frame is zero.
pub fn sobel_gradients<T: Scalar>(img: &FloatImage<T>) -> Result<(FloatImage<T>, FloatImage<T>), ImageError> {
    let (w, h) = (img.width(), img.height());
    if w < 3 || h < 3 {
        return Err(ImageError::ImageTooSmall {
            width: w,
            height: h,
            min_width: 3,
            min_height: 3,
        });
    }
    let mut gx = FloatImage::zeros(w, h);
    let mut gy = FloatImage::zeros(w, h);
    let two = T::of(2.0);
    let eighth = T::of(0.125);
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let p = |dx: isize, dy: isize| img.get((x as isize + dx) as usize, (y as isize + dy) as usize);
            let dx = (p(1, -1) + two * p(1, 0) + p(1, 1)) - (p(-1, -1) + two * p(-1, 0) + p(-1, 1));
            let dy = (p(-1, 1) + two * p(0, 1) + p(1, 1)) - (p(-1, -1) + two * p(0, -1) + p(1, -1));
            gx.set(x, y, dx * eighth);
            gy.set(x, y, dy * eighth);
        }
    }
    Ok((gx, gy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::GrayImage;
    use approx::assert_relative_eq;

    #[test]
    fn kernel_radius_and_normalization() {
        let k = gaussian_kernel(1.0f64);
        assert_eq!(k.len(), 7);
        assert_relative_eq!(k.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert_eq!(gaussian_kernel(0.5f64).len(), 5);
        assert_eq!(gaussian_kernel(2.0f32).len(), 13);
    }

    #[test]
    fn blur_preserves_constants() {
        let img = FloatImage::<f64>::filled(12, 9, 7.0);
        for sigma in [0.0, 0.5, 1.0, 2.5] {
            let out = gaussian_blur(&img, sigma);
            for &v in out.data() {
                assert_relative_eq!(v, 7.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn zero_sigma_is_identity() {
        let g = GrayImage::from_fn(5, 4, |x, y| (x * 40 + y) as u8);
        let f = g.to_float::<f32>();
        assert_eq!(gaussian_blur(&f, 0.0), f);
    }

    #[test]
    fn impulse_center_equals_2d_kernel_weight() {
        let img = FloatImage::<f64>::from_fn(9, 9, |x, y| if (x, y) == (4, 4) { 1.0 } else { 0.0 });
        let out = gaussian_blur(&img, 1.0);
        // independent 2-D normalization over the radius-3 square window
        let mut total = 0.0;
        for dy in -3i32..=3 {
            for dx in -3i32..=3 {
                total += (-((dx * dx + dy * dy) as f64) / 2.0).exp();
            }
        }
        assert_relative_eq!(out.get(4, 4), 1.0 / total, epsilon = 1e-12);
    }

    #[test]
    fn blur_preserves_mass_for_interior_content() {
        let img = FloatImage::<f64>::from_fn(64, 64, |x, y| {
            if (20..44).contains(&x) && (16..40).contains(&y) {
                ((x * 7 + y * 3) % 50) as f64
            } else {
                0.0
            }
        });
        let out = gaussian_blur(&img, 2.0);
        assert!((out.sum() - img.sum()).abs() / img.sum() < 0.005);
    }

    #[test]
    fn sobel_ramps() {
        let rx = FloatImage::<f64>::from_fn(6, 5, |x, _| x as f64);
        let (gx, gy) = sobel_gradients(&rx).unwrap();
        for y in 1..4 {
            for x in 1..5 {
                assert_eq!(gx.get(x, y), 1.0);
                assert_eq!(gy.get(x, y), 0.0);
            }
        }
        assert_eq!(gx.get(0, 2), 0.0);
        let ry = FloatImage::<f64>::from_fn(6, 5, |_, y| y as f64);
        let (gx, gy) = sobel_gradients(&ry).unwrap();
        assert_eq!((gx.get(2, 2), gy.get(2, 2)), (0.0, 1.0));

        let c = FloatImage::<f32>::filled(4, 4, 3.0);
        let (gx, gy) = sobel_gradients(&c).unwrap();
        assert!(gx.data().iter().chain(gy.data()).all(|&v| v == 0.0));
    }

    #[test]
    fn sobel_too_small() {
        let img = FloatImage::<f64>::zeros(2, 5);
        assert!(matches!(sobel_gradients(&img), Err(ImageError::ImageTooSmall { .. })));
    }

    #[test]
    fn sobel_rotation_equivariance() {
        // rotate90 maps (x, y) -> (h-1-y, x); gradients transform as (gx', gy') = (-gy, gx)
        let g = GrayImage::from_fn(11, 8, |x, y| ((x * x * 3 + y * 29 + x * y * 5) % 251) as u8);
        let r = g.rotate90();
        let (gx, gy) = sobel_gradients(&g.to_float::<f64>()).unwrap();
        let (rgx, rgy) = sobel_gradients(&r.to_float::<f64>()).unwrap();
        let h = g.height();
        for y in 1..g.height() - 1 {
            for x in 1..g.width() - 1 {
                let (nx, ny) = (h - 1 - y, x);
                assert_eq!(rgx.get(nx, ny), -gy.get(x, y));
                assert_eq!(rgy.get(nx, ny), gx.get(x, y));
            }
        }
    }
}
