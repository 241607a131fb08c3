//! Raster types and the low-level image operations the detectors build on.

mod filter;
mod integral;
mod netpbm;

pub use filter::{gaussian_blur, gaussian_kernel, sobel_gradients};
pub use integral::{integral, IntegralImage, Rect};
pub use netpbm::{decode_netpbm, decode_netpbm_with_cap, encode_pgm, DEFAULT_PIXEL_CAP};

use crate::scalar::Scalar;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ImageError {
    #[error("unknown netpbm magic {0:?}")]
    UnknownMagic(String),
    #[error("truncated netpbm payload")]
    TruncatedPayload,
    #[error("malformed netpbm header: {0}")]
    MalformedHeader(String),
    #[error("image of {width}x{height} exceeds the pixel cap of {cap}")]
    DimensionOverflow { width: usize, height: usize, cap: usize },
    #[error("unsupported maxval {0} (must be 1..=255)")]
    UnsupportedMaxval(u32),
    #[error("image {width}x{height} is smaller than the required {min_width}x{min_height}")]
    ImageTooSmall {
        width: usize,
        height: usize,
        min_width: usize,
        min_height: usize,
    },
    #[error("rectangle out of image bounds")]
    RectOutOfBounds,
    #[error("buffer of length {len} does not match {width}x{height}")]
    BadBufferLength { width: usize, height: usize, len: usize },
}

/// Anything that can be sampled as an intensity at integer pixel positions.
pub trait Intensity {
    fn width(&self) -> usize;
    fn height(&self) -> usize;
    fn intensity(&self, x: usize, y: usize) -> f64;
}

/// 8-bit grayscale raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(ImageError::BadBufferLength {
                width,
                height,
                len: data.len(),
            });
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self::new(width, height, vec![value; width * height]).expect("non-empty dimensions")
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> u8) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data).expect("non-empty dimensions")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.data[y * self.width + x] = v;
    }

    pub fn to_float<T: Scalar>(&self) -> FloatImage<T> {
        FloatImage {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| T::of(f64::from(v))).collect(),
        }
    }

    /// Applies a pixelwise lookup table.
    pub fn map(&self, lut: impl Fn(u8) -> u8) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| lut(v)).collect(),
        }
    }

    /// Quarter turn: pixel (x, y) moves to (height - 1 - y, x), so the angle
    /// `atan2(dy, dx)` of any in-image offset advances by +pi/2.
    pub fn rotate90(&self) -> Self {
        let (w, h) = (self.width, self.height);
        let mut out = vec![0u8; w * h];
        for y in 0..h {
            for x in 0..w {
                let (nx, ny) = (h - 1 - y, x);
                out[ny * h + nx] = self.get(x, y);
            }
        }
        Self {
            width: h,
            height: w,
            data: out,
        }
    }
}

impl Intensity for GrayImage {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    #[inline]
    fn intensity(&self, x: usize, y: usize) -> f64 {
        f64::from(self.get(x, y))
    }
}

/// Real-valued raster, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatImage<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Scalar> FloatImage<T> {
    pub fn new(width: usize, height: usize, data: Vec<T>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(ImageError::BadBufferLength {
                width,
                height,
                len: data.len(),
            });
        }
        Ok(Self { width, height, data })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, T::zero())
    }

    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Self::new(width, height, vec![value; width * height]).expect("non-empty dimensions")
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data).expect("non-empty dimensions")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: T) {
        self.data[y * self.width + x] = v;
    }

    /// Elementwise combination of two equally sized images.
    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        assert_eq!((self.width, self.height), (other.width, other.height));
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn sum(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, &v| acc + v)
    }
}

impl<T: Scalar> Intensity for FloatImage<T> {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    #[inline]
    fn intensity(&self, x: usize, y: usize) -> f64 {
        self.get(x, y).as_f64()
    }
}
