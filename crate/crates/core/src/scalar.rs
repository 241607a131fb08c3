use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumCast};

/// Floating point scalar used by the numeric kernels: `f32` or `f64`.
pub trait Scalar: Float + FromPrimitive + NumCast + Debug + Display + Default + Send + Sync + 'static {
    /// Lossy conversion from `f64`.
    fn of(v: f64) -> Self {
        <Self as NumCast>::from(v).expect("f64 converts to every Scalar")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("Scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
