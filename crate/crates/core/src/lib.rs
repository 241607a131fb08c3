//! Classic local features and a joint detector/descriptor benchmark.
//!
//! The crate is organised bottom-up:
//!
//! * [`imaging`] decodes Netpbm rasters and provides blur, gradients and integral images.
//! * [`geometry`] holds homographies and reprojection distances.
//! * [`detect`] and [`describe`] implement Harris, GFTT, FAST, intensity-centroid
//!   orientation, BRIEF, steered BRIEF and a float patch descriptor.
//! * [`dataset`] loads homography-annotated image sequences and the `FEATB` feature files.
//! * [`eval`] builds the verification, matching and retrieval tuple sets and scores them
//!   with average precision.
//! * [`benchtime`] times detect+describe pipelines.
//!
//! Numeric code is generic over [`Scalar`]; the aliases below fix the common choices.

pub mod benchtime;
pub mod dataset;
pub mod describe;
pub mod detect;
pub mod eval;
pub mod geometry;
pub mod imaging;
pub mod pipeline;
pub mod rng;
pub mod scalar;
pub mod synthetic;

pub use scalar::Scalar;

pub use describe::{BinaryDescriptor, DescriptorKind, DescriptorSet};
pub use detect::{DetectorConfig, Keypoint};
pub use imaging::{GrayImage, IntegralImage};

/// Homography over `f64`, the precision used by the evaluation tasks.
pub type Homography = geometry::Homography<f64>;
/// Homography over `f32`.
pub type HomographyF32 = geometry::Homography<f32>;
/// Image point over `f64`.
pub type Point = geometry::Point<f64>;
/// Image point over `f32`.
pub type PointF32 = geometry::Point<f32>;
/// Real-valued raster over `f64`, used by the detectors.
pub type FloatImage = imaging::FloatImage<f64>;
/// Real-valued raster over `f32`.
pub type FloatImageF32 = imaging::FloatImage<f32>;
/// Float descriptor with `f32` entries, the interchange precision of `FEATB` files.
pub type FloatDescriptor = describe::FloatDescriptor<f32>;
/// Float descriptor with `f64` entries.
pub type FloatDescriptorF64 = describe::FloatDescriptor<f64>;

/// Version string embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
