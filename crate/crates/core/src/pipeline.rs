//! Detector + descriptor pipelines applied to one image.

use crate::describe::{
    brief, patch_descriptor, steered_brief, DescribeError, DescriptorChoice, DescriptorSet, SamplingPattern,
};
use crate::detect::{DetectError, DetectorConfig, DetectorKind, Keypoint};
use crate::imaging::{gaussian_blur, GrayImage};
use crate::FloatDescriptor;

/// Pre-smoothing applied once per image before binary tests.
pub const BRIEF_SMOOTHING_SIGMA: f64 = 2.0;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum PipelineError {
    #[error(transparent)]
    Detect(#[from] DetectError),
    #[error(transparent)]
    Describe(#[from] DescribeError),
}

/// Keypoints of one image and their descriptors, row-aligned.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageFeatures {
    pub keypoints: Vec<Keypoint>,
    pub descriptors: DescriptorSet,
}

impl ImageFeatures {
    pub fn len(&self) -> usize {
        self.keypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keypoints.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pipeline {
    pub detector: DetectorKind,
    pub descriptor: DescriptorChoice,
    pub config: DetectorConfig,
}

impl Pipeline {
    pub fn new(detector: DetectorKind, descriptor: DescriptorChoice, config: DetectorConfig) -> Self {
        Self {
            detector,
            descriptor,
            config,
        }
    }

    /// `DET+DESC` label.
    pub fn label(&self) -> String {
        format!(
            "{}+{}",
            self.detector.name().to_uppercase(),
            self.descriptor.name().to_uppercase()
        )
    }

    pub fn detect(&self, img: &GrayImage) -> Result<Vec<Keypoint>, DetectError> {
        self.detector.detect(img, &self.config)
    }

    pub fn describe(&self, img: &GrayImage, keypoints: &[Keypoint]) -> Result<DescriptorSet, DescribeError> {
        let pattern = SamplingPattern::global();
        match self.descriptor {
            DescriptorChoice::Brief | DescriptorChoice::Orb => {
                let smooth = gaussian_blur(&img.to_float::<f64>(), BRIEF_SMOOTHING_SIGMA);
                let steered = self.descriptor == DescriptorChoice::Orb;
                let rows = keypoints
                    .iter()
                    .map(|kp| {
                        if steered {
                            steered_brief(&smooth, kp, pattern)
                        } else {
                            brief(&smooth, kp, pattern)
                        }
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(DescriptorSet::from_binary(&rows))
            }
            DescriptorChoice::Patch => {
                let rows = keypoints
                    .iter()
                    .map(|kp| patch_descriptor(img, kp))
                    .collect::<Result<Vec<FloatDescriptor>, _>>()?;
                Ok(DescriptorSet::from_float(&rows))
            }
        }
    }

    pub fn extract(&self, img: &GrayImage) -> Result<ImageFeatures, PipelineError> {
        let keypoints = self.detect(img)?;
        let descriptors = self.describe(img, &keypoints)?;
        Ok(ImageFeatures { keypoints, descriptors })
    }
}
