//! Serial wall-clock timing of detect+describe pipelines.
//!
//! Decoding is excluded: images come from an already loaded [`Dataset`].

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::imaging::GrayImage;
use crate::pipeline::{ImageFeatures, Pipeline, PipelineError};

/// Coarsest acceptable clock tick.
pub const MAX_CLOCK_RESOLUTION: Duration = Duration::from_millis(1);

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum BenchError {
    #[error("dataset has no images")]
    EmptyDataset,
    #[error("passes must be at least 1")]
    NoPasses,
    #[error("monotonic clock resolution {0:?} is coarser than 1 ms")]
    ClockResolution(Duration),
    #[error("all {excluded} images failed; first error: {first}")]
    NothingTimed { excluded: usize, first: PipelineError },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingResult {
    pub detector: String,
    pub descriptor: String,
    pub images: usize,
    pub excluded: usize,
    pub warmup: usize,
    pub passes: usize,
    pub mean_ms: f64,
    pub std_ms: f64,
    pub min_ms: f64,
    pub max_ms: f64,
}

impl TimingResult {
    pub fn label(&self) -> String {
        format!("{}+{}", self.detector.to_uppercase(), self.descriptor.to_uppercase())
    }
}

/// Smallest positive step observed between consecutive clock reads.
pub fn clock_resolution() -> Duration {
    let mut best = Duration::MAX;
    for _ in 0..200 {
        let a = Instant::now();
        let mut b = Instant::now();
        while b == a {
            b = Instant::now();
        }
        best = best.min(b - a);
    }
    best
}

/// Runs `pipeline` on `img` `warmup + passes` times and returns the mean of the
/// timed passes in milliseconds with the features of the last pass.
pub fn time_image(
    pipeline: &Pipeline,
    img: &GrayImage,
    warmup: usize,
    passes: usize,
) -> Result<(f64, ImageFeatures), PipelineError> {
    for _ in 0..warmup {
        pipeline.extract(img)?;
    }
    let mut total = Duration::ZERO;
    let mut last = None;
    for _ in 0..passes.max(1) {
        let start = Instant::now();
        let f = pipeline.extract(img)?;
        total += start.elapsed();
        last = Some(f);
    }
    let ms = total.as_secs_f64() * 1e3 / passes.max(1) as f64;
    Ok((ms, last.expect("at least one pass")))
}

/// Times every image of `dataset` serially. Images whose extraction fails are
/// excluded and counted.
pub fn time_pipeline(
    dataset: &Dataset,
    pipeline: &Pipeline,
    warmup: usize,
    passes: usize,
) -> Result<TimingResult, BenchError> {
    if dataset.image_count() == 0 {
        return Err(BenchError::EmptyDataset);
    }
    if passes == 0 {
        return Err(BenchError::NoPasses);
    }
    let resolution = clock_resolution();
    if resolution > MAX_CLOCK_RESOLUTION {
        return Err(BenchError::ClockResolution(resolution));
    }
    let mut samples = Vec::new();
    let mut first_error = None;
    let mut excluded = 0;
    for img in dataset.sequences.iter().flat_map(|s| s.images.iter()) {
        match time_image(pipeline, img, warmup, passes) {
            Ok((ms, _)) => samples.push(ms),
            Err(e) => {
                excluded += 1;
                first_error.get_or_insert(e);
            }
        }
    }
    if samples.is_empty() {
        return Err(BenchError::NothingTimed {
            excluded,
            first: first_error.expect("every image failed"),
        });
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
    let min = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let max = samples.iter().copied().fold(0.0, f64::max);
    Ok(TimingResult {
        detector: pipeline.detector.name().to_string(),
        descriptor: pipeline.descriptor.name().to_string(),
        images: samples.len(),
        excluded,
        warmup,
        passes,
        // summation rounding can push the mean a hair outside [min, max]
        mean_ms: mean.clamp(min, max),
        std_ms: var.sqrt(),
        min_ms: min,
        max_ms: max,
    })
}

/// CSV sorted by ascending mean time.
pub fn timing_csv(results: &[TimingResult]) -> Result<String, csv::Error> {
    let mut rows: Vec<&TimingResult> = results.iter().collect();
    rows.sort_by(|a, b| a.mean_ms.total_cmp(&b.mean_ms).then_with(|| a.label().cmp(&b.label())));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "combination",
        "detector",
        "descriptor",
        "mean_ms",
        "std_ms",
        "min_ms",
        "max_ms",
        "images",
        "excluded",
        "warmup",
        "passes",
    ])?;
    for r in rows {
        w.write_record([
            r.label(),
            r.detector.clone(),
            r.descriptor.clone(),
            format!("{:.6}", r.mean_ms),
            format!("{:.6}", r.std_ms),
            format!("{:.6}", r.min_ms),
            format!("{:.6}", r.max_ms),
            r.images.to_string(),
            r.excluded.to_string(),
            r.warmup.to_string(),
            r.passes.to_string(),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::describe::DescriptorChoice;
    use crate::detect::{DetectorConfig, DetectorKind};
    use crate::synthetic::textured_image;

    #[test]
    fn clock_is_fine_grained() {
        assert!(clock_resolution() <= MAX_CLOCK_RESOLUTION);
    }

    #[test]
    fn timed_features_equal_untimed() {
        let img = textured_image(96, 96, 5);
        let p = Pipeline::new(DetectorKind::Fast, DescriptorChoice::Brief, DetectorConfig::default());
        let (ms, f) = time_image(&p, &img, 1, 2).unwrap();
        assert!(ms > 0.0);
        assert_eq!(f, p.extract(&img).unwrap());
    }

    #[test]
    fn csv_is_sorted_by_mean() {
        let r = |det: &str, mean: f64| TimingResult {
            detector: det.into(),
            descriptor: "brief".into(),
            images: 1,
            excluded: 0,
            warmup: 0,
            passes: 1,
            mean_ms: mean,
            std_ms: 0.0,
            min_ms: mean,
            max_ms: mean,
        };
        let csv = timing_csv(&[r("harris", 3.0), r("fast", 1.0), r("gftt", 2.0)]).unwrap();
        let order: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
        assert_eq!(order, ["fast", "gftt", "harris"]);
    }
}
