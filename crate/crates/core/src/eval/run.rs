use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::ap::{average_precision, Label};
use super::report::{EvalReport, Meta, TaskResult, Timing};
use super::tasks::{
    matching_pair, retrieval_ap, retrieval_set, sample_distractor_images, sample_distractor_keypoints,
    sample_queries_for, verification_set, Granularity, SequenceData,
};
use super::{ResultSplit, Task};
use crate::dataset::{load_features, write_features, Dataset, FeatureError, SequenceKind, Split};
use crate::describe::DescribeError;
use crate::pipeline::{ImageFeatures, Pipeline, PipelineError};
use crate::rng::{derive_rng, Purpose};

/// Written at the root of an extracted feature directory.
pub const MANIFEST_FILE: &str = "MANIFEST.json";

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("no sequences to evaluate")]
    NoSequences,
    #[error("sequence {sequence}, image {image}: {source}")]
    Pipeline {
        sequence: String,
        image: usize,
        source: PipelineError,
    },
    #[error("sequence {sequence}, image {image}: {source}")]
    Features {
        sequence: String,
        image: usize,
        source: FeatureError,
    },
    #[error(transparent)]
    Incompatible(DescribeError),
    #[error("bad manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl EvalError {
    /// Whether the error stems from the inputs on disk rather than from flags.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            EvalError::NoSequences
                | EvalError::Pipeline { .. }
                | EvalError::Features { .. }
                | EvalError::Manifest { .. }
                | EvalError::Io { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub tasks: Vec<Task>,
    pub split: Split,
    pub n_queries: usize,
    pub n_distractor_images: usize,
    pub n_distractor_keypoints: usize,
    pub reps: u32,
    pub master_seed: u64,
    /// Forwarded to the detector when features are computed here.
    pub max_keypoints: usize,
    /// Score units without positives as 0 instead of skipping them.
    pub strict: bool,
    pub granularity: Granularity,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            tasks: Task::ALL.to_vec(),
            split: Split::All,
            n_queries: 100,
            n_distractor_images: 5,
            n_distractor_keypoints: 1000,
            reps: 5,
            master_seed: 42,
            max_keypoints: 500,
            strict: false,
            granularity: Granularity::Sequence,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |m: &str| Err(EvalError::Config(m.to_string()));
        if self.tasks.is_empty() {
            return bad("at least one task is required");
        }
        if self.n_queries == 0 || self.n_distractor_images == 0 || self.n_distractor_keypoints == 0 {
            return bad("query and distractor counts must be positive");
        }
        if self.reps == 0 {
            return bad("reps must be at least 1");
        }
        if self.max_keypoints == 0 {
            return bad("max_keypoints must be positive");
        }
        Ok(())
    }

    fn echo(&self) -> serde_json::Value {
        let mut tasks = self.tasks.clone();
        tasks.sort();
        tasks.dedup();
        json!({
            "tasks": tasks,
            "split": self.split.name(),
            "n_queries": self.n_queries,
            "n_distractor_images": self.n_distractor_images,
            "n_distractor_keypoints": self.n_distractor_keypoints,
            "reps": self.reps,
            "master_seed": self.master_seed,
            "max_keypoints": self.max_keypoints,
            "strict": self.strict,
            "retrieval_granularity": self.granularity,
        })
    }
}

#[derive(Debug, Clone)]
pub enum FeatureSource {
    Pipeline(Pipeline),
    /// Directory of `<sequence>/<j>.feat` files.
    External(PathBuf),
}

/// Labels of an extracted feature directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub detector: String,
    pub descriptor: String,
    pub detector_config: serde_json::Value,
}

fn map_units<T, F>(parallel: bool, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if parallel {
        (0..n).into_par_iter().map(f).collect()
    } else {
        (0..n).map(f).collect()
    }
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> EvalError + '_ {
    move |source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn extract_all(dataset: &Dataset, pipeline: &Pipeline, parallel: bool) -> Result<Vec<Vec<ImageFeatures>>, EvalError> {
    let per_image: Vec<(usize, usize)> = dataset
        .sequences
        .iter()
        .enumerate()
        .flat_map(|(s, seq)| (0..seq.images.len()).map(move |j| (s, j)))
        .collect();
    let results = map_units(parallel, per_image.len(), |k| {
        let (s, j) = per_image[k];
        let seq = &dataset.sequences[s];
        pipeline.extract(&seq.images[j]).map_err(|source| EvalError::Pipeline {
            sequence: seq.id.clone(),
            image: j + 1,
            source,
        })
    });
    let mut out: Vec<Vec<ImageFeatures>> = dataset.sequences.iter().map(|_| Vec::new()).collect();
    for ((s, _), r) in per_image.into_iter().zip(results) {
        out[s].push(r?);
    }
    Ok(out)
}

fn manifest_for(pipeline: &Pipeline) -> Manifest {
    Manifest {
        detector: pipeline.detector.name().to_string(),
        descriptor: pipeline.descriptor.name().to_string(),
        detector_config: serde_json::to_value(&pipeline.config).expect("config serializes"),
    }
}

/// Writes `<out>/<sequence>/<j>.feat` for every image plus a manifest. Returns the
/// number of feature files written.
pub fn extract_to_dir(dataset: &Dataset, pipeline: &Pipeline, out: &Path, parallel: bool) -> Result<usize, EvalError> {
    let features = extract_all(dataset, pipeline, parallel)?;
    fs::create_dir_all(out).map_err(io_error(out))?;
    let mut written = 0;
    for (seq, images) in dataset.sequences.iter().zip(&features) {
        for (j, f) in images.iter().enumerate() {
            let path = out.join(&seq.id).join(format!("{}.feat", j + 1));
            write_features(&path, &f.keypoints, &f.descriptors).map_err(|source| EvalError::Features {
                sequence: seq.id.clone(),
                image: j + 1,
                source,
            })?;
            written += 1;
        }
    }
    let manifest = serde_json::to_string_pretty(&manifest_for(pipeline)).expect("manifest serializes") + "\n";
    let path = out.join(MANIFEST_FILE);
    fs::write(&path, manifest).map_err(io_error(&path))?;
    Ok(written)
}

/// Loads `<dir>/<sequence>/<j>.feat` for every image of the dataset.
pub fn load_external(dataset: &Dataset, dir: &Path) -> Result<Vec<Vec<ImageFeatures>>, EvalError> {
    dataset
        .sequences
        .iter()
        .map(|seq| {
            (1..=seq.images.len())
                .map(|j| {
                    let (keypoints, descriptors) = load_features(&dir.join(&seq.id).join(format!("{j}.feat")))
                        .map_err(|source| EvalError::Features {
                            sequence: seq.id.clone(),
                            image: j,
                            source,
                        })?;
                    Ok(ImageFeatures { keypoints, descriptors })
                })
                .collect()
        })
        .collect()
}

fn read_manifest(dir: &Path) -> Result<Option<Manifest>, EvalError> {
    let path = dir.join(MANIFEST_FILE);
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path).map_err(io_error(&path))?;
    serde_json::from_str(&text).map(Some).map_err(|e| EvalError::Manifest {
        path,
        message: e.to_string(),
    })
}

fn check_compatible(data: &[SequenceData]) -> Result<(), EvalError> {
    let mut sets = data.iter().flat_map(|s| s.features.iter()).map(|f| &f.descriptors);
    let Some(first) = sets.next() else { return Ok(()) };
    for set in sets {
        // empty sets carry no rows to compare
        if !set.is_empty() || set.kind() != first.kind() {
            first.check_compatible(set).map_err(EvalError::Incompatible)?;
        }
    }
    Ok(())
}

/// Outcome of one (sequence, repetition) unit.
#[derive(Debug, Default)]
struct Unit {
    verification: Vec<(f64, Label)>,
    verification_skipped: usize,
    matching: Vec<Option<f64>>,
    retrieval: Vec<Option<f64>>,
}

fn evaluate_unit(data: &[SequenceData], i: usize, rep: u32, cfg: &EvalConfig) -> Unit {
    let seq = &data[i];
    let wants = |t: Task| cfg.tasks.contains(&t);
    let mut unit = Unit::default();
    let mut rng = derive_rng(cfg.master_seed, &seq.id, rep, Purpose::Queries);
    let Ok(queries) = sample_queries_for(seq, cfg.n_queries, &mut rng) else {
        unit.verification_skipped = 1;
        unit.matching = vec![None; seq.features.len() - 1];
        unit.retrieval = vec![None];
        return unit;
    };
    if wants(Task::Verification) {
        let mut rng = derive_rng(cfg.master_seed, &seq.id, rep, Purpose::VerificationDistractors);
        let distractors = sample_distractor_images(data, i, cfg.n_distractor_images, &mut rng);
        let set = verification_set(data, i, &queries, &distractors);
        unit.verification = set.scored();
        unit.verification_skipped = set.skipped;
    }
    if wants(Task::Matching) {
        unit.matching = (1..seq.features.len())
            .map(|j| matching_pair(data, i, j, &queries).and_then(|set| average_precision(&set.scored()).ok()))
            .collect();
    }
    if wants(Task::Retrieval) {
        let mut rng = derive_rng(cfg.master_seed, &seq.id, rep, Purpose::RetrievalDistractors);
        let distractors = sample_distractor_keypoints(data, i, cfg.n_distractor_keypoints, &mut rng);
        unit.retrieval = retrieval_ap(&retrieval_set(data, i, &queries, &distractors), cfg.granularity);
    }
    unit
}

fn mean(values: &[f64]) -> Option<f64> {
    let first = *values.first()?;
    // keeps constant series exact, so their spread is exactly 0
    if values.iter().all(|&v| v == first) {
        return Some(first);
    }
    Some(values.iter().sum::<f64>() / values.len() as f64)
}

/// Population standard deviation.
fn std_dev(values: &[f64]) -> Option<f64> {
    let m = mean(values)?;
    Some((values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / values.len() as f64).sqrt())
}

/// mAP of per-unit APs; `None` entries are skipped or, in strict mode, scored 0.
fn fold_units(aps: impl Iterator<Item = Option<f64>>, strict: bool, skipped: &mut usize) -> Option<f64> {
    let mut kept = Vec::new();
    for ap in aps {
        match (ap, strict) {
            (Some(v), _) => kept.push(v),
            (None, true) => kept.push(0.0),
            (None, false) => *skipped += 1,
        }
    }
    mean(&kept)
}

fn task_value(task: Task, units: &[&Unit], cfg: &EvalConfig, skipped: &mut usize) -> Option<f64> {
    match task {
        Task::Verification => {
            *skipped += units.iter().map(|u| u.verification_skipped).sum::<usize>();
            let pooled: Vec<(f64, Label)> = units.iter().flat_map(|u| u.verification.iter().copied()).collect();
            fold_units(std::iter::once(average_precision(&pooled).ok()), cfg.strict, skipped)
        }
        Task::Matching => fold_units(
            units.iter().flat_map(|u| u.matching.iter().copied()),
            cfg.strict,
            skipped,
        ),
        Task::Retrieval => fold_units(
            units.iter().flat_map(|u| u.retrieval.iter().copied()),
            cfg.strict,
            skipped,
        ),
    }
}

fn result(task: Task, split: ResultSplit, per_rep: Vec<Option<f64>>, skipped_units: usize) -> TaskResult {
    let ap_per_rep: Vec<f64> = per_rep.into_iter().flatten().collect();
    TaskResult {
        task,
        split,
        map: mean(&ap_per_rep),
        std: std_dev(&ap_per_rep),
        ap_per_rep,
        skipped_units,
    }
}

fn aggregate(data: &[SequenceData], units: &[Unit], cfg: &EvalConfig) -> Vec<TaskResult> {
    let n = data.len();
    let kinds: Vec<(ResultSplit, SequenceKind)> = [
        (ResultSplit::Illumination, SequenceKind::Illumination),
        (ResultSplit::Viewpoint, SequenceKind::Viewpoint),
    ]
    .into_iter()
    .filter(|(_, k)| data.iter().any(|s| s.kind == *k))
    .collect();
    let mut results = Vec::new();
    for task in Task::ALL.into_iter().filter(|t| cfg.tasks.contains(t)) {
        let mut split_reps: Vec<Vec<Option<f64>>> = Vec::new();
        for &(split, kind) in &kinds {
            let mut skipped = 0;
            let per_rep: Vec<Option<f64>> = (0..cfg.reps as usize)
                .map(|r| {
                    let members: Vec<&Unit> = (0..n)
                        .filter(|&i| data[i].kind == kind)
                        .map(|i| &units[r * n + i])
                        .collect();
                    task_value(task, &members, cfg, &mut skipped)
                })
                .collect();
            split_reps.push(per_rep.clone());
            results.push(result(task, split, per_rep, skipped));
        }
        if !kinds.is_empty() {
            let per_rep = (0..cfg.reps as usize)
                .map(|r| mean(&split_reps.iter().filter_map(|v| v[r]).collect::<Vec<_>>()))
                .collect();
            results.push(result(task, ResultSplit::Mean, per_rep, 0));
        }
    }
    results
}

fn timing(data: &[SequenceData]) -> Timing {
    let counts: Vec<usize> = data
        .iter()
        .flat_map(|s| s.features.iter().map(ImageFeatures::len))
        .collect();
    let total: usize = counts.iter().sum();
    Timing {
        images: counts.len(),
        keypoints_total: total,
        keypoints_per_image: if counts.is_empty() {
            0.0
        } else {
            total as f64 / counts.len() as f64
        },
        images_without_keypoints: counts.iter().filter(|&&c| c == 0).count(),
    }
}

/// Evaluates a feature source on `dataset`. Features are computed (or loaded) once
/// per image; every (sequence, repetition) unit draws from its own random streams,
/// so `parallel` never changes the report.
pub fn run_evaluation(
    dataset: &Dataset,
    source: &FeatureSource,
    cfg: &EvalConfig,
    parallel: bool,
) -> Result<EvalReport, EvalError> {
    cfg.validate()?;
    let (features, detector, descriptor, detector_config) = match source {
        FeatureSource::Pipeline(p) => {
            let mut p = p.clone();
            p.config.max_keypoints = cfg.max_keypoints;
            p.config.validate().map_err(|e| EvalError::Config(e.to_string()))?;
            let m = manifest_for(&p);
            (
                extract_all(dataset, &p, parallel)?,
                m.detector,
                m.descriptor,
                m.detector_config,
            )
        }
        FeatureSource::External(dir) => {
            let features = load_external(dataset, dir)?;
            match read_manifest(dir)? {
                Some(m) => (features, m.detector, m.descriptor, m.detector_config),
                None => (
                    features,
                    "external".to_string(),
                    "external".to_string(),
                    serde_json::Value::Null,
                ),
            }
        }
    };
    let data: Vec<SequenceData> = dataset
        .sequences
        .iter()
        .zip(features)
        .filter(|(s, _)| cfg.split.admits(s.kind))
        .map(|(s, features)| SequenceData {
            id: s.id.clone(),
            kind: s.kind,
            homographies: s.homographies,
            features,
        })
        .collect();
    if data.is_empty() {
        return Err(EvalError::NoSequences);
    }
    check_compatible(&data)?;

    let n = data.len();
    let units = map_units(parallel, cfg.reps as usize * n, |k| {
        evaluate_unit(&data, k % n, (k / n) as u32 + 1, cfg)
    });
    let mut config = cfg.echo();
    config["detector"] = detector_config;
    Ok(EvalReport {
        meta: Meta {
            detector,
            descriptor,
            config,
            dataset_digest: dataset.digest.clone(),
            version: crate::VERSION.to_string(),
        },
        results: aggregate(&data, &units, cfg),
        timing: timing(&data),
    })
}
