use serde::{Deserialize, Serialize};

use super::ap::{average_precision, Label};
use crate::dataset::SequenceKind;
use crate::detect::Keypoint;
use crate::geometry::{reproj_dist, GeometryError, Homography, Point};
use crate::pipeline::ImageFeatures;
use crate::rng::XorShift64Star;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum TaskError {
    #[error("sequence {sequence}: reference image has no keypoints")]
    EmptyKeypointSet { sequence: String },
}

/// Features of one sequence plus its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceData {
    pub id: String,
    pub kind: SequenceKind,
    /// `homographies[j - 1]` maps the reference onto image `j` (0-based, j = 1..5).
    pub homographies: [Homography<f64>; 5],
    /// Six entries; index 0 is the reference.
    pub features: Vec<ImageFeatures>,
}

impl SequenceData {
    fn reference(&self) -> &ImageFeatures {
        &self.features[0]
    }
}

/// One scored correspondence. Indices refer to the slice of [`SequenceData`] the
/// tuple was built from; images are 0-based (0 is the reference).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledTuple {
    pub sequence: usize,
    pub query: usize,
    pub target_sequence: usize,
    pub target_image: usize,
    pub candidate: usize,
    pub s: f64,
    pub y: Label,
}

impl LabeledTuple {
    pub fn query_keypoint<'a>(&self, data: &'a [SequenceData]) -> &'a Keypoint {
        &data[self.sequence].features[0].keypoints[self.query]
    }

    pub fn match_keypoint<'a>(&self, data: &'a [SequenceData]) -> &'a Keypoint {
        &data[self.target_sequence].features[self.target_image].keypoints[self.candidate]
    }

    pub fn scored(&self) -> (f64, Label) {
        (self.s, self.y)
    }
}

/// Tuples in emission order plus the number of units that produced nothing
/// (empty target images, projections to infinity).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TupleSet {
    pub tuples: Vec<LabeledTuple>,
    pub skipped: usize,
}

impl TupleSet {
    pub fn scored(&self) -> Vec<(f64, Label)> {
        self.tuples.iter().map(LabeledTuple::scored).collect()
    }
}

/// How retrieval tuples are grouped before scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    /// One ranked list per sequence, pooling all its queries.
    #[default]
    Sequence,
    /// One ranked list per query.
    Query,
}

fn point(kp: &Keypoint) -> Point<f64> {
    Point::new(kp.x, kp.y)
}

/// `|H x - z|` for every candidate `z`.
pub fn reprojection_distances(
    h: &Homography<f64>,
    x: &Keypoint,
    candidates: &[Keypoint],
) -> Result<Vec<f64>, GeometryError> {
    candidates.iter().map(|z| reproj_dist(h, point(x), point(z))).collect()
}

fn min(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Uniform sample of `n` reference keypoints without replacement, returned as
/// indices ordered by (y, x).
pub fn sample_queries(keypoints: &[Keypoint], n: usize, rng: &mut XorShift64Star) -> Result<Vec<usize>, TaskError> {
    sample_queries_in(keypoints, n, rng, "")
}

fn sample_queries_in(
    keypoints: &[Keypoint],
    n: usize,
    rng: &mut XorShift64Star,
    id: &str,
) -> Result<Vec<usize>, TaskError> {
    if n == 0 {
        return Ok(Vec::new());
    }
    if keypoints.is_empty() {
        return Err(TaskError::EmptyKeypointSet {
            sequence: id.to_string(),
        });
    }
    let mut chosen = rng.sample_indices(keypoints.len(), n);
    chosen.sort_by(|&a, &b| {
        let (p, q) = (&keypoints[a], &keypoints[b]);
        p.y.total_cmp(&q.y).then(p.x.total_cmp(&q.x)).then(a.cmp(&b))
    });
    Ok(chosen)
}

pub(crate) fn sample_queries_for(
    data: &SequenceData,
    n: usize,
    rng: &mut XorShift64Star,
) -> Result<Vec<usize>, TaskError> {
    sample_queries_in(&data.reference().keypoints, n, rng, &data.id)
}

/// Up to `n` images `(sequence, image)` drawn uniformly from sequences other than `i`.
pub fn sample_distractor_images(
    data: &[SequenceData],
    i: usize,
    n: usize,
    rng: &mut XorShift64Star,
) -> Vec<(usize, usize)> {
    let pool: Vec<(usize, usize)> = data
        .iter()
        .enumerate()
        .filter(|(p, _)| *p != i)
        .flat_map(|(p, s)| (0..s.features.len()).map(move |l| (p, l)))
        .collect();
    rng.sample_indices(pool.len(), n).into_iter().map(|k| pool[k]).collect()
}

/// Up to `n` keypoints `(sequence, image, index)` drawn uniformly from all
/// keypoints of sequences other than `i`.
pub fn sample_distractor_keypoints(
    data: &[SequenceData],
    i: usize,
    n: usize,
    rng: &mut XorShift64Star,
) -> Vec<(usize, usize, usize)> {
    // cumulative counts over the flattened out-of-sequence images
    let mut images = Vec::new();
    let mut starts = Vec::new();
    let mut total = 0usize;
    for (p, s) in data.iter().enumerate().filter(|(p, _)| *p != i) {
        for (l, f) in s.features.iter().enumerate() {
            if !f.is_empty() {
                images.push((p, l));
                starts.push(total);
                total += f.len();
            }
        }
    }
    rng.sample_indices(total, n)
        .into_iter()
        .map(|k| {
            let at = starts.partition_point(|&s| s <= k) - 1;
            let (p, l) = images[at];
            (p, l, k - starts[at])
        })
        .collect()
}

/// Keypoint verification tuples of sequence `i`, query-major: for each query the
/// nearest neighbour in every target image, then in every distractor image.
pub fn verification_set(
    data: &[SequenceData],
    i: usize,
    queries: &[usize],
    distractors: &[(usize, usize)],
) -> TupleSet {
    let seq = &data[i];
    let reference = seq.reference();
    let mut out = TupleSet::default();
    for &q in queries {
        let x = &reference.keypoints[q];
        for j in 1..seq.features.len() {
            let target = &seq.features[j];
            let Ok((m, s)) = reference.descriptors.nearest(q, &target.descriptors) else {
                out.skipped += 1;
                continue;
            };
            let Ok(d) = reprojection_distances(&seq.homographies[j - 1], x, &target.keypoints) else {
                out.skipped += 1;
                continue;
            };
            let y = if d[m] <= min(&d) {
                Label::Positive
            } else {
                Label::Negative
            };
            out.tuples.push(LabeledTuple {
                sequence: i,
                query: q,
                target_sequence: i,
                target_image: j,
                candidate: m,
                s,
                y,
            });
        }
        for &(p, l) in distractors {
            let Ok((m, s)) = reference.descriptors.nearest(q, &data[p].features[l].descriptors) else {
                out.skipped += 1;
                continue;
            };
            out.tuples.push(LabeledTuple {
                sequence: i,
                query: q,
                target_sequence: p,
                target_image: l,
                candidate: m,
                s,
                y: Label::Negative,
            });
        }
    }
    out
}

/// Image matching tuples for the pair (reference, image `j`) of sequence `i`.
/// `None` when image `j` has no keypoints.
pub fn matching_pair(data: &[SequenceData], i: usize, j: usize, queries: &[usize]) -> Option<TupleSet> {
    let seq = &data[i];
    let reference = seq.reference();
    let target = &seq.features[j];
    if target.is_empty() {
        return None;
    }
    let mut out = TupleSet::default();
    for &q in queries {
        let x = &reference.keypoints[q];
        let Ok((m, s)) = reference.descriptors.nearest(q, &target.descriptors) else {
            out.skipped += 1;
            continue;
        };
        let Ok(d) = reprojection_distances(&seq.homographies[j - 1], x, &target.keypoints) else {
            out.skipped += 1;
            continue;
        };
        let y = if d[m] <= min(&d) {
            Label::Positive
        } else {
            Label::Negative
        };
        out.tuples.push(LabeledTuple {
            sequence: i,
            query: q,
            target_sequence: i,
            target_image: j,
            candidate: m,
            s,
            y,
        });
    }
    Some(out)
}

/// Keypoint retrieval tuples of sequence `i`, query-major. Every candidate of every
/// target image is scored (label +1 if it is the reprojection-closest in its image,
/// 0 otherwise), followed by every distractor keypoint (label -1).
///
/// All descriptor sets must be mutually compatible.
pub fn retrieval_set(
    data: &[SequenceData],
    i: usize,
    queries: &[usize],
    distractors: &[(usize, usize, usize)],
) -> TupleSet {
    let seq = &data[i];
    let reference = seq.reference();
    let mut out = TupleSet::default();
    for &q in queries {
        let x = &reference.keypoints[q];
        for j in 1..seq.features.len() {
            let target = &seq.features[j];
            if target.is_empty() {
                out.skipped += 1;
                continue;
            }
            let Ok(d) = reprojection_distances(&seq.homographies[j - 1], x, &target.keypoints) else {
                out.skipped += 1;
                continue;
            };
            let closest = min(&d);
            for (c, &dc) in d.iter().enumerate() {
                out.tuples.push(LabeledTuple {
                    sequence: i,
                    query: q,
                    target_sequence: i,
                    target_image: j,
                    candidate: c,
                    s: reference.descriptors.distance(q, &target.descriptors, c),
                    y: if dc <= closest { Label::Positive } else { Label::Ignored },
                });
            }
        }
        for &(p, l, c) in distractors {
            out.tuples.push(LabeledTuple {
                sequence: i,
                query: q,
                target_sequence: p,
                target_image: l,
                candidate: c,
                s: reference.descriptors.distance(q, &data[p].features[l].descriptors, c),
                y: Label::Negative,
            });
        }
    }
    out
}

/// Retrieval APs: one for the whole set, or one per query. Lists without
/// positives give `None`. The set must be query-major.
pub fn retrieval_ap(set: &TupleSet, granularity: Granularity) -> Vec<Option<f64>> {
    match granularity {
        Granularity::Sequence => vec![average_precision(&set.scored()).ok()],
        Granularity::Query => set
            .tuples
            .chunk_by(|a, b| a.query == b.query)
            .map(|g| average_precision(&g.iter().map(LabeledTuple::scored).collect::<Vec<_>>()).ok())
            .collect(),
    }
}
