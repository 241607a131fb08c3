//! Verification, matching and retrieval tasks over homography-annotated sequences.
//!
//! The tasks work on extracted features only ([`SequenceData`]), so they can be fed
//! by the built-in pipelines or by externally computed `FEATB` files.

mod ap;
mod report;
mod run;
mod tasks;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use ap::{average_precision, average_precision_as, Label, NoPositives};
pub use report::{combination_table, EvalReport, Meta, ReportError, TaskResult, Timing};
pub use run::{
    extract_to_dir, load_external, run_evaluation, EvalConfig, EvalError, FeatureSource, Manifest, MANIFEST_FILE,
};
pub use tasks::{
    matching_pair, reprojection_distances, retrieval_ap, retrieval_set, sample_distractor_images,
    sample_distractor_keypoints, sample_queries, verification_set, Granularity, LabeledTuple, SequenceData, TaskError,
    TupleSet,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Verification,
    Matching,
    Retrieval,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::Verification, Task::Matching, Task::Retrieval];

    pub fn name(self) -> &'static str {
        match self {
            Task::Verification => "verification",
            Task::Matching => "matching",
            Task::Retrieval => "retrieval",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Task::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| format!("unknown task {s:?}; expected verification, matching or retrieval"))
    }
}

/// Split a result is reported for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResultSplit {
    Illumination,
    Viewpoint,
    /// Mean of the available per-kind values.
    Mean,
}

impl ResultSplit {
    pub fn name(self) -> &'static str {
        match self {
            ResultSplit::Illumination => "illumination",
            ResultSplit::Viewpoint => "viewpoint",
            ResultSplit::Mean => "mean",
        }
    }
}

impl fmt::Display for ResultSplit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
