use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{ResultSplit, Task};

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("malformed report: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("combination {0} appears in more than one report")]
    DuplicateCombination(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub detector: String,
    pub descriptor: String,
    /// Effective evaluation and detector configuration.
    pub config: Value,
    pub dataset_digest: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskResult {
    pub task: Task,
    pub split: ResultSplit,
    /// `None` when every unit was skipped.
    pub map: Option<f64>,
    pub std: Option<f64>,
    pub ap_per_rep: Vec<f64>,
    pub skipped_units: usize,
}

/// Deterministic extraction counts. Wall-clock figures live in the timing tables,
/// so reports stay reproducible byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub images: usize,
    pub keypoints_total: usize,
    pub keypoints_per_image: f64,
    pub images_without_keypoints: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub meta: Meta,
    pub results: Vec<TaskResult>,
    pub timing: Timing,
}

/// Rounds to 6 significant digits.
pub(crate) fn round6(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{v:.5e}").parse().expect("formatted float parses")
}

fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let r = round6(n.as_f64().expect("f64 number"));
            *v = serde_json::Number::from_f64(r).map_or(Value::Null, Value::Number);
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(|v| round6(v).to_string()).unwrap_or_default()
}

impl EvalReport {
    /// `DET+DESC`.
    pub fn label(&self) -> String {
        format!(
            "{}+{}",
            self.meta.detector.to_uppercase(),
            self.meta.descriptor.to_uppercase()
        )
    }

    /// Pretty JSON with sorted keys and reals rounded to 6 significant digits.
    pub fn to_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        round_floats(&mut v);
        serde_json::to_string_pretty(&v).expect("value serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, ReportError> {
        Ok(serde_json::from_str(text)?)
    }

    /// One row per task and split.
    pub fn to_csv(&self) -> Result<String, ReportError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "detector",
            "descriptor",
            "task",
            "split",
            "map",
            "std",
            "reps",
            "skipped_units",
            "dataset_digest",
        ])?;
        for r in &self.results {
            w.write_record([
                self.meta.detector.as_str(),
                self.meta.descriptor.as_str(),
                r.task.name(),
                r.split.name(),
                &cell(r.map),
                &cell(r.std),
                &r.ap_per_rep.len().to_string(),
                &r.skipped_units.to_string(),
                &self.meta.dataset_digest,
            ])?;
        }
        Ok(String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8"))
    }

    pub fn map(&self, task: Task, split: ResultSplit) -> Option<f64> {
        self.results
            .iter()
            .find(|r| r.task == task && r.split == split)
            .and_then(|r| r.map)
    }
}

const SPLITS: [ResultSplit; 3] = [ResultSplit::Illumination, ResultSplit::Viewpoint, ResultSplit::Mean];

/// Plot-ready table with one row per `DET+DESC` combination, ordered by the mean
/// mAP of `rank_by` (best first, missing values last).
pub fn combination_table(reports: &[EvalReport], rank_by: Task) -> Result<String, ReportError> {
    let mut by_label: BTreeMap<String, &EvalReport> = BTreeMap::new();
    for r in reports {
        if by_label.insert(r.label(), r).is_some() {
            return Err(ReportError::DuplicateCombination(r.label()));
        }
    }
    let mut rows: Vec<(&String, &EvalReport)> = by_label.iter().map(|(k, v)| (k, *v)).collect();
    // stable on the label order above
    rows.sort_by(|a, b| {
        let key = |r: &EvalReport| r.map(rank_by, ResultSplit::Mean).map(round6);
        match (key(a.1), key(b.1)) {
            (Some(x), Some(y)) => y.total_cmp(&x),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => std::cmp::Ordering::Equal,
        }
    });

    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![
        "combination".to_string(),
        "detector".to_string(),
        "descriptor".to_string(),
    ];
    for t in Task::ALL {
        for s in SPLITS {
            header.push(format!("{}_{}", t.name(), s.name()));
        }
    }
    w.write_record(&header)?;
    for (label, r) in rows {
        let mut record = vec![label.clone(), r.meta.detector.clone(), r.meta.descriptor.clone()];
        for t in Task::ALL {
            for s in SPLITS {
                record.push(cell(r.map(t, s)));
            }
        }
        w.write_record(&record)?;
    }
    Ok(String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8"))
}
