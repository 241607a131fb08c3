//! Homography-annotated image sequences on disk.
//!
//! Layout: one directory per sequence, named `i_*` (illumination) or `v_*`
//! (viewpoint), holding images `1..6` as `.ppm` or `.pgm` and homography files
//! `H_1_2 .. H_1_6` mapping the reference image onto each target.

mod features;

pub use features::{
    format_features, load_features, parse_features, write_features, FeatureError, FEATB_TAG, FEATB_VERSION,
};

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::geometry::{GeometryError, Homography, Point};
use crate::imaging::{decode_netpbm, GrayImage, ImageError};

pub const IMAGES_PER_SEQUENCE: usize = 6;
const IDENTITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("dataset root {0} contains no sequences")]
    Empty(PathBuf),
    #[error("sequence {0:?} is neither i_ (illumination) nor v_ (viewpoint)")]
    UnclassifiablePrefix(String),
    #[error("sequence {sequence}: missing image {file}")]
    MissingImage { sequence: String, file: String },
    #[error("sequence {sequence}: missing homography {file}")]
    MissingHomography { sequence: String, file: String },
    #[error("sequence {sequence}: cannot decode {file}: {source}")]
    DecodeFailure {
        sequence: String,
        file: String,
        source: ImageError,
    },
    #[error("sequence {sequence}: bad homography {file}: {source}")]
    BadHomography {
        sequence: String,
        file: String,
        source: GeometryError,
    },
    #[error("illumination sequence {sequence}: {file} is not an identity mapping")]
    NonIdentityIllumination { sequence: String, file: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SequenceKind {
    Illumination,
    Viewpoint,
}

impl SequenceKind {
    pub fn from_id(id: &str) -> Result<Self, DatasetError> {
        if id.starts_with("i_") {
            Ok(SequenceKind::Illumination)
        } else if id.starts_with("v_") {
            Ok(SequenceKind::Viewpoint)
        } else {
            Err(DatasetError::UnclassifiablePrefix(id.to_string()))
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SequenceKind::Illumination => "illumination",
            SequenceKind::Viewpoint => "viewpoint",
        }
    }
}

impl fmt::Display for SequenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    All,
    Illumination,
    Viewpoint,
}

impl Split {
    pub fn admits(self, kind: SequenceKind) -> bool {
        match self {
            Split::All => true,
            Split::Illumination => kind == SequenceKind::Illumination,
            Split::Viewpoint => kind == SequenceKind::Viewpoint,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Split::All => "all",
            Split::Illumination => "illumination",
            Split::Viewpoint => "viewpoint",
        }
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all" => Ok(Split::All),
            "illumination" => Ok(Split::Illumination),
            "viewpoint" => Ok(Split::Viewpoint),
            _ => Err(format!("unknown split {s:?}; expected all, illumination or viewpoint")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Sequence {
    pub id: String,
    pub kind: SequenceKind,
    /// Index 0 is the reference image.
    pub images: Vec<GrayImage>,
    /// `homographies[j - 2]` maps the reference onto image `j`, for j = 2..6.
    pub homographies: [Homography<f64>; 5],
}

impl Sequence {
    /// Homography from the reference onto image `j` (1-based; `j = 1` is the identity).
    pub fn homography(&self, j: usize) -> Homography<f64> {
        assert!((1..=IMAGES_PER_SEQUENCE).contains(&j), "image index {j} out of range");
        if j == 1 {
            Homography::identity()
        } else {
            self.homographies[j - 2]
        }
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub root: PathBuf,
    pub sequences: Vec<Sequence>,
    /// SHA-256 over sequence ids and raw file contents, in canonical order.
    pub digest: String,
}

impl Dataset {
    pub fn count(&self, kind: SequenceKind) -> usize {
        self.sequences.iter().filter(|s| s.kind == kind).count()
    }

    pub fn image_count(&self) -> usize {
        self.sequences.iter().map(|s| s.images.len()).sum()
    }
}

fn read(path: &Path) -> Result<Vec<u8>, DatasetError> {
    fs::read(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })
}

struct LoadedSequence {
    sequence: Sequence,
    files: Vec<(String, Vec<u8>)>,
}

fn load_sequence(dir: &Path, id: &str, kind: SequenceKind) -> Result<LoadedSequence, DatasetError> {
    let mut files = Vec::new();
    let mut images = Vec::with_capacity(IMAGES_PER_SEQUENCE);
    for j in 1..=IMAGES_PER_SEQUENCE {
        let name = ["ppm", "pgm"]
            .iter()
            .map(|ext| format!("{j}.{ext}"))
            .find(|n| dir.join(n).is_file())
            .ok_or_else(|| DatasetError::MissingImage {
                sequence: id.to_string(),
                file: format!("{j}.ppm"),
            })?;
        let bytes = read(&dir.join(&name))?;
        let img = decode_netpbm(&bytes).map_err(|source| DatasetError::DecodeFailure {
            sequence: id.to_string(),
            file: name.clone(),
            source,
        })?;
        images.push(img);
        files.push((name, bytes));
    }
    let mut hs = Vec::with_capacity(5);
    for j in 2..=IMAGES_PER_SEQUENCE {
        let name = format!("H_1_{j}");
        let path = dir.join(&name);
        if !path.is_file() {
            return Err(DatasetError::MissingHomography {
                sequence: id.to_string(),
                file: name,
            });
        }
        let bytes = read(&path)?;
        let text = String::from_utf8_lossy(&bytes);
        let h = Homography::parse(&text).map_err(|source| DatasetError::BadHomography {
            sequence: id.to_string(),
            file: name.clone(),
            source,
        })?;
        if kind == SequenceKind::Illumination && !is_identity(&h) {
            return Err(DatasetError::NonIdentityIllumination {
                sequence: id.to_string(),
                file: name,
            });
        }
        hs.push(h);
        files.push((name, bytes));
    }
    Ok(LoadedSequence {
        sequence: Sequence {
            id: id.to_string(),
            kind,
            images,
            homographies: hs.try_into().expect("five homographies"),
        },
        files,
    })
}

/// Identity to within the tolerance, checked both on the matrix and on sampled points.
fn is_identity(h: &Homography<f64>) -> bool {
    if h.distance_from_identity() > IDENTITY_TOLERANCE {
        return false;
    }
    [(0.0, 0.0), (100.0, 50.0), (640.0, 480.0), (1.5, 999.0)]
        .iter()
        .all(|&(x, y)| {
            let p = Point::new(x, y);
            h.project(p).is_ok_and(|q| q.distance(p) <= IDENTITY_TOLERANCE)
        })
}

/// Loads every sequence under `root` admitted by `split`, sorted by id.
pub fn load_dataset(root: &Path, split: Split) -> Result<Dataset, DatasetError> {
    let entries = fs::read_dir(root).map_err(|source| DatasetError::Io {
        path: root.to_path_buf(),
        source,
    })?;
    let mut dirs = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| DatasetError::Io {
            path: root.to_path_buf(),
            source,
        })?;
        if !entry.path().is_dir() {
            continue;
        }
        let id = entry.file_name().to_string_lossy().into_owned();
        if id.starts_with('.') {
            continue;
        }
        let kind = SequenceKind::from_id(&id)?;
        if split.admits(kind) {
            dirs.push((id, kind));
        }
    }
    dirs.sort();
    if dirs.is_empty() {
        return Err(DatasetError::Empty(root.to_path_buf()));
    }
    let loaded: Vec<LoadedSequence> = dirs
        .par_iter()
        .map(|(id, kind)| load_sequence(&root.join(id), id, *kind))
        .collect::<Result<_, _>>()?;

    let mut hasher = Sha256::new();
    for l in &loaded {
        hasher.update(l.sequence.id.as_bytes());
        hasher.update([0u8]);
        for (name, bytes) in &l.files {
            hasher.update(name.as_bytes());
            hasher.update((bytes.len() as u64).to_le_bytes());
            hasher.update(bytes);
        }
    }
    let digest = hex::encode(hasher.finalize());

    Ok(Dataset {
        root: root.to_path_buf(),
        sequences: loaded.into_iter().map(|l| l.sequence).collect(),
        digest,
    })
}
