//! `FEATB` v1: line-oriented keypoint + descriptor interchange.
//!
//! ```text
//! FEATB 1 <binary|float> <dim>
//! x y score orientation payload
//! ```
//!
//! Binary payloads are `dim / 4` lowercase hex digits (bytes in order); float
//! payloads are `dim` decimal numbers. Reals use 9 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::describe::{DescriptorKind, DescriptorSet};
use crate::detect::Keypoint;

pub const FEATB_TAG: &str = "FEATB";
pub const FEATB_VERSION: &str = "1";

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("cannot access {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("bad FEATB header: {0}")]
    HeaderMismatch(String),
    #[error("line {line}: expected {expected} fields, found {found}")]
    RowArityError { line: usize, expected: usize, found: usize },
    #[error("line {line}: payload does not match declared dimension {dim}")]
    DimensionMismatch { line: usize, dim: usize },
    #[error("line {line}: bad number {token:?}")]
    BadNumber { line: usize, token: String },
    #[error("{keypoints} keypoints but {descriptors} descriptors")]
    CountMismatch { keypoints: usize, descriptors: usize },
}

fn real(v: f64) -> String {
    format!("{v:.8e}")
}

/// Serializes keypoints and their row-aligned descriptors.
pub fn format_features(keypoints: &[Keypoint], descriptors: &DescriptorSet) -> Result<String, FeatureError> {
    if keypoints.len() != descriptors.len() {
        return Err(FeatureError::CountMismatch {
            keypoints: keypoints.len(),
            descriptors: descriptors.len(),
        });
    }
    let mut out = format!(
        "{FEATB_TAG} {FEATB_VERSION} {} {}\n",
        descriptors.kind().name(),
        descriptors.dim()
    );
    for (i, kp) in keypoints.iter().enumerate() {
        let _ = write!(
            out,
            "{} {} {} {}",
            real(kp.x),
            real(kp.y),
            real(kp.score),
            real(kp.orientation)
        );
        match descriptors {
            DescriptorSet::Binary { .. } => {
                out.push(' ');
                for b in descriptors.binary_row(i).expect("binary") {
                    let _ = write!(out, "{b:02x}");
                }
            }
            DescriptorSet::Float { .. } => {
                for v in descriptors.float_row(i).expect("float") {
                    let _ = write!(out, " {v:.8e}");
                }
            }
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn parse_features(text: &str) -> Result<(Vec<Keypoint>, DescriptorSet), FeatureError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| FeatureError::HeaderMismatch("empty file".into()))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 4 || h[0] != FEATB_TAG || h[1] != FEATB_VERSION {
        return Err(FeatureError::HeaderMismatch(header.to_string()));
    }
    let kind = match h[2] {
        "binary" => DescriptorKind::Binary,
        "float" => DescriptorKind::Float,
        other => {
            return Err(FeatureError::HeaderMismatch(format!(
                "unknown descriptor kind {other:?}"
            )))
        }
    };
    let dim: usize = h[3]
        .parse()
        .ok()
        .filter(|&d| d > 0 && (kind == DescriptorKind::Float || d % 8 == 0))
        .ok_or_else(|| FeatureError::HeaderMismatch(format!("bad dimension {:?}", h[3])))?;

    let mut keypoints = Vec::new();
    let mut bytes = Vec::new();
    let mut floats = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let tok: Vec<&str> = line.split_whitespace().collect();
        let expected = match kind {
            DescriptorKind::Binary => 5,
            DescriptorKind::Float => 4 + dim,
        };
        if tok.len() != expected {
            // a float row with the right prefix but wrong payload length is a dimension problem
            if kind == DescriptorKind::Float && tok.len() > 4 {
                return Err(FeatureError::DimensionMismatch { line: line_no, dim });
            }
            return Err(FeatureError::RowArityError {
                line: line_no,
                expected,
                found: tok.len(),
            });
        }
        let num = |t: &str| -> Result<f64, FeatureError> {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| FeatureError::BadNumber {
                    line: line_no,
                    token: t.to_string(),
                })
        };
        keypoints.push(Keypoint {
            x: num(tok[0])?,
            y: num(tok[1])?,
            score: num(tok[2])?,
            orientation: num(tok[3])?,
            scale: 1.0,
        });
        match kind {
            DescriptorKind::Binary => {
                let payload = tok[4];
                if payload.len() != dim / 4 {
                    return Err(FeatureError::DimensionMismatch { line: line_no, dim });
                }
                let decoded = hex::decode(payload).map_err(|_| FeatureError::BadNumber {
                    line: line_no,
                    token: payload.to_string(),
                })?;
                bytes.extend(decoded);
            }
            DescriptorKind::Float => {
                for t in &tok[4..] {
                    let v: f32 =
                        t.parse()
                            .ok()
                            .filter(|v: &f32| v.is_finite())
                            .ok_or_else(|| FeatureError::BadNumber {
                                line: line_no,
                                token: t.to_string(),
                            })?;
                    floats.push(v);
                }
            }
        }
    }
    let set = match kind {
        DescriptorKind::Binary => DescriptorSet::Binary { bits: dim, data: bytes },
        DescriptorKind::Float => DescriptorSet::Float { dim, data: floats },
    };
    Ok((keypoints, set))
}

pub fn write_features(path: &Path, keypoints: &[Keypoint], descriptors: &DescriptorSet) -> Result<(), FeatureError> {
    let text = format_features(keypoints, descriptors)?;
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|source| FeatureError::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, text).map_err(|source| FeatureError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_features(path: &Path) -> Result<(Vec<Keypoint>, DescriptorSet), FeatureError> {
    let text = fs::read_to_string(path).map_err(|source| FeatureError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_features(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::describe::BinaryDescriptor;
    use crate::rng::XorShift64Star;
    use crate::FloatDescriptor;
    use proptest::prelude::*;

    #[test]
    fn empty_list_is_header_only() {
        let set = DescriptorSet::empty(DescriptorKind::Binary, 256);
        let text = format_features(&[], &set).unwrap();
        assert_eq!(text, "FEATB 1 binary 256\n");
        let (k, d) = parse_features(&text).unwrap();
        assert!(k.is_empty());
        assert_eq!(d, set);
    }

    #[test]
    fn single_binary_row() {
        let mut desc = BinaryDescriptor::default();
        desc.0[0] = 0xab;
        desc.0[31] = 0x01;
        let kp = Keypoint::new(30.0, 41.0, 1234.5).with_orientation(-0.25);
        let set = DescriptorSet::from_binary(&[desc]);
        let text = format_features(&[kp], &set).unwrap();
        let row = text.lines().nth(1).unwrap();
        let payload = row.split_whitespace().last().unwrap();
        assert_eq!(payload.len(), 64);
        assert!(payload.starts_with("ab") && payload.ends_with("01"));
        let (k, d) = parse_features(&text).unwrap();
        assert_eq!(k, vec![kp]);
        assert_eq!(d, set);
    }

    #[test]
    fn float_rows_roundtrip() {
        let mut rng = XorShift64Star::new(77);
        let rows: Vec<FloatDescriptor> = (0..1000)
            .map(|_| crate::describe::FloatDescriptor((0..256).map(|_| (rng.next_f64() * 2.0 - 1.0) as f32).collect()))
            .collect();
        let kps: Vec<Keypoint> = (0..1000)
            .map(|i| Keypoint::new(i as f64 * 0.5, 3.0, rng.next_f64() * 1e6).with_orientation(rng.next_f64()))
            .collect();
        let set = DescriptorSet::from_float(&rows);
        let (k, d) = parse_features(&format_features(&kps, &set).unwrap()).unwrap();
        let (DescriptorSet::Float { data: a, .. }, DescriptorSet::Float { data: b, .. }) = (&set, &d) else {
            panic!("kind changed");
        };
        let max_err = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0f32, f32::max);
        assert!(max_err < 1e-6);
        for (p, q) in kps.iter().zip(&k) {
            assert_eq!((p.x, p.y), (q.x, q.y));
            assert!((p.score - q.score).abs() <= 1e-6 * p.score.abs().max(1.0));
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(
            parse_features("FEATX 1 binary 256\n"),
            Err(FeatureError::HeaderMismatch(_))
        ));
        assert!(matches!(
            parse_features("FEATB 2 binary 256\n"),
            Err(FeatureError::HeaderMismatch(_))
        ));
        assert!(matches!(
            parse_features("FEATB 1 binary 12\n"),
            Err(FeatureError::HeaderMismatch(_))
        ));
        assert!(matches!(parse_features(""), Err(FeatureError::HeaderMismatch(_))));
        assert!(matches!(
            parse_features("FEATB 1 binary 16\n1 2 3 abcd\n"),
            Err(FeatureError::RowArityError { line: 2, .. })
        ));
        assert!(matches!(
            parse_features("FEATB 1 binary 16\n1 2 3 4 abcdef\n"),
            Err(FeatureError::DimensionMismatch { line: 2, .. })
        ));
        assert!(matches!(
            parse_features("FEATB 1 float 3\n1 2 3 4 0.1 0.2\n"),
            Err(FeatureError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            parse_features("FEATB 1 float 2\n1 2 3 x 0.1 0.2\n"),
            Err(FeatureError::BadNumber { .. })
        ));
        let kp = Keypoint::new(1.0, 1.0, 1.0);
        assert!(matches!(
            format_features(&[kp], &DescriptorSet::empty(DescriptorKind::Float, 4)),
            Err(FeatureError::CountMismatch { .. })
        ));
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("seq/3.feat");
        let set = DescriptorSet::from_binary(&[BinaryDescriptor([7; 32]), BinaryDescriptor([9; 32])]);
        let kps = [Keypoint::new(22.0, 23.0, 5.0), Keypoint::new(40.0, 23.0, 4.0)];
        write_features(&path, &kps, &set).unwrap();
        assert_eq!(load_features(&path).unwrap(), (kps.to_vec(), set));
    }

    proptest! {
        #[test]
        fn binary_payloads_roundtrip_exactly(
            rows in proptest::collection::vec(proptest::array::uniform32(any::<u8>()), 0..20),
            xs in proptest::collection::vec((0u32..4000, 0u32..4000, -1e9f64..1e9, -std::f64::consts::PI..std::f64::consts::PI), 20)
        ) {
            let desc: Vec<BinaryDescriptor> = rows.iter().map(|r| BinaryDescriptor(*r)).collect();
            let kps: Vec<Keypoint> = xs.iter().take(desc.len())
                .map(|&(x, y, s, o)| Keypoint::new(f64::from(x) / 2.0, f64::from(y), s).with_orientation(o))
                .collect();
            let set = DescriptorSet::from_binary(&desc);
            let (k, d) = parse_features(&format_features(&kps, &set).unwrap()).unwrap();
            prop_assert_eq!(d, set);
            prop_assert_eq!(k.len(), kps.len());
            for (p, q) in kps.iter().zip(&k) {
                prop_assert_eq!((p.x, p.y), (q.x, q.y));
            }
        }
    }
}
