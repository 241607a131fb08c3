//! Deterministic synthetic scenes and sequence fixtures.
//!
//! Used by the test suites and handy for smoke-testing the CLI without a dataset.

use std::fs;
use std::io;
use std::path::Path;

use crate::dataset::SequenceKind;
use crate::describe::{BinaryDescriptor, DescriptorSet, BINARY_BITS};
use crate::detect::Keypoint;
use crate::eval::SequenceData;
use crate::geometry::{Homography, Point};
use crate::imaging::{encode_pgm, GrayImage};
use crate::pipeline::ImageFeatures;
use crate::rng::XorShift64Star;

/// Overlapping rectangles and discs of random gray levels on a shaded background.
pub fn textured_image(width: usize, height: usize, seed: u64) -> GrayImage {
    let mut rng = XorShift64Star::new(seed);
    let mut img = GrayImage::from_fn(width, height, |x, y| (96 + (x * 3 + y * 2) % 64) as u8);
    let shapes = (width * height / 400).max(8);
    for _ in 0..shapes {
        let level = rng.below(256) as u8;
        let cx = rng.below(width as u64) as i64;
        let cy = rng.below(height as u64) as i64;
        let size = 3 + rng.below(18) as i64;
        let disc = rng.below(3) == 0;
        let (aspect_w, aspect_h) = (size, 3 + rng.below(18) as i64);
        for y in (cy - aspect_h).max(0)..(cy + aspect_h).min(height as i64) {
            for x in (cx - aspect_w).max(0)..(cx + aspect_w).min(width as i64) {
                let inside = if disc {
                    (x - cx).pow(2) + (y - cy).pow(2) <= size * size
                } else {
                    true
                };
                if inside {
                    img.set(x as usize, y as usize, level);
                }
            }
        }
    }
    img
}

/// Resamples `reference` so that pixel `p` of the result shows `reference(H^-1 p)`,
/// with bilinear interpolation and `fill` outside the source.
pub fn warp(reference: &GrayImage, h: &Homography<f64>, fill: u8) -> GrayImage {
    let inv = h.inverse().expect("invertible homography");
    let (w, hh) = (reference.width(), reference.height());
    GrayImage::from_fn(w, hh, |x, y| {
        let Ok(src) = inv.project(crate::geometry::Point::new(x as f64, y as f64)) else {
            return fill;
        };
        let (fx, fy) = (src.x.floor(), src.y.floor());
        if fx < 0.0 || fy < 0.0 || fx + 1.0 >= w as f64 || fy + 1.0 >= hh as f64 {
            // exact hits on the last row/column still resolve
            let (rx, ry) = (src.x.round(), src.y.round());
            if (src.x - rx).abs() < 1e-9
                && (src.y - ry).abs() < 1e-9
                && rx >= 0.0
                && ry >= 0.0
                && rx < w as f64
                && ry < hh as f64
            {
                return reference.get(rx as usize, ry as usize);
            }
            return fill;
        }
        let (ax, ay) = (src.x - fx, src.y - fy);
        let (x0, y0) = (fx as usize, fy as usize);
        let p = |dx: usize, dy: usize| f64::from(reference.get(x0 + dx, y0 + dy));
        let v = p(0, 0) * (1.0 - ax) * (1.0 - ay)
            + p(1, 0) * ax * (1.0 - ay)
            + p(0, 1) * (1.0 - ax) * ay
            + p(1, 1) * ax * ay;
        v.round().clamp(0.0, 255.0) as u8
    })
}

/// Text form accepted by [`Homography::parse`], three rows of three numbers.
pub fn homography_text(h: &Homography<f64>) -> String {
    h.matrix()
        .iter()
        .map(|row| row.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(" "))
        .collect::<Vec<_>>()
        .join("\n")
        + "\n"
}

/// Writes `<root>/<id>/{1..6}.pgm` and `H_1_2 .. H_1_6`.
pub fn write_sequence(
    root: &Path,
    id: &str,
    images: &[GrayImage; 6],
    homographies: &[Homography<f64>; 5],
) -> io::Result<()> {
    let dir = root.join(id);
    fs::create_dir_all(&dir)?;
    for (j, img) in images.iter().enumerate() {
        fs::write(dir.join(format!("{}.pgm", j + 1)), encode_pgm(img))?;
    }
    for (j, h) in homographies.iter().enumerate() {
        fs::write(dir.join(format!("H_1_{}", j + 2)), homography_text(h))?;
    }
    Ok(())
}

/// A viewpoint sequence: textured reference plus targets shifted by integer
/// translations `(k * step, -k * step / 2)` for k = 1..5.
pub fn translated_sequence(
    width: usize,
    height: usize,
    seed: u64,
    step: i32,
) -> ([GrayImage; 6], [Homography<f64>; 5]) {
    let reference = textured_image(width, height, seed);
    let hs: [Homography<f64>; 5] = std::array::from_fn(|k| {
        let k = k as i32 + 1;
        Homography::translation(f64::from(k * step), f64::from(-(k * step) / 2))
    });
    let images: [GrayImage; 6] = std::array::from_fn(|j| {
        if j == 0 {
            reference.clone()
        } else {
            warp(&reference, &hs[j - 1], 128)
        }
    });
    (images, hs)
}

/// An illumination sequence: identity homographies and per-image gain/offset changes.
pub fn illumination_sequence(width: usize, height: usize, seed: u64) -> ([GrayImage; 6], [Homography<f64>; 5]) {
    let reference = textured_image(width, height, seed);
    let images: [GrayImage; 6] = std::array::from_fn(|j| {
        let gain = 1.0 - 0.08 * j as f64;
        let offset = 4.0 * j as f64;
        reference.map(|v| (f64::from(v) * gain + offset).round().clamp(0.0, 255.0) as u8)
    });
    (images, std::array::from_fn(|_| Homography::identity()))
}

/// Writes a small three-sequence dataset: two translated viewpoint sequences
/// (`v_shift_a`, `v_shift_b`) and one illumination sequence (`i_light`).
pub fn write_demo_dataset(root: &Path, width: usize, height: usize) -> io::Result<()> {
    let (imgs, hs) = translated_sequence(width, height, 1, 3);
    write_sequence(root, "v_shift_a", &imgs, &hs)?;
    let (imgs, hs) = translated_sequence(width, height, 2, -2);
    write_sequence(root, "v_shift_b", &imgs, &hs)?;
    let (imgs, hs) = illumination_sequence(width, height, 3);
    write_sequence(root, "i_light", &imgs, &hs)
}

fn random_descriptor(rng: &mut XorShift64Star) -> BinaryDescriptor {
    let mut d = BinaryDescriptor::default();
    for byte in d.0.iter_mut() {
        *byte = rng.below(256) as u8;
    }
    d
}

fn flip_bits(d: &BinaryDescriptor, n: usize, rng: &mut XorShift64Star) -> BinaryDescriptor {
    let mut out = *d;
    for i in rng.sample_indices(BINARY_BITS, n) {
        out.0[i / 8] ^= 1 << (i % 8);
    }
    out
}

/// Three feature-level sequences (`v_alpha`, `v_beta`, `i_gamma`) with random
/// binary descriptors. Each target image holds most reference points projected by
/// its homography, jittered by up to 1.5 px and carrying a few flipped bits, plus
/// random clutter, all shuffled. Labels therefore mix positives and negatives.
pub fn labeled_fixture(seed: u64) -> Vec<SequenceData> {
    let mut rng = XorShift64Star::new(seed);
    let specs = [
        ("i_gamma", SequenceKind::Illumination),
        ("v_alpha", SequenceKind::Viewpoint),
        ("v_beta", SequenceKind::Viewpoint),
    ];
    specs
        .iter()
        .map(|&(id, kind)| {
            let homographies: [Homography<f64>; 5] = std::array::from_fn(|k| {
                if kind == SequenceKind::Illumination {
                    return Homography::identity();
                }
                let j = (k + 1) as f64;
                Homography::from_matrix([
                    [1.0 + 0.01 * j, 0.02, 3.0 * j],
                    [-0.01, 1.0 - 0.01 * j, -2.0 * j],
                    [1e-5 * j, -5e-6 * j, 1.0],
                ])
                .expect("well-conditioned")
            });
            let n = 40;
            let reference: Vec<Keypoint> = (0..n)
                .map(|_| {
                    Keypoint::new(
                        30.0 + rng.next_f64() * 260.0,
                        30.0 + rng.next_f64() * 180.0,
                        rng.next_f64(),
                    )
                })
                .collect();
            let ref_desc: Vec<BinaryDescriptor> = (0..n).map(|_| random_descriptor(&mut rng)).collect();
            let mut features = vec![ImageFeatures {
                keypoints: reference.clone(),
                descriptors: DescriptorSet::from_binary(&ref_desc),
            }];
            for h in &homographies {
                let mut rows: Vec<(Keypoint, BinaryDescriptor)> = Vec::new();
                for (kp, d) in reference.iter().zip(&ref_desc) {
                    if rng.below(5) == 0 {
                        continue;
                    }
                    let p = h.project(Point::new(kp.x, kp.y)).expect("finite projection");
                    let jitter = |r: &mut XorShift64Star| (r.next_f64() - 0.5) * 3.0;
                    let flips = rng.below(48) as usize;
                    rows.push((
                        Keypoint::new(p.x + jitter(&mut rng), p.y + jitter(&mut rng), rng.next_f64()),
                        flip_bits(d, flips, &mut rng),
                    ));
                }
                for _ in 0..15 {
                    rows.push((
                        Keypoint::new(rng.next_f64() * 320.0, rng.next_f64() * 240.0, rng.next_f64()),
                        random_descriptor(&mut rng),
                    ));
                }
                // Fisher-Yates
                for a in (1..rows.len()).rev() {
                    let b = rng.below(a as u64 + 1) as usize;
                    rows.swap(a, b);
                }
                let descriptors: Vec<BinaryDescriptor> = rows.iter().map(|r| r.1).collect();
                features.push(ImageFeatures {
                    keypoints: rows.into_iter().map(|r| r.0).collect(),
                    descriptors: DescriptorSet::from_binary(&descriptors),
                });
            }
            SequenceData {
                id: id.to_string(),
                kind,
                homographies,
                features,
            }
        })
        .collect()
}
