use std::cmp::Ordering;
use std::collections::HashMap;

use super::Keypoint;

/// Descending score, then ascending (y, x).
fn rank(a: &Keypoint, b: &Keypoint) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.y.total_cmp(&b.y))
        .then(a.x.total_cmp(&b.x))
}

/// Greedy suppression in rank order: a keypoint survives unless an earlier survivor
/// lies within `radius` (inclusive). Survivors are returned in rank order.
pub fn nms(mut keypoints: Vec<Keypoint>, radius: f64) -> Vec<Keypoint> {
    keypoints.sort_by(rank);
    if radius <= 0.0 {
        return keypoints;
    }
    let cell = radius;
    let key = |kp: &Keypoint| ((kp.x / cell).floor() as i64, (kp.y / cell).floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let mut kept: Vec<Keypoint> = Vec::new();
    let r2 = radius * radius;
    for kp in keypoints {
        let (cx, cy) = key(&kp);
        let clash = (-1..=1).any(|dy| {
            (-1..=1).any(|dx| {
                grid.get(&(cx + dx, cy + dy)).is_some_and(|ids| {
                    ids.iter().any(|&i| {
                        let o = &kept[i];
                        let (ex, ey) = (o.x - kp.x, o.y - kp.y);
                        ex * ex + ey * ey <= r2
                    })
                })
            })
        });
        if !clash {
            grid.entry((cx, cy)).or_default().push(kept.len());
            kept.push(kp);
        }
    }
    kept
}

/// The `k` best keypoints in rank order.
pub fn top_k(mut keypoints: Vec<Keypoint>, k: usize) -> Vec<Keypoint> {
    keypoints.sort_by(rank);
    keypoints.truncate(k);
    keypoints
}
