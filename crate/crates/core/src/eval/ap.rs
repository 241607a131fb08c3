use num_traits::{FromPrimitive, Num};
use serde::{Deserialize, Serialize};

/// Tuple label: `+1` correct, `0` in-sequence but not the closest (retrieval only),
/// `-1` wrong.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Positive,
    Ignored,
    Negative,
}

impl Label {
    pub fn value(self) -> i8 {
        match self {
            Label::Positive => 1,
            Label::Ignored => 0,
            Label::Negative => -1,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("ranked list has no positive entries")]
pub struct NoPositives;

/// Average precision of a list ranked by ascending distance, in `f64`.
pub fn average_precision(items: &[(f64, Label)]) -> Result<f64, NoPositives> {
    average_precision_as::<f64>(items)
}

/// Average precision evaluated in any numeric type (e.g. an exact rational).
///
/// Items are ranked by ascending distance with a stable sort, so equal distances
/// keep their input order. [`Label::Ignored`] items are dropped before ranking.
/// The result is the mean, over positives, of the precision at each positive's rank.
pub fn average_precision_as<T>(items: &[(f64, Label)]) -> Result<T, NoPositives>
where
    T: Num + FromPrimitive + Clone,
{
    let mut ranked: Vec<(f64, Label)> = items.iter().copied().filter(|(_, y)| *y != Label::Ignored).collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0));
    let of = |n: usize| T::from_usize(n).expect("count fits the scalar type");
    let mut hits = 0usize;
    let mut total = T::zero();
    for (rank, (_, y)) in ranked.iter().enumerate() {
        if *y == Label::Positive {
            hits += 1;
            total = total + of(hits) / of(rank + 1);
        }
    }
    if hits == 0 {
        return Err(NoPositives);
    }
    Ok(total / of(hits))
}
