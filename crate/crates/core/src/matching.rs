//! Plaintext dissimilarity computation and score-level fusion.
//!
//! Scores are dissimilarities throughout: lower means more similar.
//! Squared Euclidean distance is computed exactly (integer arithmetic)
//! for quantized and binary inputs.

use crate::error::{Error, Result};
use crate::vector::{BinaryVector, VectorPayload};

/// How a dissimilarity score was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreKind {
    FloatSed,
    IntSed,
    Hamming,
}

/// Non-negative dissimilarity score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score {
    pub value: f64,
    pub kind: ScoreKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Accept,
    Reject,
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch { left: a, right: b });
    }
    Ok(())
}

/// Exact squared Euclidean distance over integer levels. Values stay well
/// below 2^53, so the f64 score is exact.
pub fn sed_integer(a: &[u32], b: &[u32]) -> u64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = i64::from(x) - i64::from(y);
            (d * d) as u64
        })
        .sum()
}

/// Squared Euclidean distance between two vectors of the same numeric kind.
pub fn sed(a: &VectorPayload, b: &VectorPayload) -> Result<Score> {
    check_dims(a.dim(), b.dim())?;
    match (a, b) {
        (VectorPayload::Real(x), VectorPayload::Real(y)) => {
            let value = x
                .elements()
                .iter()
                .zip(y.elements())
                .map(|(p, q)| (p - q) * (p - q))
                .sum();
            Ok(Score {
                value,
                kind: ScoreKind::FloatSed,
            })
        }
        (VectorPayload::Quantized(x), VectorPayload::Quantized(y)) => {
            if x.q() != y.q() {
                return Err(Error::KindMismatch {
                    left: a.kind().to_string(),
                    right: b.kind().to_string(),
                });
            }
            Ok(Score {
                value: sed_integer(x.levels(), y.levels()) as f64,
                kind: ScoreKind::IntSed,
            })
        }
        (VectorPayload::Binary(x), VectorPayload::Binary(y)) => {
            let value = x
                .bits()
                .iter()
                .zip(y.bits())
                .filter(|(p, q)| p != q)
                .count() as f64;
            Ok(Score {
                value,
                kind: ScoreKind::IntSed,
            })
        }
        _ => Err(Error::KindMismatch {
            left: a.kind().to_string(),
            right: b.kind().to_string(),
        }),
    }
}

/// Hamming distance between binary vectors; equals SED over {0,1} exactly.
pub fn hamming(a: &BinaryVector, b: &BinaryVector) -> Result<Score> {
    check_dims(a.dim(), b.dim())?;
    let value = a
        .bits()
        .iter()
        .zip(b.bits())
        .filter(|(x, y)| x != y)
        .count() as f64;
    Ok(Score {
        value,
        kind: ScoreKind::Hamming,
    })
}

/// Sum-rule fusion of per-modality scores. All scores must share a kind.
pub fn score_fusion_sum(scores: &[Score]) -> Result<Score> {
    let first = scores
        .first()
        .ok_or_else(|| Error::EmptyInput("score list".into()))?;
    if scores.iter().any(|s| s.kind != first.kind) {
        return Err(Error::KindMismatch {
            left: format!("{:?}", first.kind),
            right: "mixed score kinds".into(),
        });
    }
    Ok(Score {
        value: scores.iter().map(|s| s.value).sum(),
        kind: first.kind,
    })
}

/// Threshold decision: accept iff the score is at or below the threshold.
pub fn decide(s: &Score, threshold: f64) -> Decision {
    if s.value <= threshold {
        Decision::Accept
    } else {
        Decision::Reject
    }
}
