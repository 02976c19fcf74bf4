//! Frame-pair appearance similarity.
//!
//! All similarities in this crate live in `[0, 1]`. Descriptor-backed
//! similarity is cosine similarity on unit-norm descriptors affinely mapped
//! from `[-1, 1]` to `[0, 1]`, so orthogonal descriptors score 0.5. A
//! precomputed matrix can stand in for descriptors when an external retrieval
//! model supplied the scores.

use crate::error::{Error, Result};
use crate::frame::Frame;

/// Provides pairwise similarity between a (test) frame and a (map) frame.
pub trait SimilaritySource: Sync {
    fn sim(&self, query: &Frame, reference: &Frame) -> Result<f64>;
}

/// Raw cosine similarity of two equal-length vectors.
pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(&x, &y)| (x as f64) * (y as f64))
        .sum()
}

/// Maps a cosine value in `[-1, 1]` onto the similarity range `[0, 1]`.
pub fn affine_from_cosine(c: f64) -> f64 {
    (1.0 + c.clamp(-1.0, 1.0)) / 2.0
}

/// Cosine similarity on frame descriptors, affinely mapped to `[0, 1]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct CosineSim;

impl SimilaritySource for CosineSim {
    fn sim(&self, query: &Frame, reference: &Frame) -> Result<f64> {
        let (a, b) = match (&query.descriptor, &reference.descriptor) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(Error::SimilarityUnavailable {
                    test: query.frame_id,
                    map: reference.frame_id,
                    reason: "missing descriptor".into(),
                })
            }
        };
        if a.len() != b.len() {
            return Err(Error::SimilarityUnavailable {
                test: query.frame_id,
                map: reference.frame_id,
                reason: format!("dimension mismatch ({} vs {})", a.len(), b.len()),
            });
        }
        Ok(affine_from_cosine(cosine(a, b)))
    }
}

/// Externally supplied similarity matrix, row = query frame id,
/// column = reference frame id. Values must already be in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct MatrixSim {
    values: Vec<Vec<f64>>,
}

impl MatrixSim {
    pub fn new(values: Vec<Vec<f64>>) -> Result<Self> {
        for (i, row) in values.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidParam(format!(
                        "similarity matrix entry ({i}, {j}) = {v} outside [0, 1]"
                    )));
                }
            }
        }
        Ok(Self { values })
    }
}

impl SimilaritySource for MatrixSim {
    fn sim(&self, query: &Frame, reference: &Frame) -> Result<f64> {
        self.values
            .get(query.frame_id)
            .and_then(|row| row.get(reference.frame_id))
            .copied()
            .ok_or(Error::SimilarityUnavailable {
                test: query.frame_id,
                map: reference.frame_id,
                reason: "index outside similarity matrix".into(),
            })
    }
}
