//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sequence is empty")]
    EmptySequence,
    #[error("frame ids must be consecutive from 0 (frame {index} has id {found})")]
    NonConsecutiveFrameIds { index: usize, found: usize },
    #[error("timestamps must strictly increase (frame {index}: {prev} -> {curr})")]
    NonIncreasingTimestamps { index: usize, prev: f64, curr: f64 },
    #[error("traversal distance must be non-decreasing (frame {index}: {prev} -> {curr})")]
    DecreasingTraversal { index: usize, prev: f64, curr: f64 },
    #[error("descriptor of frame {index} has norm {norm}, expected 1 within {tol}")]
    DescriptorNotUnitNorm { index: usize, norm: f64, tol: f64 },
    #[error("descriptor of frame {index} has dimension {found}, expected {expected}")]
    DescriptorDimMismatch {
        index: usize,
        found: usize,
        expected: usize,
    },

    #[error("route distance unavailable: {0}")]
    RouteDistanceUnavailable(String),
    #[error("similarity unavailable for frame pair ({test}, {map}): {reason}")]
    SimilarityUnavailable {
        test: usize,
        map: usize,
        reason: String,
    },

    #[error("node {0} is not in the map")]
    NodeNotInMap(usize),
    #[error("map has no edges")]
    EmptyEdgeSet,
    #[error("map has no nodes")]
    EmptyMap,
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("window length mismatch: test has {test} frames, map window has {map}")]
    WindowLengthMismatch { test: usize, map: usize },
    #[error("window underflow: no aligned frames available")]
    WindowUnderflow,
    #[error("no admissible distractor window (map length {map_len}, window length {window})")]
    NoAdmissibleWindow { map_len: usize, window: usize },
    #[error("true-match similarity is zero; distractor ratio undefined")]
    UndefinedRatio,

    #[error("belief degenerated to zero mass before normalization")]
    DegenerateBelief,
    #[error("belief must sum to 1 within {tol} (got {sum})")]
    BeliefNotNormalized { sum: f64, tol: f64 },

    #[error("successes exceed trials: k={k} > n={n}")]
    SuccessesExceedTrials { k: usize, n: usize },
    #[error("rate must be positive for geometric mean (got {0})")]
    NonPositiveRate(f64),
    #[error("no sweep point within tolerance of target {target}; nearest achievable {nearest}")]
    NoOperatingPoint { target: f64, nearest: f64 },
    #[error("sweep grid must be strictly increasing")]
    NonMonotoneGrid,

    #[error("world spec invalid: {0}")]
    InvalidWorldSpec(String),
    #[error("requested margin {requested} unattainable; achievable bound {achievable}")]
    UnattainableMargin { requested: f64, achievable: f64 },
    #[error("pose ({x}, {y}) does not lie on the world layout (distance {dist})")]
    PoseOffLayout { x: f64, y: f64, dist: f64 },

    #[error("file format error: {0}")]
    Format(String),
    #[error("manifest validation failed: {0}")]
    ManifestInvalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
