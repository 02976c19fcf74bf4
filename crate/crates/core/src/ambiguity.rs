//! Dataset ambiguity quantification.
//!
//! Every test case is a short sequence played against a mapping sequence.
//! Ground truth aligns each test frame to its true mapping frame (or to
//! nothing, for novel places); sliding-window sequence similarity then
//! measures how strongly distractor windows compete with the true match.
//! Each case lands in one of three ambiguity categories, plus a fourth for
//! novel sequences nothing in the map resembles.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::Sequence;
use crate::graph::TopoMap;
use crate::similarity::SimilaritySource;

/// Fraction of the window length two windows may share before the candidate
/// is no longer counted as a distractor. A one-frame-shifted copy of the
/// true match measures localization jitter, not aliasing between places.
pub const DISTRACTOR_OVERLAP_FRACTION: f64 = 0.25;

/// Ground-truth correspondence from test frames to mapping frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correspondence {
    /// Per test-frame index: the aligned mapping-frame index, or `None` for
    /// frames in novel regions.
    pi: Vec<Option<usize>>,
    /// Spatial radius, in meters, within which a match was declared.
    align_radius: f64,
}

impl Correspondence {
    pub fn new(pi: Vec<Option<usize>>, align_radius: f64) -> Self {
        Self { pi, align_radius }
    }

    pub fn pi(&self, test_idx: usize) -> Option<usize> {
        self.pi.get(test_idx).copied().flatten()
    }

    pub fn mappings(&self) -> &[Option<usize>] {
        &self.pi
    }

    pub fn align_radius(&self) -> f64 {
        self.align_radius
    }

    /// A test sequence is novel overall iff every frame maps to nothing.
    pub fn is_novel(&self) -> bool {
        self.pi.iter().all(|m| m.is_none())
    }

    /// Start index of the true-match window for the last `window_len` test
    /// frames: the window that pairs each aligned test frame with its true
    /// mapping frame. `None` when the sequence is novel.
    pub fn true_window_start(&self, test_window_offset: usize, map_len: usize, window_len: usize) -> Option<usize> {
        let (i0, m0) = self
            .pi
            .iter()
            .enumerate()
            .skip(test_window_offset)
            .find_map(|(i, m)| m.map(|mm| (i, mm)))?;
        let rel = i0 - test_window_offset;
        let start = m0 as isize - rel as isize;
        let max_start = map_len.saturating_sub(window_len) as isize;
        Some(start.clamp(0, max_start) as usize)
    }
}

/// Aligns each test frame to the nearest mapping frame within `align_radius`
/// (ground-truth positions), or to nothing when no mapping frame is close.
pub fn build_correspondence(
    test: &Sequence,
    map_seq: &Sequence,
    align_radius: f64,
) -> Correspondence {
    let pi = test
        .frames()
        .iter()
        .map(|tf| {
            let mut best: Option<(usize, f64)> = None;
            for mf in map_seq.frames() {
                let dist = tf.pose.distance(&mf.pose);
                if dist <= align_radius {
                    let better = match best {
                        None => true,
                        Some((_, bd)) => dist < bd,
                    };
                    if better {
                        best = Some((mf.frame_id, dist));
                    }
                }
            }
            best.map(|(id, _)| id)
        })
        .collect();
    Correspondence::new(pi, align_radius)
}

/// Thresholds governing the ambiguity taxonomy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmbiguityParams {
    /// Similarity level above which a window counts as visually similar.
    pub tau: f64,
    /// Distractor-to-true-match ratio above which a revisit is ambiguous.
    pub alpha: f64,
    /// Window length in frames.
    pub seq_len: usize,
}

impl AmbiguityParams {
    pub fn new(tau: f64, alpha: f64, seq_len: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::InvalidParam(format!("tau must be in [0, 1] (got {tau})")));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidParam(format!(
                "alpha must be in (0, 1] (got {alpha})"
            )));
        }
        if seq_len == 0 {
            return Err(Error::InvalidParam("seq_len must be >= 1".into()));
        }
        Ok(Self { tau, alpha, seq_len })
    }
}

impl Default for AmbiguityParams {
    fn default() -> Self {
        Self {
            tau: 0.7,
            alpha: 0.9,
            seq_len: 5,
        }
    }
}

/// The ambiguity category of a test case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CaseLabel {
    /// Revisit with at least one distractor nearly as similar as the truth.
    #[serde(rename = "A+P")]
    AmbiguousPositive,
    /// Revisit whose true match clearly dominates all distractors.
    #[serde(rename = "P.O.")]
    PositiveOnly,
    /// Novel region with a spuriously similar mapped window.
    #[serde(rename = "A.O.")]
    AmbiguousOnly,
    /// Novel region nothing in the map resembles; outside the three-way
    /// accounting but kept so sweeps can report it.
    #[serde(rename = "NOVEL")]
    NovelClean,
}

impl CaseLabel {
    pub const TAXONOMY: [CaseLabel; 3] = [
        CaseLabel::AmbiguousPositive,
        CaseLabel::PositiveOnly,
        CaseLabel::AmbiguousOnly,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            CaseLabel::AmbiguousPositive => "A+P",
            CaseLabel::PositiveOnly => "P.O.",
            CaseLabel::AmbiguousOnly => "A.O.",
            CaseLabel::NovelClean => "NOVEL",
        }
    }
}

impl std::fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A label plus the measured evidence that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub label: CaseLabel,
    /// Similarity of the true-match window; absent for novel sequences.
    pub sim_true: Option<f64>,
    /// Best admissible distractor: window start and similarity.
    pub best_distractor: Option<(usize, f64)>,
    /// Distractor-to-true ratio; absent for novel sequences.
    pub ratio: Option<f64>,
    /// Maximum window similarity over the whole map.
    pub max_sim: f64,
}

/// Mean of the frame-aligned similarities of two equal-length windows.
pub fn sequence_similarity(
    test: &Sequence,
    test_offset: usize,
    map_seq: &Sequence,
    map_offset: usize,
    len: usize,
    sim: &dyn SimilaritySource,
) -> Result<f64> {
    if test_offset + len > test.len() || map_offset + len > map_seq.len() {
        return Err(Error::WindowLengthMismatch {
            test: test.len().saturating_sub(test_offset),
            map: map_seq.len().saturating_sub(map_offset),
        });
    }
    let mut total = 0.0;
    for i in 0..len {
        total += sim.sim(
            test.frame(test_offset + i).unwrap(),
            map_seq.frame(map_offset + i).unwrap(),
        )?;
    }
    Ok(total / len as f64)
}

fn windows_overlap(a: usize, b: usize, len: usize) -> usize {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    (lo + len).saturating_sub(hi)
}

/// Exhaustive sliding-window scan for the strongest distractor: the start
/// index `u` maximizing window similarity among windows that do not
/// substantially overlap the true-match window. Ties break to the smaller
/// start index.
pub fn best_distractor(
    test: &Sequence,
    test_offset: usize,
    map_seq: &Sequence,
    true_start: Option<usize>,
    len: usize,
    sim: &dyn SimilaritySource,
) -> Result<(usize, f64)> {
    if map_seq.len() < len {
        return Err(Error::NoAdmissibleWindow {
            map_len: map_seq.len(),
            window: len,
        });
    }
    let max_overlap = (DISTRACTOR_OVERLAP_FRACTION * len as f64).floor() as usize;
    let mut best: Option<(usize, f64)> = None;
    for u in 0..=(map_seq.len() - len) {
        if let Some(t) = true_start {
            if windows_overlap(u, t, len) > max_overlap {
                continue;
            }
        }
        let s = sequence_similarity(test, test_offset, map_seq, u, len, sim)?;
        let better = match best {
            None => true,
            Some((_, bs)) => s > bs,
        };
        if better {
            best = Some((u, s));
        }
    }
    best.ok_or(Error::NoAdmissibleWindow {
        map_len: map_seq.len(),
        window: len,
    })
}

/// Classifies a test case against its mapping sequence.
///
/// The window scored is the last `seq_len` frames of the test sequence (the
/// frames leading into the scored final frame). Revisits compare the best
/// distractor against the true-match window via the ratio test at `alpha`;
/// novel sequences compare their best mapped look-alike against `tau`.
pub fn classify_case(
    test: &Sequence,
    map_seq: &Sequence,
    corr: &Correspondence,
    params: &AmbiguityParams,
    sim: &dyn SimilaritySource,
) -> Result<Classification> {
    let len = params.seq_len;
    if test.len() < len {
        return Err(Error::WindowLengthMismatch {
            test: test.len(),
            map: len,
        });
    }
    let test_offset = test.len() - len;
    if corr.is_novel() {
        let (u, max_sim) = best_distractor(test, test_offset, map_seq, None, len, sim)?;
        let label = if max_sim >= params.tau {
            CaseLabel::AmbiguousOnly
        } else {
            CaseLabel::NovelClean
        };
        return Ok(Classification {
            label,
            sim_true: None,
            best_distractor: Some((u, max_sim)),
            ratio: None,
            max_sim,
        });
    }
    let true_start = corr
        .true_window_start(test_offset, map_seq.len(), len)
        .expect("non-novel correspondence has an aligned window");
    let sim_true = sequence_similarity(test, test_offset, map_seq, true_start, len, sim)?;
    if sim_true == 0.0 {
        return Err(Error::UndefinedRatio);
    }
    let (u, dist_sim) = best_distractor(test, test_offset, map_seq, Some(true_start), len, sim)?;
    let ratio = dist_sim / sim_true;
    let label = if ratio >= params.alpha {
        CaseLabel::AmbiguousPositive
    } else {
        CaseLabel::PositiveOnly
    };
    Ok(Classification {
        label,
        sim_true: Some(sim_true),
        best_distractor: Some((u, dist_sim)),
        ratio: Some(ratio),
        max_sim: dist_sim.max(sim_true),
    })
}

/// A mapping run, a short test run against it, and everything needed to
/// score a localization decision on the pair.
#[derive(Debug, Clone)]
pub struct TestCase {
    pub case_id: String,
    pub environment: String,
    pub map_seq: Arc<Sequence>,
    /// The topological map the update policy built from `map_seq`.
    pub map: Arc<TopoMap>,
    pub test_seq: Sequence,
    pub correspondence: Correspondence,
    pub label: Option<Classification>,
}

impl TestCase {
    pub fn label(&self) -> Option<CaseLabel> {
        self.label.as_ref().map(|c| c.label)
    }
}
