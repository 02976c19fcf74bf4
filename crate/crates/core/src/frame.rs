//! Observations and observation sequences.
//!
//! A [`Frame`] is one timestamped sensor observation with ground-truth pose,
//! cumulative traversal distance from odometry, and an optional appearance
//! descriptor. A [`Sequence`] is an ordered run of frames playing either the
//! `Map` or `Test` role of an evaluation protocol.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for the unit-norm invariant on descriptors.
pub const DESCRIPTOR_NORM_TOL: f64 = 1e-6;

/// Ground-truth position in meters. 2D data leaves `z` at 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub z: f64,
}

impl Position {
    pub fn new2d(x: f64, y: f64) -> Self {
        Self { x, y, z: 0.0 }
    }

    pub fn new3d(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Euclidean distance to another position.
    pub fn distance(&self, other: &Position) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

/// One timestamped observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    /// Index within its sequence, consecutive from 0.
    pub frame_id: usize,
    /// Seconds from an arbitrary epoch; strictly increasing within a sequence.
    pub timestamp: f64,
    /// Ground-truth position in meters.
    pub pose: Position,
    /// Cumulative odometry arc length from the sequence start, in meters.
    pub traversal_dist: f64,
    /// Unit-norm appearance descriptor. Absent when an external similarity
    /// matrix supplies frame-pair similarities instead.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub descriptor: Option<Vec<f32>>,
}

impl Frame {
    pub fn descriptor_norm(&self) -> Option<f64> {
        self.descriptor
            .as_ref()
            .map(|d| d.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>().sqrt())
    }
}

/// Whether a sequence was recorded during the mapping phase or the test phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SequenceRole {
    Map,
    Test,
}

/// An ordered run of frames.
///
/// Construction validates the sequence invariants: ids consecutive from 0,
/// strictly increasing timestamps, non-decreasing traversal distance, and
/// unit-norm descriptors of a single dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sequence {
    frames: Vec<Frame>,
    role: SequenceRole,
}

impl Sequence {
    pub fn new(frames: Vec<Frame>, role: SequenceRole) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::EmptySequence);
        }
        let mut dim: Option<usize> = None;
        for (i, f) in frames.iter().enumerate() {
            if f.frame_id != i {
                return Err(Error::NonConsecutiveFrameIds {
                    index: i,
                    found: f.frame_id,
                });
            }
            if i > 0 {
                let prev = &frames[i - 1];
                if f.timestamp <= prev.timestamp {
                    return Err(Error::NonIncreasingTimestamps {
                        index: i,
                        prev: prev.timestamp,
                        curr: f.timestamp,
                    });
                }
                if f.traversal_dist < prev.traversal_dist {
                    return Err(Error::DecreasingTraversal {
                        index: i,
                        prev: prev.traversal_dist,
                        curr: f.traversal_dist,
                    });
                }
            }
            if let Some(desc) = &f.descriptor {
                match dim {
                    None => dim = Some(desc.len()),
                    Some(d) if d != desc.len() => {
                        return Err(Error::DescriptorDimMismatch {
                            index: i,
                            found: desc.len(),
                            expected: d,
                        })
                    }
                    _ => {}
                }
                let norm = f.descriptor_norm().unwrap();
                if (norm - 1.0).abs() > DESCRIPTOR_NORM_TOL {
                    return Err(Error::DescriptorNotUnitNorm {
                        index: i,
                        norm,
                        tol: DESCRIPTOR_NORM_TOL,
                    });
                }
            }
        }
        Ok(Self { frames, role })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn role(&self) -> SequenceRole {
        self.role
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frame(&self, id: usize) -> Option<&Frame> {
        self.frames.get(id)
    }

    pub fn last(&self) -> &Frame {
        self.frames.last().expect("sequence is never empty")
    }

    /// Descriptor dimension, when any frame carries a descriptor.
    pub fn descriptor_dim(&self) -> Option<usize> {
        self.frames.iter().find_map(|f| f.descriptor.as_ref().map(|d| d.len()))
    }
}

/// Normalizes a raw vector to unit Euclidean norm.
pub fn unit_normalize(mut v: Vec<f32>) -> Vec<f32> {
    let norm = v.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x = ((*x as f64) / norm) as f32;
        }
    }
    v
}
