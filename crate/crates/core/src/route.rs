//! Geodesic route distance between observations.
//!
//! Route distance is the shortest traversable path between two locations in
//! the environment. Ground truth is rarely available for real recordings, so
//! the default estimator differences odometry traversal distances within one
//! sequence. Synthetic worlds provide an exact oracle over their layout graph
//! instead; datasets declare which estimator is authoritative.

use crate::error::{Error, Result};
use crate::frame::Frame;

/// A route-distance estimator over frames.
pub trait RouteOracle: Sync {
    fn route_distance(&self, a: &Frame, b: &Frame) -> Result<f64>;
}

/// Traversal-distance difference of two frames from the same sequence.
///
/// Frames from different sequences must be aligned to one sequence first
/// (see the ambiguity module's correspondence); pass `same_sequence = false`
/// to get the explicit unavailable-distance error instead of a wrong number.
pub fn route_distance(a: &Frame, b: &Frame, same_sequence: bool) -> Result<f64> {
    if !same_sequence {
        return Err(Error::RouteDistanceUnavailable(
            "frames are from different sequences; align via the ground-truth correspondence first"
                .into(),
        ));
    }
    Ok((a.traversal_dist - b.traversal_dist).abs())
}

/// The default estimator for ingested datasets: same-sequence traversal
/// difference.
#[derive(Debug, Clone, Copy, Default)]
pub struct TraversalOracle;

impl RouteOracle for TraversalOracle {
    fn route_distance(&self, a: &Frame, b: &Frame) -> Result<f64> {
        route_distance(a, b, true)
    }
}
