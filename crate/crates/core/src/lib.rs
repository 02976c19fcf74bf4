//! Evaluation toolkit for SLAM-free topological mapping and localization
//! under quantified perceptual aliasing.
//!
//! The crate measures what a topological map must get right: graph proximity
//! and physical proximity have to agree (edge precision / policy-conditioned
//! edge recall), and test-time localization decisions have to be correct,
//! with per-case difficulty made explicit by an ambiguity taxonomy. Four
//! baseline localizers, a balanced accuracy metric over a threshold sweep,
//! and a deterministic synthetic-world generator with exact route oracles
//! make the whole pipeline testable at desk scale.

pub mod ambiguity;
pub mod baselines;
pub mod consistency;
pub mod error;
pub mod frame;
pub mod graph;
pub mod io;
pub mod metrics;
pub mod policy;
pub mod reference;
pub mod route;
pub mod similarity;
pub mod synthworld;

pub use error::{Error, Result};
pub use frame::{Frame, Position, Sequence, SequenceRole};
pub use graph::{EvalScale, HopDistance, NodeId, TopoMap, TopoNode, UpdatePolicyParams};
