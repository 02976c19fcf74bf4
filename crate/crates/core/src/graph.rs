//! Topological graph over places.
//!
//! A [`TopoMap`] is a connected node/edge graph grown by an update policy.
//! Nodes remember the frame that created them; edges carry the geodesic route
//! length between their endpoints. Evaluation snapshots are immutable: growth
//! operations return new graph states, and every query here is pure.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::Frame;

/// Identifier of a node in a [`TopoMap`]. Dense, assigned in creation order.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "v{}", self.0)
    }
}

/// A place node, remembering the observation that created it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopoNode {
    pub node_id: NodeId,
    pub source_frame: Frame,
}

/// Shortest-path hop distance. Disconnected pairs are a distinguished value,
/// never a sentinel count, so threshold checks cannot silently pass on them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HopDistance {
    Hops(usize),
    Unreachable,
}

impl HopDistance {
    /// True when the distance is finite and at most `n`.
    pub fn within(&self, n: usize) -> bool {
        matches!(self, HopDistance::Hops(h) if *h <= n)
    }

    pub fn hops(&self) -> Option<usize> {
        match self {
            HopDistance::Hops(h) => Some(*h),
            HopDistance::Unreachable => None,
        }
    }
}

/// Parameters of the edge-length regular update policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdatePolicyParams {
    /// Minimum traversal distance from the current node before a new node is
    /// created, in meters.
    pub spatial_threshold: f64,
    /// Similarity threshold for accepting a retrieved node.
    pub accept_threshold: f64,
    /// Edge-length regularity bound: every created edge should have route
    /// length at most `kappa * median_edge_length`.
    pub kappa: f64,
}

impl UpdatePolicyParams {
    pub fn new(spatial_threshold: f64, accept_threshold: f64, kappa: f64) -> Result<Self> {
        if spatial_threshold <= 0.0 {
            return Err(Error::InvalidParam(format!(
                "spatial_threshold must be > 0 (got {spatial_threshold})"
            )));
        }
        if kappa < 1.0 {
            return Err(Error::InvalidParam(format!("kappa must be >= 1 (got {kappa})")));
        }
        Ok(Self {
            spatial_threshold,
            accept_threshold,
            kappa,
        })
    }
}

/// The physical scale consistency is evaluated at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalScale {
    /// Physical route-distance threshold in meters.
    pub d: f64,
    /// Tolerance factor in `(0, 1]` converting `d` into a hop budget.
    pub epsilon: f64,
}

impl EvalScale {
    pub fn new(d: f64, epsilon: f64) -> Result<Self> {
        if d <= 0.0 {
            return Err(Error::InvalidParam(format!("d must be > 0 (got {d})")));
        }
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::InvalidParam(format!(
                "epsilon must be in (0, 1] (got {epsilon})"
            )));
        }
        Ok(Self { d, epsilon })
    }
}

/// Hop budget derived from a physical scale and the characteristic edge
/// length: `n = max(1, floor(epsilon * d / mu_e))`.
pub fn hop_threshold(scale: EvalScale, mu_e: f64) -> Result<usize> {
    if mu_e <= 0.0 {
        return Err(Error::InvalidParam(format!(
            "median edge length must be > 0 (got {mu_e})"
        )));
    }
    let raw = (scale.epsilon * scale.d / mu_e).floor() as isize;
    Ok(raw.max(1) as usize)
}

/// Node/edge graph with route-length-annotated edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopoMap {
    nodes: Vec<TopoNode>,
    /// Unordered edges keyed with the smaller id first.
    edges: BTreeMap<(NodeId, NodeId), f64>,
    #[serde(skip)]
    adjacency: Vec<Vec<NodeId>>,
}

impl TopoMap {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            edges: BTreeMap::new(),
            adjacency: Vec::new(),
        }
    }

    /// Starts a map from its first observation.
    pub fn from_initial_frame(frame: Frame) -> Self {
        let mut g = Self::new();
        g.add_node(frame);
        g
    }

    pub fn add_node(&mut self, source_frame: Frame) -> NodeId {
        let id = NodeId(self.nodes.len());
        self.nodes.push(TopoNode {
            node_id: id,
            source_frame,
        });
        self.adjacency.push(Vec::new());
        id
    }

    /// Inserts an undirected edge annotated with its route length. Returns
    /// false when the edge already existed (the graph is unchanged).
    pub fn add_edge(&mut self, u: NodeId, v: NodeId, route_length: f64) -> Result<bool> {
        if !self.contains(u) {
            return Err(Error::NodeNotInMap(u.0));
        }
        if !self.contains(v) {
            return Err(Error::NodeNotInMap(v.0));
        }
        if u == v {
            return Err(Error::InvalidParam("self-edges are not allowed".into()));
        }
        let key = if u.0 < v.0 { (u, v) } else { (v, u) };
        if self.edges.contains_key(&key) {
            return Ok(false);
        }
        self.edges.insert(key, route_length);
        self.adjacency[u.0].push(v);
        self.adjacency[v.0].push(u);
        Ok(true)
    }

    pub fn contains(&self, id: NodeId) -> bool {
        id.0 < self.nodes.len()
    }

    pub fn node(&self, id: NodeId) -> Result<&TopoNode> {
        self.nodes.get(id.0).ok_or(Error::NodeNotInMap(id.0))
    }

    pub fn nodes(&self) -> &[TopoNode] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges with their route lengths, smaller endpoint first.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, f64)> + '_ {
        self.edges.iter().map(|(&(u, v), &len)| (u, v, len))
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        let key = if u.0 < v.0 { (u, v) } else { (v, u) };
        self.edges.contains_key(&key)
    }

    pub fn neighbors(&self, id: NodeId) -> &[NodeId] {
        &self.adjacency[id.0]
    }

    /// Rebuilds the adjacency lists; needed after deserialization.
    pub fn rebuild_adjacency(&mut self) {
        self.adjacency = vec![Vec::new(); self.nodes.len()];
        for &(u, v) in self.edges.keys() {
            self.adjacency[u.0].push(v);
            self.adjacency[v.0].push(u);
        }
    }

    /// Breadth-first hop distance between two nodes.
    pub fn hop_distance(&self, u: NodeId, v: NodeId) -> Result<HopDistance> {
        if !self.contains(u) {
            return Err(Error::NodeNotInMap(u.0));
        }
        if !self.contains(v) {
            return Err(Error::NodeNotInMap(v.0));
        }
        if u == v {
            return Ok(HopDistance::Hops(0));
        }
        let dist = self.hop_distances_from(u, None);
        Ok(dist[v.0]
            .map(HopDistance::Hops)
            .unwrap_or(HopDistance::Unreachable))
    }

    /// BFS distances from `start` to every node, optionally stopping at a hop
    /// bound. Nodes beyond the bound (or unreachable) are `None`.
    pub fn hop_distances_from(&self, start: NodeId, max_hops: Option<usize>) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.nodes.len()];
        dist[start.0] = Some(0);
        let mut queue = VecDeque::from([start]);
        while let Some(cur) = queue.pop_front() {
            let d = dist[cur.0].unwrap();
            if let Some(bound) = max_hops {
                if d >= bound {
                    continue;
                }
            }
            for &next in &self.adjacency[cur.0] {
                if dist[next.0].is_none() {
                    dist[next.0] = Some(d + 1);
                    queue.push_back(next);
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        if self.nodes.is_empty() {
            return true;
        }
        self.hop_distances_from(NodeId(0), None)
            .iter()
            .all(|d| d.is_some())
    }

    /// Characteristic edge length: the median of edge route lengths. For an
    /// even count, the arithmetic mean of the two middle values.
    pub fn median_edge_length(&self) -> Result<f64> {
        let mut lengths: Vec<f64> = self.edges.values().copied().collect();
        if lengths.is_empty() {
            return Err(Error::EmptyEdgeSet);
        }
        lengths.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = lengths.len();
        Ok(if n % 2 == 1 {
            lengths[n / 2]
        } else {
            (lengths[n / 2 - 1] + lengths[n / 2]) / 2.0
        })
    }
}

impl Default for TopoMap {
    fn default() -> Self {
        Self::new()
    }
}
