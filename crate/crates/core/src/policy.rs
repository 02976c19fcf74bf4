//! The map update policy and its replayable decision log.
//!
//! At each step the system attempts to localize the new observation in the
//! current graph. An accepted retrieval links the current node to the match;
//! a rejection beyond the spatial threshold creates a new node attached to
//! the current one. The per-step candidate log is what makes policy-
//! conditioned recall computable afterwards: an edge creation opportunity is
//! a node pair the policy had in hand and could have connected.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::baselines::LocalizerDecision;
use crate::error::{Error, Result};
use crate::frame::{Frame, Sequence};
use crate::graph::{EvalScale, NodeId, TopoMap, UpdatePolicyParams};
use crate::route::RouteOracle;
use crate::similarity::SimilaritySource;

/// What the update policy did with one observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum UpdateEvent {
    /// A retrieval was accepted; `created` is false when the edge already
    /// existed (the graph is unchanged, localization still moves).
    Linked {
        from: NodeId,
        to: NodeId,
        created: bool,
    },
    /// The observation was novel and far enough from the current node.
    NodeCreated { id: NodeId, attached_to: NodeId },
    /// Abstained within the spatial threshold.
    NoChange,
}

/// Result of applying the update policy to one observation.
#[derive(Debug, Clone)]
pub struct PolicyUpdate {
    pub map: TopoMap,
    /// The node the system is localized at after the update.
    pub current: NodeId,
    pub event: UpdateEvent,
}

/// Applies the update policy to one observation, returning the next graph
/// state. The input graph is untouched; growth never removes nodes or edges,
/// and every new node is attached by an edge, so connectivity is preserved.
pub fn apply_update_policy(
    g: &TopoMap,
    current: NodeId,
    z: &Frame,
    decision: &LocalizerDecision,
    params: &UpdatePolicyParams,
    route: &dyn RouteOracle,
) -> Result<PolicyUpdate> {
    if !g.contains(current) {
        return Err(Error::NodeNotInMap(current.0));
    }
    let mut map = g.clone();
    match decision {
        LocalizerDecision::Accept { node, .. } => {
            let matched = *node;
            if !map.contains(matched) {
                return Err(Error::NodeNotInMap(matched.0));
            }
            if matched == current {
                return Ok(PolicyUpdate {
                    map,
                    current: matched,
                    event: UpdateEvent::NoChange,
                });
            }
            let len = route.route_distance(&g.node(current)?.source_frame, &g.node(matched)?.source_frame)?;
            let created = map.add_edge(current, matched, len)?;
            Ok(PolicyUpdate {
                map,
                current: matched,
                event: UpdateEvent::Linked {
                    from: current,
                    to: matched,
                    created,
                },
            })
        }
        LocalizerDecision::Abstain { .. } => {
            let dist = route.route_distance(&g.node(current)?.source_frame, z)?;
            if dist > params.spatial_threshold {
                let id = map.add_node(z.clone());
                map.add_edge(current, id, dist)?;
                Ok(PolicyUpdate {
                    map,
                    current: id,
                    event: UpdateEvent::NodeCreated {
                        id,
                        attached_to: current,
                    },
                })
            } else {
                Ok(PolicyUpdate {
                    map,
                    current,
                    event: UpdateEvent::NoChange,
                })
            }
        }
    }
}

/// One step of the policy's decision log: which node the system sat at and
/// which retrieval candidates it actually considered.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolicyStepRecord {
    pub step: usize,
    pub current: NodeId,
    pub candidates: Vec<NodeId>,
    pub decision: LocalizerDecision,
    pub event: UpdateEvent,
}

/// Full decision log of a map-growth run.
pub type PolicyHistory = Vec<PolicyStepRecord>;

/// Edge creation opportunities at scale `d`: node pairs within route distance
/// `d` that the policy could have connected, because one was the current node
/// while the other was a live retrieval candidate, or because they are a
/// consecutive creation pair. Returned with the smaller id first.
pub fn edge_opportunities(
    g: &TopoMap,
    scale: EvalScale,
    history: &PolicyHistory,
    route: &dyn RouteOracle,
) -> Result<BTreeSet<(NodeId, NodeId)>> {
    let mut raw: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
    for rec in history {
        for &cand in &rec.candidates {
            if cand != rec.current {
                raw.insert(ordered(rec.current, cand));
            }
        }
        if let UpdateEvent::NodeCreated { id, attached_to } = rec.event {
            raw.insert(ordered(attached_to, id));
        }
    }
    let mut omega = BTreeSet::new();
    for (u, v) in raw {
        let dist = route.route_distance(&g.node(u)?.source_frame, &g.node(v)?.source_frame)?;
        if dist <= scale.d {
            omega.insert((u, v));
        }
    }
    Ok(omega)
}

fn ordered(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    if a.0 < b.0 {
        (a, b)
    } else {
        (b, a)
    }
}

/// A retrieval decision plus the candidate list the policy saw while making
/// it. Candidates feed the opportunity set for recall.
#[derive(Debug, Clone)]
pub struct SourcedDecision {
    pub decision: LocalizerDecision,
    pub candidates: Vec<NodeId>,
}

/// Produces per-step localization decisions while a map grows.
pub trait DecisionSource {
    fn decide(
        &mut self,
        map: &TopoMap,
        current: NodeId,
        z: &Frame,
        step: usize,
    ) -> Result<SourcedDecision>;

    /// Hook for sources that track per-node state (belief vectors).
    fn on_map_grown(&mut self, _map: &TopoMap) {}
}

/// Ground-truth decisions: accept the nearest existing node within the match
/// radius, abstain otherwise. The candidate it logs is exactly its retrieval,
/// so every opportunity it creates is one it immediately connects.
pub struct OracleSource<'a> {
    route: &'a dyn RouteOracle,
    pub match_radius: f64,
}

impl<'a> OracleSource<'a> {
    pub fn new(route: &'a dyn RouteOracle, match_radius: f64) -> Self {
        Self {
            route,
            match_radius,
        }
    }
}

impl DecisionSource for OracleSource<'_> {
    fn decide(
        &mut self,
        map: &TopoMap,
        _current: NodeId,
        z: &Frame,
        _step: usize,
    ) -> Result<SourcedDecision> {
        let mut best: Option<(NodeId, f64)> = None;
        for node in map.nodes() {
            let dist = self.route.route_distance(&node.source_frame, z)?;
            if dist <= self.match_radius {
                let better = match best {
                    None => true,
                    Some((bid, bdist)) => {
                        dist < bdist || (dist == bdist && node.node_id.0 < bid.0)
                    }
                };
                if better {
                    best = Some((node.node_id, dist));
                }
            }
        }
        Ok(match best {
            Some((id, dist)) => SourcedDecision {
                decision: LocalizerDecision::accept(id, 1.0 - dist / self.match_radius.max(f64::MIN_POSITIVE)),
                candidates: vec![id],
            },
            None => SourcedDecision {
                decision: LocalizerDecision::abstain(0.0),
                candidates: Vec::new(),
            },
        })
    }
}

/// Similarity-backed greedy decisions with top-K candidate logging.
pub struct GreedySource<'a> {
    sim: &'a dyn SimilaritySource,
    pub tau: f64,
    pub top_k: usize,
}

impl<'a> GreedySource<'a> {
    pub fn new(sim: &'a dyn SimilaritySource, tau: f64, top_k: usize) -> Self {
        Self { sim, tau, top_k }
    }
}

impl DecisionSource for GreedySource<'_> {
    fn decide(
        &mut self,
        map: &TopoMap,
        _current: NodeId,
        z: &Frame,
        _step: usize,
    ) -> Result<SourcedDecision> {
        let mut scored: Vec<(NodeId, f64)> = Vec::with_capacity(map.node_count());
        for node in map.nodes() {
            scored.push((node.node_id, self.sim.sim(z, &node.source_frame)?));
        }
        // Highest similarity first, ties to the lower node id.
        scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0 .0.cmp(&b.0 .0)));
        let candidates: Vec<NodeId> = scored.iter().take(self.top_k).map(|(id, _)| *id).collect();
        let decision = match scored.first() {
            Some(&(id, score)) if score >= self.tau => LocalizerDecision::accept(id, score),
            Some(&(_, score)) => LocalizerDecision::abstain(score),
            None => LocalizerDecision::abstain(0.0),
        };
        Ok(SourcedDecision {
            decision,
            candidates,
        })
    }
}

/// Wraps a source and replaces its decision at chosen steps. Used to verify
/// that a single wrong accept is caught at exactly the step it happens.
pub struct FaultInjector<S> {
    pub inner: S,
    pub overrides: std::collections::BTreeMap<usize, LocalizerDecision>,
}

impl<S: DecisionSource> DecisionSource for FaultInjector<S> {
    fn decide(
        &mut self,
        map: &TopoMap,
        current: NodeId,
        z: &Frame,
        step: usize,
    ) -> Result<SourcedDecision> {
        let mut out = self.inner.decide(map, current, z, step)?;
        if let Some(forced) = self.overrides.get(&step) {
            if let LocalizerDecision::Accept { node, .. } = forced {
                if !out.candidates.contains(node) {
                    out.candidates.push(*node);
                }
            }
            out.decision = forced.clone();
        }
        Ok(out)
    }

    fn on_map_grown(&mut self, map: &TopoMap) {
        self.inner.on_map_grown(map);
    }
}

/// Streams a sequence through the update policy, keeping the decision log.
pub struct MapBuilder<'a> {
    pub map: TopoMap,
    pub current: NodeId,
    pub history: PolicyHistory,
    params: UpdatePolicyParams,
    route: &'a dyn RouteOracle,
    step: usize,
}

impl<'a> MapBuilder<'a> {
    /// Seeds the map with the first observation.
    pub fn new(first: Frame, params: UpdatePolicyParams, route: &'a dyn RouteOracle) -> Self {
        Self {
            map: TopoMap::from_initial_frame(first),
            current: NodeId(0),
            history: Vec::new(),
            params,
            route,
            step: 0,
        }
    }

    /// Processes one observation with the given decision source.
    pub fn step(&mut self, z: &Frame, source: &mut dyn DecisionSource) -> Result<&PolicyStepRecord> {
        self.step += 1;
        // The record keeps the node the policy sat at while deciding; that is
        // the node its candidates could have been connected to.
        let at = self.current;
        let sourced = source.decide(&self.map, at, z, self.step)?;
        let update = apply_update_policy(&self.map, at, z, &sourced.decision, &self.params, self.route)?;
        let grew = update.map.node_count() > self.map.node_count()
            || update.map.edge_count() > self.map.edge_count();
        self.map = update.map;
        self.current = update.current;
        if grew {
            source.on_map_grown(&self.map);
        }
        self.history.push(PolicyStepRecord {
            step: self.step,
            current: at,
            candidates: sourced.candidates,
            decision: sourced.decision,
            event: update.event,
        });
        Ok(self.history.last().unwrap())
    }
}

/// Streams a sequence through the update policy with ground-truth accept
/// decisions, returning the built map and the decision log.
pub fn build_policy_map(
    seq: &Sequence,
    params: &UpdatePolicyParams,
    route: &dyn RouteOracle,
    match_radius: f64,
) -> Result<(TopoMap, PolicyHistory)> {
    let frames = seq.frames();
    let mut builder = MapBuilder::new(frames[0].clone(), *params, route);
    let mut source = OracleSource::new(route, match_radius);
    for z in &frames[1..] {
        builder.step(z, &mut source)?;
    }
    Ok((builder.map, builder.history))
}
