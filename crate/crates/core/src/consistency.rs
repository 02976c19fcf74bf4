//! Topological consistency metrics.
//!
//! A meaningful topological map keeps graph proximity and physical proximity
//! aligned both ways: nodes within `n` hops must be within route distance
//! `d` (edge precision), and policy-eligible pairs within `d` must be within
//! `n` hops (policy-conditioned edge recall). The growth harness runs both
//! checks after every update step, which turns the correct-decisions-imply-
//! consistency induction into an executable property.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::Sequence;
use crate::graph::{hop_threshold, EvalScale, NodeId, TopoMap, UpdatePolicyParams};
use crate::policy::{edge_opportunities, DecisionSource, MapBuilder, PolicyStepRecord};
use crate::route::RouteOracle;

/// A pair that breaks an implication, with both of its distances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolatingPair {
    pub u: NodeId,
    pub v: NodeId,
    /// Hop distance; `None` means unreachable.
    pub hops: Option<usize>,
    pub route: f64,
}

/// One consistency measurement of a graph at a given scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub precision: f64,
    pub recall: f64,
    pub precision_violations: Vec<ViolatingPair>,
    pub recall_violations: Vec<ViolatingPair>,
    /// Pairs whose route distance could not be computed; excluded from the
    /// denominators and reported here instead.
    pub indeterminate_pairs: usize,
    pub scale: EvalScale,
    /// Hop budget derived from the scale and the median edge length at
    /// measurement time. `None` on graphs without edges.
    pub n: Option<usize>,
    /// Median edge length the budget was derived from.
    pub mu_e: Option<f64>,
    /// True when a denominator was empty and the metric is 1.0 vacuously.
    pub precision_vacuous: bool,
    pub recall_vacuous: bool,
}

impl ConsistencyReport {
    pub fn is_perfect(&self) -> bool {
        self.precision == 1.0 && self.recall == 1.0
    }
}

fn vacuous_report(scale: EvalScale) -> ConsistencyReport {
    ConsistencyReport {
        precision: 1.0,
        recall: 1.0,
        precision_violations: Vec::new(),
        recall_violations: Vec::new(),
        indeterminate_pairs: 0,
        scale,
        n: None,
        mu_e: None,
        precision_vacuous: true,
        recall_vacuous: true,
    }
}

/// Enumerates unordered node pairs within `n` hops via hop-bounded BFS from
/// every node: exact at any graph size without all-pairs storage.
/// Self-pairs are excluded; each pair counts once.
fn pairs_within_hops(g: &TopoMap, n: usize) -> Vec<(NodeId, NodeId, usize)> {
    let ids: Vec<usize> = (0..g.node_count()).collect();
    let per_node: Vec<Vec<(NodeId, NodeId, usize)>> = ids
        .par_iter()
        .map(|&u| {
            let dist = g.hop_distances_from(NodeId(u), Some(n));
            dist.iter()
                .enumerate()
                .filter_map(|(v, d)| match d {
                    Some(h) if v > u => Some((NodeId(u), NodeId(v), *h)),
                    _ => None,
                })
                .collect()
        })
        .collect();
    per_node.into_iter().flatten().collect()
}

/// Edge precision: the fraction of node pairs within `n` hops whose route
/// distance is within `d`. 1.0 means graph proximity never lies about
/// physical proximity. The hop budget is derived from the median edge
/// length at measurement time.
pub fn edge_precision(
    g: &TopoMap,
    scale: EvalScale,
    route: &dyn RouteOracle,
) -> Result<ConsistencyReport> {
    if g.edge_count() == 0 {
        return Ok(vacuous_report(scale));
    }
    let mu_e = g.median_edge_length()?;
    let n = hop_threshold(scale, mu_e)?;
    edge_precision_with_budget(g, scale, n, Some(mu_e), route)
}

/// Edge precision at an explicitly pinned hop budget.
pub fn edge_precision_with_budget(
    g: &TopoMap,
    scale: EvalScale,
    n: usize,
    mu_e: Option<f64>,
    route: &dyn RouteOracle,
) -> Result<ConsistencyReport> {
    let mut violations = Vec::new();
    let mut indeterminate = 0usize;
    let mut denominator = 0usize;
    for (u, v, hops) in pairs_within_hops(g, n) {
        match route.route_distance(&g.node(u)?.source_frame, &g.node(v)?.source_frame) {
            Ok(dist) => {
                denominator += 1;
                if dist > scale.d {
                    violations.push(ViolatingPair {
                        u,
                        v,
                        hops: Some(hops),
                        route: dist,
                    });
                }
            }
            Err(_) => indeterminate += 1,
        }
    }
    let (precision, vacuous) = if denominator == 0 {
        (1.0, true)
    } else {
        (1.0 - violations.len() as f64 / denominator as f64, false)
    };
    Ok(ConsistencyReport {
        precision,
        recall: 1.0,
        precision_violations: violations,
        recall_violations: Vec::new(),
        indeterminate_pairs: indeterminate,
        scale,
        n: Some(n),
        mu_e,
        precision_vacuous: vacuous,
        recall_vacuous: true,
    })
}

/// Policy-conditioned edge recall: the fraction of opportunity pairs within
/// route distance `d` that are connected within `n` hops.
pub fn edge_recall(
    g: &TopoMap,
    omega: &BTreeSet<(NodeId, NodeId)>,
    scale: EvalScale,
    route: &dyn RouteOracle,
) -> Result<ConsistencyReport> {
    if g.edge_count() == 0 {
        return Ok(vacuous_report(scale));
    }
    let mu_e = g.median_edge_length()?;
    let n = hop_threshold(scale, mu_e)?;
    edge_recall_with_budget(g, omega, scale, n, Some(mu_e), route)
}

/// Edge recall at an explicitly pinned hop budget.
pub fn edge_recall_with_budget(
    g: &TopoMap,
    omega: &BTreeSet<(NodeId, NodeId)>,
    scale: EvalScale,
    n: usize,
    mu_e: Option<f64>,
    route: &dyn RouteOracle,
) -> Result<ConsistencyReport> {
    let mut violations = Vec::new();
    let mut indeterminate = 0usize;
    let mut denominator = 0usize;
    for &(u, v) in omega {
        match route.route_distance(&g.node(u)?.source_frame, &g.node(v)?.source_frame) {
            Ok(dist) => {
                if dist > scale.d {
                    continue;
                }
                denominator += 1;
                let hops = g.hop_distance(u, v)?;
                if !hops.within(n) {
                    violations.push(ViolatingPair {
                        u,
                        v,
                        hops: hops.hops(),
                        route: dist,
                    });
                }
            }
            Err(_) => indeterminate += 1,
        }
    }
    let (recall, vacuous) = if denominator == 0 {
        (1.0, true)
    } else {
        (1.0 - violations.len() as f64 / denominator as f64, false)
    };
    Ok(ConsistencyReport {
        precision: 1.0,
        recall,
        precision_violations: Vec::new(),
        recall_violations: violations,
        indeterminate_pairs: indeterminate,
        scale,
        n: Some(n),
        mu_e,
        precision_vacuous: true,
        recall_vacuous: vacuous,
    })
}

/// Both consistency metrics of one snapshot, sharing the derived budget.
pub fn consistency_report(
    g: &TopoMap,
    omega: &BTreeSet<(NodeId, NodeId)>,
    scale: EvalScale,
    route: &dyn RouteOracle,
) -> Result<ConsistencyReport> {
    let p = edge_precision(g, scale, route)?;
    let r = edge_recall(g, omega, scale, route)?;
    Ok(ConsistencyReport {
        precision: p.precision,
        recall: r.recall,
        precision_violations: p.precision_violations,
        recall_violations: r.recall_violations,
        indeterminate_pairs: p.indeterminate_pairs + r.indeterminate_pairs,
        scale,
        n: p.n.or(r.n),
        mu_e: p.mu_e.or(r.mu_e),
        precision_vacuous: p.precision_vacuous,
        recall_vacuous: r.recall_vacuous,
    })
}

/// One step of a growth run: the decision taken and the consistency of the
/// grown map, measured with the budget recomputed from the current median
/// edge length.
#[derive(Debug, Clone)]
pub struct GrowthStep {
    pub step: usize,
    pub record: PolicyStepRecord,
    pub report: ConsistencyReport,
}

/// Outcome of a growth-invariant run.
#[derive(Debug, Clone)]
pub struct GrowthTrace {
    pub steps: Vec<GrowthStep>,
    /// Whether the run may certify the invariant: requires the hop-budget
    /// hypothesis `epsilon <= 1/kappa`. Diagnostic runs with the hypothesis
    /// violated still produce the full trace.
    pub certified: bool,
    /// First step at which precision or recall dropped below 1, if any.
    pub first_violation: Option<usize>,
    pub final_map: TopoMap,
}

impl GrowthTrace {
    pub fn all_consistent(&self) -> bool {
        self.first_violation.is_none()
    }
}

/// Grows a map over a sequence step by step, measuring consistency after
/// every update. With ground-truth decisions and `epsilon <= 1/kappa` the
/// trace stays at precision = recall = 1 throughout; with a real localizer
/// the trace pinpoints the first decision that broke either property.
pub fn run_growth_invariant_harness(
    seq: &Sequence,
    source: &mut dyn DecisionSource,
    params: UpdatePolicyParams,
    scale: EvalScale,
    route: &dyn RouteOracle,
) -> Result<GrowthTrace> {
    let certified = scale.epsilon <= 1.0 / params.kappa;
    let frames = seq.frames();
    if frames.is_empty() {
        return Err(Error::EmptySequence);
    }
    let mut builder = MapBuilder::new(frames[0].clone(), params, route);
    let mut steps = Vec::with_capacity(frames.len() - 1);
    let mut first_violation = None;
    for z in &frames[1..] {
        let record = builder.step(z, source)?.clone();
        let omega = edge_opportunities(&builder.map, scale, &builder.history, route)?;
        let report = consistency_report(&builder.map, &omega, scale, route)?;
        if !report.is_perfect() && first_violation.is_none() {
            first_violation = Some(record.step);
        }
        steps.push(GrowthStep {
            step: record.step,
            record,
            report,
        });
    }
    Ok(GrowthTrace {
        steps,
        certified,
        first_violation,
        final_map: builder.map,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{Frame, Position};
    use crate::route::TraversalOracle;

    fn frame(id: usize, trav: f64) -> Frame {
        Frame {
            frame_id: id,
            timestamp: id as f64,
            pose: Position::new2d(trav, 0.0),
            traversal_dist: trav,
            descriptor: None,
        }
    }

    /// Chain of nodes 1 m apart with unit-length edges.
    fn chain(n: usize) -> TopoMap {
        let mut g = TopoMap::new();
        for i in 0..n {
            g.add_node(frame(i, i as f64));
        }
        for i in 1..n {
            g.add_edge(NodeId(i - 1), NodeId(i), 1.0).unwrap();
        }
        g
    }

    #[test]
    fn chain_geometry_has_perfect_precision() {
        let g = chain(12);
        let scale = EvalScale::new(3.0, 1.0).unwrap();
        let rep = edge_precision(&g, scale, &TraversalOracle).unwrap();
        assert_eq!(rep.precision, 1.0);
        assert_eq!(rep.n, Some(3));
        assert!(!rep.precision_vacuous);
    }

    #[test]
    fn wormhole_edge_breaks_precision() {
        let mut g = chain(12);
        // Join nodes 10 m apart.
        g.add_edge(NodeId(0), NodeId(10), 10.0).unwrap();
        let scale = EvalScale::new(3.0, 1.0).unwrap();
        let rep = edge_precision(&g, scale, &TraversalOracle).unwrap();
        assert!(rep.precision < 1.0);
        assert!(!rep.precision_violations.is_empty());
        // Every violating pair crosses the wormhole: hop-close, route-far.
        for v in &rep.precision_violations {
            assert!(v.route > 3.0);
            assert!(v.hops.unwrap() <= rep.n.unwrap());
        }
        assert!(rep
            .precision_violations
            .iter()
            .any(|p| p.u == NodeId(0) && p.v == NodeId(10)));
    }

    #[test]
    fn empty_edge_set_is_vacuously_consistent() {
        let mut g = TopoMap::new();
        g.add_node(frame(0, 0.0));
        let scale = EvalScale::new(3.0, 1.0).unwrap();
        let rep = edge_precision(&g, scale, &TraversalOracle).unwrap();
        assert_eq!(rep.precision, 1.0);
        assert!(rep.precision_vacuous);
    }

    #[test]
    fn connected_opportunities_give_full_recall() {
        let g = chain(6);
        let omega: BTreeSet<(NodeId, NodeId)> =
            (0..5).map(|i| (NodeId(i), NodeId(i + 1))).collect();
        let scale = EvalScale::new(3.0, 1.0).unwrap();
        let rep = edge_recall(&g, &omega, scale, &TraversalOracle).unwrap();
        assert_eq!(rep.recall, 1.0);
        assert!(!rep.recall_vacuous);
    }

    #[test]
    fn missed_opportunity_lowers_recall() {
        // A long chain whose endpoints are physically adjacent: the pair
        // (first, last) was an opportunity (route 1 m via the poses), but the
        // only graph path is the 41-hop detour.
        let mut g = TopoMap::new();
        for i in 0..42 {
            g.add_node(frame(i, if i == 41 { 1.0 } else { i as f64 }));
        }
        for i in 1..42 {
            g.add_edge(NodeId(i - 1), NodeId(i), 1.0).unwrap();
        }
        let mut omega: BTreeSet<(NodeId, NodeId)> =
            (0..41).map(|i| (NodeId(i), NodeId(i + 1))).collect();
        omega.insert((NodeId(0), NodeId(41)));
        let scale = EvalScale::new(5.0, 1.0).unwrap();
        let rep = edge_recall(&g, &omega, scale, &TraversalOracle).unwrap();
        // Denominator: opportunity pairs within d.
        let m = omega
            .iter()
            .filter(|(u, v)| {
                (g.node(*u).unwrap().source_frame.traversal_dist
                    - g.node(*v).unwrap().source_frame.traversal_dist)
                    .abs()
                    <= 5.0
            })
            .count();
        assert_eq!(rep.recall_violations.len(), 1);
        assert_eq!(rep.recall, (m as f64 - 1.0) / m as f64);
        let v = &rep.recall_violations[0];
        assert_eq!((v.u, v.v), (NodeId(0), NodeId(41)));
        assert_eq!(v.hops, Some(41));
    }

    #[test]
    fn empty_omega_is_vacuous_recall() {
        let g = chain(4);
        let scale = EvalScale::new(3.0, 1.0).unwrap();
        let rep = edge_recall(&g, &BTreeSet::new(), scale, &TraversalOracle).unwrap();
        assert_eq!(rep.recall, 1.0);
        assert!(rep.recall_vacuous);
    }

    #[test]
    fn single_node_base_map_is_consistent() {
        let mut g = TopoMap::new();
        g.add_node(frame(0, 0.0));
        let scale = EvalScale::new(3.0, 1.0).unwrap();
        let rep = consistency_report(&g, &BTreeSet::new(), scale, &TraversalOracle).unwrap();
        assert!(rep.is_perfect());
    }
}
