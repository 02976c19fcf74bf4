//! Baseline localizers: greedy matching, sequence matching (median / all),
//! and probabilistic belief update.
//!
//! All four share one decision interface: given the current observation and
//! the map, either accept a node or abstain, with the score that backed the
//! call. Scoring is threshold-free; the decision applies the threshold to the
//! score, which is what makes accept sets shrink monotonically as the
//! threshold rises.

use serde::{Deserialize, Serialize};

use crate::ambiguity::TestCase;
use crate::error::{Error, Result};
use crate::frame::{Frame, Sequence};
use crate::graph::{NodeId, TopoMap};
use crate::similarity::SimilaritySource;

/// Floor applied to observation likelihoods so the belief never collapses.
pub const LIKELIHOOD_FLOOR: f64 = 1e-12;
/// Mass injected for nodes that appear while a belief is being tracked.
pub const NEW_NODE_BELIEF_MASS: f64 = 1e-3;
/// Tolerance on belief normalization.
pub const BELIEF_NORM_TOL: f64 = 1e-9;

/// Accept a map node or abstain, with the backing score (similarity,
/// aggregated similarity, or posterior mass).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LocalizerDecision {
    Accept { node: NodeId, score: f64 },
    Abstain { score: f64 },
}

impl LocalizerDecision {
    pub fn accept(node: NodeId, score: f64) -> Self {
        Self::Accept { node, score }
    }

    pub fn abstain(score: f64) -> Self {
        Self::Abstain { score }
    }

    pub fn accepted_node(&self) -> Option<NodeId> {
        match self {
            Self::Accept { node, .. } => Some(*node),
            Self::Abstain { .. } => None,
        }
    }

    pub fn is_accept(&self) -> bool {
        matches!(self, Self::Accept { .. })
    }

    pub fn score(&self) -> f64 {
        match self {
            Self::Accept { score, .. } | Self::Abstain { score } => *score,
        }
    }
}

/// The four baseline methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    Gm,
    SmMed,
    SmAll,
    Pbu,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Gm, Method::SmMed, Method::SmAll, Method::Pbu];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Gm => "GM",
            Method::SmMed => "SM-Med",
            Method::SmAll => "SM-All",
            Method::Pbu => "PBU",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "gm" => Ok(Method::Gm),
            "sm-med" | "sm-median" | "smmed" => Ok(Method::SmMed),
            "sm-all" | "small" => Ok(Method::SmAll),
            "pbu" => Ok(Method::Pbu),
            other => Err(Error::InvalidParam(format!(
                "unknown method '{other}'; valid names: gm, sm-med, sm-all, pbu"
            ))),
        }
    }
}

/// How window similarities are folded into one score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    /// Median of the window scores; robust to single-frame outliers.
    Median,
    /// Every score in the window must clear the threshold (scored as the
    /// window minimum).
    All,
}

/// Sequence-matching parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmParams {
    /// Half-window size in frames; the window spans `2h + 1` frames.
    pub half_window: usize,
    pub aggregation: Aggregation,
    /// Acceptance threshold on the aggregated score.
    pub tau: f64,
}

/// Observation likelihood as a function of similarity in `[0, 1]`. Always
/// floored at [`LIKELIHOOD_FLOOR`] so it stays strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LikelihoodFn {
    /// `exp(lambda * s)`; sharpens the similarity profile.
    Exp { lambda: f64 },
    /// The similarity itself.
    Identity,
}

impl LikelihoodFn {
    pub fn apply(&self, sim: f64) -> f64 {
        let raw = match self {
            LikelihoodFn::Exp { lambda } => (lambda * sim).exp(),
            LikelihoodFn::Identity => sim,
        };
        raw.max(LIKELIHOOD_FLOOR)
    }
}

impl Default for LikelihoodFn {
    fn default() -> Self {
        LikelihoodFn::Exp { lambda: 10.0 }
    }
}

/// How the belief is initialized at the start of a test run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BeliefInit {
    #[default]
    Uniform,
    Peaked { node: NodeId },
}

/// Probabilistic-belief-update parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PbuParams {
    /// Maximum hop movement per step; `None` removes the motion constraint.
    pub max_hop: Option<usize>,
    /// Transition weight for nodes within the hop budget.
    pub trans_near: f64,
    /// Transition weight for all other nodes.
    pub trans_far: f64,
    pub likelihood: LikelihoodFn,
    pub init: BeliefInit,
}

impl PbuParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.trans_near > self.trans_far && self.trans_far > 0.0) {
            return Err(Error::InvalidParam(format!(
                "transition weights must satisfy near > far > 0 (got {} and {})",
                self.trans_near, self.trans_far
            )));
        }
        Ok(())
    }
}

impl Default for PbuParams {
    fn default() -> Self {
        Self {
            max_hop: Some(2),
            trans_near: 1.0,
            trans_far: 0.05,
            likelihood: LikelihoodFn::default(),
            init: BeliefInit::default(),
        }
    }
}

/// A score the thresholded decision is derived from: the best node and the
/// value backing it. `node` is `None` only on maps with no nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredMatch {
    pub node: NodeId,
    pub score: f64,
}

impl ScoredMatch {
    /// Applies a decision threshold to the score.
    pub fn decide(&self, tau: f64) -> LocalizerDecision {
        if self.score >= tau {
            LocalizerDecision::accept(self.node, self.score)
        } else {
            LocalizerDecision::abstain(self.score)
        }
    }
}

/// Picks the best-scoring node, breaking ties toward the lowest node id.
fn argmax(scores: impl IntoIterator<Item = (NodeId, f64)>) -> Option<ScoredMatch> {
    let mut best: Option<ScoredMatch> = None;
    for (node, score) in scores {
        let better = match &best {
            None => true,
            Some(b) => score > b.score || (score == b.score && node.0 < b.node.0),
        };
        if better {
            best = Some(ScoredMatch { node, score });
        }
    }
    best
}

/// Greedy matching score: the single best frame similarity over all nodes.
pub fn gm_score(z: &Frame, g: &TopoMap, sim: &dyn SimilaritySource) -> Result<ScoredMatch> {
    if g.node_count() == 0 {
        return Err(Error::EmptyMap);
    }
    let mut scores = Vec::with_capacity(g.node_count());
    for node in g.nodes() {
        scores.push((node.node_id, sim.sim(z, &node.source_frame)?));
    }
    Ok(argmax(scores).unwrap())
}

/// Greedy matching: accept the highest-scoring node above the threshold.
/// An abstention leaves the tracked localization unchanged by convention.
pub fn gm_decide(
    z: &Frame,
    g: &TopoMap,
    tau: f64,
    sim: &dyn SimilaritySource,
) -> Result<LocalizerDecision> {
    Ok(gm_score(z, g, sim)?.decide(tau))
}

fn median_of(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

/// Sequence-matching score at `test_idx`: for every candidate node, the
/// window of frame-aligned similarities around the node's creating frame is
/// aggregated; the best candidate wins.
///
/// At sequence boundaries the window is truncated, never padded: the aligned
/// offsets are those valid in both sequences.
pub fn sm_score(
    test: &Sequence,
    test_idx: usize,
    g: &TopoMap,
    map_seq: &Sequence,
    half_window: usize,
    aggregation: Aggregation,
    sim: &dyn SimilaritySource,
) -> Result<ScoredMatch> {
    if g.node_count() == 0 {
        return Err(Error::EmptyMap);
    }
    let ti = test_idx;
    if ti >= test.len() {
        return Err(Error::WindowUnderflow);
    }
    let mut scores = Vec::with_capacity(g.node_count());
    for node in g.nodes() {
        let mi = node.source_frame.frame_id;
        let back = half_window.min(ti).min(mi);
        let fwd = half_window
            .min(test.len() - 1 - ti)
            .min(map_seq.len().saturating_sub(1).saturating_sub(mi));
        let mut sims = Vec::with_capacity(back + fwd + 1);
        for off in 0..=(back + fwd) {
            let o = off as isize - back as isize;
            let tf = test.frame((ti as isize + o) as usize).ok_or(Error::WindowUnderflow)?;
            let mf = map_seq
                .frame((mi as isize + o) as usize)
                .ok_or(Error::WindowUnderflow)?;
            sims.push(sim.sim(tf, mf)?);
        }
        if sims.is_empty() {
            return Err(Error::WindowUnderflow);
        }
        let agg = match aggregation {
            Aggregation::Median => median_of(sims),
            Aggregation::All => sims.iter().copied().fold(f64::INFINITY, f64::min),
        };
        scores.push((node.node_id, agg));
    }
    Ok(argmax(scores).unwrap())
}

/// Sequence matching: accept the best candidate whose aggregated window
/// score clears the threshold.
pub fn sm_decide(
    test: &Sequence,
    test_idx: usize,
    g: &TopoMap,
    map_seq: &Sequence,
    params: &SmParams,
    sim: &dyn SimilaritySource,
) -> Result<LocalizerDecision> {
    Ok(sm_score(
        test,
        test_idx,
        g,
        map_seq,
        params.half_window,
        params.aggregation,
        sim,
    )?
    .decide(params.tau))
}

/// Posterior belief over map nodes, indexed by node id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Belief {
    probs: Vec<f64>,
}

impl Belief {
    pub fn uniform(node_count: usize) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::EmptyMap);
        }
        Ok(Self {
            probs: vec![1.0 / node_count as f64; node_count],
        })
    }

    pub fn init(init: BeliefInit, g: &TopoMap) -> Result<Self> {
        match init {
            BeliefInit::Uniform => Self::uniform(g.node_count()),
            BeliefInit::Peaked { node } => {
                if !g.contains(node) {
                    return Err(Error::NodeNotInMap(node.0));
                }
                let mut probs = vec![0.0; g.node_count()];
                probs[node.0] = 1.0;
                Ok(Self { probs })
            }
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn sum(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        let sum = self.sum();
        if (sum - 1.0).abs() > BELIEF_NORM_TOL {
            return Err(Error::BeliefNotNormalized {
                sum,
                tol: BELIEF_NORM_TOL,
            });
        }
        Ok(())
    }

    /// Extends the belief when the map has grown, giving each new node a
    /// small prior mass before renormalizing.
    pub fn accommodate(&mut self, node_count: usize) {
        while self.probs.len() < node_count {
            self.probs.push(NEW_NODE_BELIEF_MASS);
        }
        let sum = self.sum();
        for p in &mut self.probs {
            *p /= sum;
        }
    }

    /// The most likely node and its posterior mass.
    pub fn peak(&self) -> ScoredMatch {
        let scored = self
            .probs
            .iter()
            .enumerate()
            .map(|(i, &p)| (NodeId(i), p));
        argmax(scored).expect("belief is never empty")
    }
}

/// Row-stochastic topological motion model: transitions within the hop
/// budget get `trans_near`, all others `trans_far`.
#[derive(Debug, Clone)]
pub struct TransitionModel {
    /// `rows[from][to]`, each row normalized to sum 1.
    rows: Vec<Vec<f64>>,
}

impl TransitionModel {
    pub fn build(g: &TopoMap, params: &PbuParams) -> Result<Self> {
        params.validate()?;
        let n = g.node_count();
        if n == 0 {
            return Err(Error::EmptyMap);
        }
        let mut rows = Vec::with_capacity(n);
        for from in 0..n {
            let mut row = vec![params.trans_far; n];
            match params.max_hop {
                None => row.iter_mut().for_each(|w| *w = params.trans_near),
                Some(budget) => {
                    let dist = g.hop_distances_from(NodeId(from), Some(budget));
                    for (to, d) in dist.iter().enumerate() {
                        if d.is_some() {
                            row[to] = params.trans_near;
                        }
                    }
                }
            }
            let sum: f64 = row.iter().sum();
            row.iter_mut().for_each(|w| *w /= sum);
            rows.push(row);
        }
        Ok(Self { rows })
    }

    /// Propagates a belief one motion step: `out[to] = sum_from rows[from][to] * b[from]`.
    pub fn propagate(&self, belief: &Belief) -> Vec<f64> {
        let n = self.rows.len();
        let mut out = vec![0.0; n];
        for (from, row) in self.rows.iter().enumerate() {
            let mass = belief.probs[from];
            if mass == 0.0 {
                continue;
            }
            for (to, w) in row.iter().enumerate() {
                out[to] += w * mass;
            }
        }
        out
    }
}

/// One probabilistic belief update: motion propagation, then observation
/// reweighting by the likelihood of each node's similarity, then
/// normalization. Returns the posterior and the thresholded decision.
pub fn pbu_step(
    belief: &Belief,
    z: &Frame,
    g: &TopoMap,
    params: &PbuParams,
    tau_belief: f64,
    sim: &dyn SimilaritySource,
) -> Result<(Belief, LocalizerDecision)> {
    belief.validate()?;
    if belief.probs.len() != g.node_count() {
        return Err(Error::InvalidParam(format!(
            "belief covers {} nodes but the map has {}",
            belief.probs.len(),
            g.node_count()
        )));
    }
    let model = TransitionModel::build(g, params)?;
    let posterior = pbu_step_with_model(belief, z, g, &model, params, sim)?;
    let decision = posterior.peak().decide(tau_belief);
    Ok((posterior, decision))
}

/// The belief update against a prebuilt transition model; used by runs that
/// evaluate many frames against one static map.
pub fn pbu_step_with_model(
    belief: &Belief,
    z: &Frame,
    g: &TopoMap,
    model: &TransitionModel,
    params: &PbuParams,
    sim: &dyn SimilaritySource,
) -> Result<Belief> {
    let predicted = model.propagate(belief);
    let mut posterior = Vec::with_capacity(predicted.len());
    for (i, &prior) in predicted.iter().enumerate() {
        let s = sim.sim(z, &g.node(NodeId(i))?.source_frame)?;
        posterior.push(params.likelihood.apply(s) * prior);
    }
    let total: f64 = posterior.iter().sum();
    if total <= 0.0 || !total.is_finite() {
        return Err(Error::DegenerateBelief);
    }
    posterior.iter_mut().for_each(|p| *p /= total);
    Ok(Belief { probs: posterior })
}

/// Per-method parameter bundle for case evaluation. The decision threshold
/// is supplied separately so one bundle serves a whole threshold sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodParams {
    pub half_window: usize,
    pub pbu: PbuParams,
}

impl Default for MethodParams {
    fn default() -> Self {
        Self {
            half_window: 2,
            pbu: PbuParams::default(),
        }
    }
}

/// Runs a method over a test case, warming windows or beliefs over the test
/// frames in order, and returns the threshold-free score of the final frame.
pub fn final_frame_score(
    case: &TestCase,
    method: Method,
    params: &MethodParams,
    sim: &dyn SimilaritySource,
) -> Result<ScoredMatch> {
    let g = case.map.as_ref();
    let test = &case.test_seq;
    let last = test.len() - 1;
    match method {
        Method::Gm => gm_score(test.last(), g, sim),
        Method::SmMed => sm_score(
            test,
            last,
            g,
            case.map_seq.as_ref(),
            params.half_window,
            Aggregation::Median,
            sim,
        ),
        Method::SmAll => sm_score(
            test,
            last,
            g,
            case.map_seq.as_ref(),
            params.half_window,
            Aggregation::All,
            sim,
        ),
        Method::Pbu => {
            let model = TransitionModel::build(g, &params.pbu)?;
            let mut belief = Belief::init(params.pbu.init, g)?;
            for frame in test.frames() {
                belief = pbu_step_with_model(&belief, frame, g, &model, &params.pbu, sim)?;
            }
            Ok(belief.peak())
        }
    }
}

/// Evaluates one test case end to end: the decision scored is the one issued
/// at the final test frame.
pub fn run_localizer_on_case(
    case: &TestCase,
    method: Method,
    params: &MethodParams,
    tau: f64,
    sim: &dyn SimilaritySource,
) -> Result<LocalizerDecision> {
    Ok(final_frame_score(case, method, params, sim)?.decide(tau))
}
