//! Localization accuracy, balanced aggregation, and operating points.
//!
//! Per-case success follows the decision rule: an accepted node must be
//! within route distance `d` of the true node; on novel cases the only
//! correct move is to abstain. Per-label accuracies are Jeffreys-smoothed
//! and combined into the balanced localization accuracy (their geometric
//! mean), swept over the decision threshold. Operating points are chosen on
//! a validation split and re-evaluated on the full case set.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ambiguity::{CaseLabel, TestCase};
use crate::baselines::{final_frame_score, LocalizerDecision, Method, MethodParams};
use crate::error::{Error, Result};
use crate::graph::EvalScale;
use crate::route::RouteOracle;
use crate::similarity::SimilaritySource;

/// Tolerance around the target rejection accuracy when pinning a threshold.
pub const AO_TARGET_TOLERANCE: f64 = 0.03;
/// Slack on the tolerance boundary so exact-boundary candidates (up to float
/// representation) count as within tolerance.
const TOLERANCE_SLACK: f64 = 1e-9;

/// Outcome of scoring one decision on one case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub case_id: String,
    pub label: CaseLabel,
    pub decision: LocalizerDecision,
    pub success: bool,
    /// Route distance from the accepted node to the true node; absent for
    /// abstentions and for novel cases.
    pub route_error: Option<f64>,
}

/// Scores a decision against a case: Accepting within `d` of the true node
/// succeeds on revisits; abstaining succeeds on novel cases.
pub fn localization_success(
    decision: &LocalizerDecision,
    case: &TestCase,
    scale: EvalScale,
    route: &dyn RouteOracle,
) -> Result<(bool, Option<f64>)> {
    let last = case.test_seq.len() - 1;
    match case.correspondence.pi(last) {
        Some(true_frame) => match decision.accepted_node() {
            Some(node) => {
                let accepted = &case.map.node(node)?.source_frame;
                let truth = case
                    .map_seq
                    .frame(true_frame)
                    .ok_or_else(|| Error::InvalidParam(format!(
                        "correspondence points at frame {true_frame} beyond the map sequence"
                    )))?;
                let err = route.route_distance(accepted, truth)?;
                Ok((err <= scale.d, Some(err)))
            }
            None => Ok((false, None)),
        },
        None => Ok((!decision.is_accept(), None)),
    }
}

/// Jeffreys-smoothed success rate: `(k + 0.5) / (n + 1)`. Strictly inside
/// (0, 1), so geometric means never collapse; within `1/(2n)` of `k/n`.
pub fn jeffreys_smooth(k: usize, n: usize) -> Result<f64> {
    if k > n {
        return Err(Error::SuccessesExceedTrials { k, n });
    }
    Ok((k as f64 + 0.5) / (n as f64 + 1.0))
}

/// Balanced localization accuracy: geometric mean of the three per-label
/// accuracies. A collapse on any one label drags the mean toward zero.
/// The product is taken in sorted order, so the result is exactly
/// permutation invariant.
pub fn bla(acc_ap: f64, acc_po: f64, acc_ao: f64) -> Result<f64> {
    let mut rates = [acc_ap, acc_po, acc_ao];
    for &r in &rates {
        if r <= 0.0 {
            return Err(Error::NonPositiveRate(r));
        }
    }
    rates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok((rates[0] * rates[1] * rates[2]).cbrt())
}

/// Raw and smoothed accuracy of one case label at one threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelStats {
    pub successes: usize,
    pub trials: usize,
    pub smoothed: f64,
    /// True when no cases of this label were present; the smoothed value is
    /// the prior mean 0.5 and must not be read as a measurement.
    pub degenerate: bool,
}

impl LabelStats {
    fn from_counts(successes: usize, trials: usize) -> Result<Self> {
        Ok(Self {
            successes,
            trials,
            smoothed: jeffreys_smooth(successes, trials)?,
            degenerate: trials == 0,
        })
    }
}

/// One threshold's evaluation over a case set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub tau: f64,
    pub ap: LabelStats,
    pub po: LabelStats,
    pub ao: LabelStats,
    pub bla: f64,
}

impl SweepPoint {
    pub fn label_stats(&self, label: CaseLabel) -> Option<&LabelStats> {
        match label {
            CaseLabel::AmbiguousPositive => Some(&self.ap),
            CaseLabel::PositiveOnly => Some(&self.po),
            CaseLabel::AmbiguousOnly => Some(&self.ao),
            CaseLabel::NovelClean => None,
        }
    }
}

/// Threshold-free evaluation of one case: the best-scoring node, and whether
/// accepting it would succeed. Thresholding this replays the full method
/// decision at any `tau`.
#[derive(Debug, Clone)]
pub struct ScoredCase {
    pub case_index: usize,
    pub label: CaseLabel,
    pub score: f64,
    /// Success of the accept branch (score >= tau); the abstain branch
    /// succeeds exactly on novel-truth cases.
    pub accept_succeeds: bool,
    /// Whether the final test frame truly lies in a novel region.
    pub truth_novel: bool,
    pub accepted_route_error: Option<f64>,
    pub node: crate::graph::NodeId,
}

impl ScoredCase {
    pub fn success_at(&self, tau: f64) -> bool {
        if self.score >= tau {
            self.accept_succeeds
        } else {
            self.truth_novel
        }
    }

    pub fn decision_at(&self, tau: f64) -> LocalizerDecision {
        if self.score >= tau {
            LocalizerDecision::accept(self.node, self.score)
        } else {
            LocalizerDecision::abstain(self.score)
        }
    }
}

/// Runs a method over every case once, capturing threshold-free scores.
pub fn score_cases(
    cases: &[TestCase],
    method: Method,
    params: &MethodParams,
    scale: EvalScale,
    sim: &dyn SimilaritySource,
    route: &dyn RouteOracle,
) -> Result<Vec<ScoredCase>> {
    cases
        .par_iter()
        .enumerate()
        .map(|(i, case)| {
            let label = case.label().ok_or_else(|| {
                Error::InvalidParam(format!("case {} carries no ambiguity label", case.case_id))
            })?;
            let scored = final_frame_score(case, method, params, sim)?;
            let accept = LocalizerDecision::accept(scored.node, scored.score);
            let (accept_succeeds, route_error) =
                localization_success(&accept, case, scale, route)?;
            let last = case.test_seq.len() - 1;
            Ok(ScoredCase {
                case_index: i,
                label,
                score: scored.score,
                accept_succeeds,
                truth_novel: case.correspondence.pi(last).is_none(),
                accepted_route_error: route_error,
                node: scored.node,
            })
        })
        .collect()
}

fn sweep_point_at(tau: f64, scored: &[ScoredCase]) -> Result<SweepPoint> {
    let mut counts = [(0usize, 0usize); 3];
    for sc in scored {
        let slot = match sc.label {
            CaseLabel::AmbiguousPositive => 0,
            CaseLabel::PositiveOnly => 1,
            CaseLabel::AmbiguousOnly => 2,
            // Outside the three-way accounting.
            CaseLabel::NovelClean => continue,
        };
        counts[slot].1 += 1;
        if sc.success_at(tau) {
            counts[slot].0 += 1;
        }
    }
    let ap = LabelStats::from_counts(counts[0].0, counts[0].1)?;
    let po = LabelStats::from_counts(counts[1].0, counts[1].1)?;
    let ao = LabelStats::from_counts(counts[2].0, counts[2].1)?;
    let bla = bla(ap.smoothed, po.smoothed, ao.smoothed)?;
    Ok(SweepPoint {
        tau,
        ap,
        po,
        ao,
        bla,
    })
}

/// Evaluates every case at every threshold of a strictly increasing grid.
pub fn threshold_sweep(
    cases: &[TestCase],
    method: Method,
    params: &MethodParams,
    tau_grid: &[f64],
    scale: EvalScale,
    sim: &dyn SimilaritySource,
    route: &dyn RouteOracle,
) -> Result<Vec<SweepPoint>> {
    validate_grid(tau_grid)?;
    let scored = score_cases(cases, method, params, scale, sim, route)?;
    tau_grid
        .iter()
        .map(|&tau| sweep_point_at(tau, &scored))
        .collect()
}

/// A sweep computed from pre-scored cases; used when several grids or splits
/// reuse one scoring pass.
pub fn sweep_from_scored(tau_grid: &[f64], scored: &[ScoredCase]) -> Result<Vec<SweepPoint>> {
    validate_grid(tau_grid)?;
    tau_grid.iter().map(|&tau| sweep_point_at(tau, scored)).collect()
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::NonMonotoneGrid);
    }
    Ok(())
}

/// A uniform threshold grid over `[lo, hi]` with `points` entries.
pub fn uniform_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect()
}

/// Per-case results of one method at one threshold.
pub fn evaluate_cases(
    cases: &[TestCase],
    method: Method,
    params: &MethodParams,
    tau: f64,
    scale: EvalScale,
    sim: &dyn SimilaritySource,
    route: &dyn RouteOracle,
) -> Result<Vec<CaseResult>> {
    let scored = score_cases(cases, method, params, scale, sim, route)?;
    Ok(scored
        .iter()
        .map(|sc| {
            let decision = sc.decision_at(tau);
            CaseResult {
                case_id: cases[sc.case_index].case_id.clone(),
                label: sc.label,
                success: sc.success_at(tau),
                route_error: if decision.is_accept() {
                    sc.accepted_route_error
                } else {
                    None
                },
                decision,
            }
        })
        .collect())
}

/// How the operating threshold is selected on the validation split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperatingPointKind {
    /// Pin the rejection accuracy near `rho` (within the tolerance),
    /// preferring thresholds that meet or exceed it.
    AoAtRho { rho: f64 },
    /// Maximize balanced localization accuracy.
    BlaMax,
}

/// A selected threshold with its validation-split values and, once
/// re-evaluated, the values on the full case set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub kind: OperatingPointKind,
    pub chosen_tau: f64,
    pub validation_values: SweepPoint,
    pub test_values: Option<SweepPoint>,
}

/// Chooses the operating threshold on a validation sweep.
///
/// For `AoAtRho`, candidates lie within the tolerance of `rho`; among the
/// conservative ones (rejection accuracy at or above `rho`) the smallest
/// threshold wins, keeping accept rates as high as the safety level allows.
/// Without conservative candidates the closest one wins. For `BlaMax`, the
/// grid argmax wins, ties to the smaller threshold.
pub fn select_operating_point(
    sweep_val: &[SweepPoint],
    kind: OperatingPointKind,
) -> Result<OperatingPoint> {
    if sweep_val.is_empty() {
        return Err(Error::NonMonotoneGrid);
    }
    let chosen: &SweepPoint = match kind {
        OperatingPointKind::AoAtRho { rho } => {
            let within: Vec<&SweepPoint> = sweep_val
                .iter()
                .filter(|p| (p.ao.smoothed - rho).abs() <= AO_TARGET_TOLERANCE + TOLERANCE_SLACK)
                .collect();
            if within.is_empty() {
                let nearest = sweep_val
                    .iter()
                    .map(|p| p.ao.smoothed)
                    .min_by(|a, b| {
                        (a - rho).abs().partial_cmp(&(b - rho).abs()).unwrap()
                    })
                    .unwrap();
                return Err(Error::NoOperatingPoint {
                    target: rho,
                    nearest,
                });
            }
            let conservative = within.iter().copied().find(|p| p.ao.smoothed >= rho);
            match conservative {
                Some(p) => p,
                None => within
                    .iter()
                    .copied()
                    .min_by(|a, b| {
                        (a.ao.smoothed - rho)
                            .abs()
                            .partial_cmp(&(b.ao.smoothed - rho).abs())
                            .unwrap()
                            .then(a.tau.partial_cmp(&b.tau).unwrap())
                    })
                    .unwrap(),
            }
        }
        OperatingPointKind::BlaMax => sweep_val
            .iter()
            .max_by(|a, b| {
                a.bla
                    .partial_cmp(&b.bla)
                    .unwrap()
                    .then(b.tau.partial_cmp(&a.tau).unwrap())
            })
            .unwrap(),
    };
    Ok(OperatingPoint {
        kind,
        chosen_tau: chosen.tau,
        validation_values: chosen.clone(),
        test_values: None,
    })
}

/// Fills in the full-set values of an operating point from the full sweep,
/// matching the chosen threshold.
pub fn reevaluate_operating_point(
    point: &mut OperatingPoint,
    sweep_full: &[SweepPoint],
) -> Result<()> {
    let found = sweep_full
        .iter()
        .find(|p| p.tau == point.chosen_tau)
        .ok_or_else(|| {
            Error::InvalidParam(format!(
                "chosen threshold {} is not on the full sweep grid",
                point.chosen_tau
            ))
        })?;
    point.test_values = Some(found.clone());
    Ok(())
}

/// Splits case indices into (validation, rest) per environment, stratified
/// by label. Deterministic in the seed; every stratum keeps at least one
/// case in validation.
pub fn split_validation(cases: &[TestCase], fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    let mut strata: std::collections::BTreeMap<(String, Option<CaseLabel>), Vec<usize>> =
        std::collections::BTreeMap::new();
    for (i, case) in cases.iter().enumerate() {
        strata
            .entry((case.environment.clone(), case.label()))
            .or_default()
            .push(i);
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut validation = Vec::new();
    let mut rest = Vec::new();
    for (_, mut idxs) in strata {
        idxs.sort_unstable();
        idxs.shuffle(&mut rng);
        let take = ((fraction * idxs.len() as f64).round() as usize)
            .max(1)
            .min(idxs.len());
        validation.extend_from_slice(&idxs[..take]);
        rest.extend_from_slice(&idxs[take..]);
    }
    validation.sort_unstable();
    rest.sort_unstable();
    (validation, rest)
}

/// One rendered row of the results table: per-case accuracies and balanced
/// accuracy at both operating points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsRow {
    pub method: String,
    /// Rows carried from published results rather than computed here.
    pub reference: bool,
    /// `[A+P, P.O., A.O., BLA]` at the pinned-rejection operating point.
    pub at_rho: Option<[f64; 4]>,
    /// `[A+P, P.O., A.O., BLA]` at the best balanced accuracy.
    pub at_bla_max: Option<[f64; 4]>,
}

/// The eight-column results table plus any row warnings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsTable {
    pub rho: f64,
    pub rows: Vec<ResultsRow>,
    pub warnings: Vec<String>,
}

impl ResultsTable {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<10} | {:>6} {:>6} {:>6} {:>6} | {:>6} {:>6} {:>6} {:>6}\n",
            "Method", "A+P", "P.O.", "A.O.", "BLA", "A+P", "P.O.", "A.O.", "BLA"
        ));
        out.push_str(&format!(
            "{:<10} | {:^27} | {:^27}\n",
            "",
            format!("L_A.O.@{:.0}", self.rho * 100.0),
            "BLA_max"
        ));
        out.push_str(&"-".repeat(70));
        out.push('\n');
        for row in &self.rows {
            let fmt_quad = |q: &Option<[f64; 4]>| match q {
                Some(v) => format!(
                    "{:>6.3} {:>6.3} {:>6.3} {:>6.3}",
                    v[0], v[1], v[2], v[3]
                ),
                None => format!("{:>6} {:>6} {:>6} {:>6}", "-", "-", "-", "-"),
            };
            let marker = if row.reference { "*" } else { "" };
            out.push_str(&format!(
                "{:<10} | {} | {}\n",
                format!("{}{}", row.method, marker),
                fmt_quad(&row.at_rho),
                fmt_quad(&row.at_bla_max)
            ));
        }
        if self.rows.iter().any(|r| r.reference) {
            out.push_str("* published reference row\n");
        }
        for w in &self.warnings {
            out.push_str(&format!("warning: {w}\n"));
        }
        out
    }
}

fn quad_from_point(p: &SweepPoint) -> [f64; 4] {
    [p.ap.smoothed, p.po.smoothed, p.ao.smoothed, p.bla]
}

/// Assembles the results table from computed operating points, with
/// published reference rows rendered verbatim first. A method missing an
/// operating point is omitted with a warning.
pub fn render_results_table(
    points: &[(Method, Option<OperatingPoint>, Option<OperatingPoint>)],
    reference_rows: &[crate::reference::PublishedRow],
    rho: f64,
) -> ResultsTable {
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for r in reference_rows {
        rows.push(ResultsRow {
            method: r.method.to_string(),
            reference: true,
            at_rho: Some(r.at_rho90),
            at_bla_max: Some(r.at_bla_max),
        });
    }
    for (method, at_rho, at_max) in points {
        if at_rho.is_none() && at_max.is_none() {
            warnings.push(format!("{method}: no operating point computed; row omitted"));
            continue;
        }
        let pick = |op: &Option<OperatingPoint>| {
            op.as_ref()
                .map(|p| quad_from_point(p.test_values.as_ref().unwrap_or(&p.validation_values)))
        };
        rows.push(ResultsRow {
            method: method.name().to_string(),
            reference: false,
            at_rho: pick(at_rho),
            at_bla_max: pick(at_max),
        });
    }
    ResultsTable {
        rho,
        rows,
        warnings,
    }
}
