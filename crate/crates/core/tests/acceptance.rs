#![allow(clippy::needless_range_loop)]

//! Acceptance suite: one test per release criterion, each printing a
//! PASS line (visible with `--nocapture`). Run with
//! `cargo test -p topobench-core --test acceptance`.

mod common;

use std::collections::BTreeSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use common::{
    brute_precision, brute_recall, floyd_warshall_hops, random_connected_graph, random_graph,
    random_world_spec,
};
use topobench_core::ambiguity::{CaseLabel, TestCase};
use topobench_core::baselines::{
    gm_decide, gm_score, pbu_step, sm_decide, Aggregation, Belief, BeliefInit, LikelihoodFn,
    Method, MethodParams, PbuParams, SmParams,
};
use topobench_core::consistency::{edge_precision, edge_recall, run_growth_invariant_harness};
use topobench_core::frame::{unit_normalize, Frame, Position, Sequence, SequenceRole};
use topobench_core::graph::{EvalScale, HopDistance, NodeId, TopoMap, UpdatePolicyParams};
use topobench_core::io::descriptor::{read_descriptors, write_descriptors};
use topobench_core::io::manifest::BenchmarkManifest;
use topobench_core::io::save_suite;
use topobench_core::io::trajectory::{read_trajectory, write_trajectory};
use topobench_core::metrics::{
    bla, jeffreys_smooth, select_operating_point, split_validation, sweep_from_scored,
    threshold_sweep, uniform_grid, LabelStats, OperatingPoint, OperatingPointKind, SweepPoint,
};
use topobench_core::policy::OracleSource;
use topobench_core::reference;
use topobench_core::route::TraversalOracle;
use topobench_core::similarity::CosineSim;
use topobench_core::synthworld::{
    generate_suite, generate_world, CaseCounts, SuiteSpec, WorldRouteOracle,
};

/// Criterion 1: on >= 100 randomized synthetic worlds with
/// epsilon <= 1/kappa and oracle localization decisions, edge precision and
/// recall are 1.0 at every growth step. Zero tolerance.
#[test]
fn criterion_1_growth_induction_invariant() {
    let started = std::time::Instant::now();
    let specs: Vec<_> = {
        let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);
        (0..104)
            .map(|i| {
                let spec = random_world_spec(&mut rng);
                let revisit = rng.random_range(1..6);
                (i, spec, revisit)
            })
            .collect()
    };
    let params = UpdatePolicyParams::new(1.0, 0.7, 2.0).unwrap();
    let scale = EvalScale::new(8.0, 0.5).unwrap();
    assert!(scale.epsilon <= 1.0 / params.kappa);
    specs.par_iter().for_each(|(i, spec, revisit)| {
        let world = generate_world(spec).unwrap();
        let oracle = WorldRouteOracle { world: &world };
        let walk = world.revisit_walk(*revisit);
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0xABCD);
        let seq = world
            .frames_along(&walk, SequenceRole::Map, spec.noise_sigma, &mut rng)
            .unwrap();
        let mut source = OracleSource::new(&oracle, 0.75);
        let trace =
            run_growth_invariant_harness(&seq, &mut source, params, scale, &oracle).unwrap();
        assert!(trace.certified, "world {i} not certified");
        for step in &trace.steps {
            assert_eq!(
                step.report.precision, 1.0,
                "world {i} ({:?}): precision broke at step {}",
                spec.layout, step.step
            );
            assert_eq!(
                step.report.recall, 1.0,
                "world {i} ({:?}): recall broke at step {}",
                spec.layout, step.step
            );
        }
    });
    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs() < 60,
        "runtime budget exceeded: {elapsed:?}"
    );
    println!(
        "ACCEPTANCE 1 growth-induction-invariant: PASS ({} worlds in {elapsed:?})",
        specs.len()
    );
}

/// Criterion 2: consistency metrics match exhaustive brute force on graphs
/// of up to 30 nodes, and hop distances match Floyd-Warshall on 200 random
/// graphs.
#[test]
fn criterion_2_consistency_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xBEEF);
    for round in 0..60 {
        let n = rng.random_range(2..=30);
        let extra = rng.random_range(0..10);
        let g = random_connected_graph(&mut rng, n, extra);
        let scale =
            EvalScale::new(rng.random_range(1.0..20.0), rng.random_range(0.2..1.0)).unwrap();
        let report = edge_precision(&g, scale, &TraversalOracle).unwrap();
        let (expected, expected_viol) = brute_precision(&g, scale);
        assert_eq!(report.precision, expected, "precision, round {round}");
        let got: BTreeSet<(usize, usize)> = report
            .precision_violations
            .iter()
            .map(|p| (p.u.0, p.v.0))
            .collect();
        assert_eq!(got, expected_viol, "precision pairs, round {round}");

        let mut omega = BTreeSet::new();
        for _ in 0..rng.random_range(1..40) {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            if a < b {
                omega.insert((NodeId(a), NodeId(b)));
            }
        }
        let report = edge_recall(&g, &omega, scale, &TraversalOracle).unwrap();
        let (expected, expected_viol) = brute_recall(&g, &omega, scale);
        assert_eq!(report.recall, expected, "recall, round {round}");
        let got: BTreeSet<(usize, usize)> = report
            .recall_violations
            .iter()
            .map(|p| (p.u.0, p.v.0))
            .collect();
        assert_eq!(got, expected_viol, "recall pairs, round {round}");
    }

    for round in 0..200 {
        let n = rng.random_range(2..20);
        let p = rng.random_range(0.05..0.5);
        let g = random_graph(&mut rng, n, p);
        let oracle = floyd_warshall_hops(&g);
        for u in 0..n {
            for v in 0..n {
                let got = g.hop_distance(NodeId(u), NodeId(v)).unwrap();
                let expected = match oracle[u][v] {
                    Some(h) => HopDistance::Hops(h),
                    None => HopDistance::Unreachable,
                };
                assert_eq!(got, expected, "round {round}, pair ({u}, {v})");
            }
        }
    }
    println!("ACCEPTANCE 2 consistency-oracles: PASS (60 metric graphs, 200 hop graphs)");
}

/// Criterion 3: for every generated case of each kind (>= 50 per kind over
/// randomized specs), the classifier reproduces the intended label at the
/// declared margins. Zero misclassifications.
#[test]
fn criterion_3_classification_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xFACE);
    let mut per_kind = std::collections::BTreeMap::new();
    for round in 0..30 {
        let spec = SuiteSpec {
            seed: rng.random(),
            environments: 1,
            counts: CaseCounts {
                ambiguous_positive: 2,
                positive_only: 2,
                ambiguous_only: 2,
                novel_clean: 0,
            },
            seq_len: rng.random_range(4..7),
            descriptor_dim: [64, 128, 256][rng.random_range(0..3)],
            noise_sigma: rng.random_range(0.02..0.08),
            kidnapped_fraction: rng.random_range(0.0..=1.0),
            ..SuiteSpec::default()
        };
        let envs = generate_suite(&spec)
            .unwrap_or_else(|e| panic!("round {round} (seed {}) failed: {e}", spec.seed));
        for env in &envs {
            for case in &env.cases {
                assert_eq!(
                    case.measured.label, case.intended_label,
                    "round {round}, case {}",
                    case.case_id
                );
                *per_kind.entry(case.intended_label).or_insert(0usize) += 1;
            }
        }
    }
    for kind in CaseLabel::TAXONOMY {
        let count = per_kind.get(&kind).copied().unwrap_or(0);
        assert!(count >= 50, "only {count} cases of kind {kind}");
    }
    println!(
        "ACCEPTANCE 3 classification-round-trip: PASS ({:?})",
        per_kind
    );
}

/// Criterion 4: smoothing and balanced-accuracy arithmetic match
/// high-precision oracles within 1e-12; the smoothing deviation bound holds
/// for every n up to 10^4.
#[test]
fn criterion_4_bla_arithmetic() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xABBA);
    for _ in 0..10_000 {
        let n = rng.random_range(0..100_000usize);
        let k = rng.random_range(0..=n);
        let got = jeffreys_smooth(k, n).unwrap();
        let expected = (2 * k + 1) as f64 / (2 * n + 2) as f64;
        assert!((got - expected).abs() < 1e-12);

        let a = rng.random_range(1e-6f64..1.0);
        let b = rng.random_range(1e-6f64..1.0);
        let c = rng.random_range(1e-6f64..1.0);
        let got = bla(a, b, c).unwrap();
        let expected = ((a.ln() + b.ln() + c.ln()) / 3.0).exp();
        assert!((got - expected).abs() < 1e-12);
    }
    // Pinned example on the published ambiguous-revisit count.
    assert!((jeffreys_smooth(0, 51).unwrap() - 0.009615).abs() < 1e-6);
    // Deviation bound, exhaustive in k for every n.
    for n in 1..=10_000usize {
        let bound = 1.0 / (2.0 * n as f64) + 1e-15;
        for k in 0..=n {
            let smoothed = (k as f64 + 0.5) / (n as f64 + 1.0);
            let raw = k as f64 / n as f64;
            if (smoothed - raw).abs() > bound {
                panic!("bound violated at k={k}, n={n}");
            }
        }
    }
    println!("ACCEPTANCE 4 bla-arithmetic: PASS (10^4 random inputs, exhaustive bound)");
}

fn benchmark_spec() -> SuiteSpec {
    SuiteSpec {
        seed: 0x70B0,
        environments: 8,
        // Published benchmark proportions 51/384/194 scaled down 4x.
        counts: CaseCounts {
            ambiguous_positive: 13,
            positive_only: 96,
            ambiguous_only: 49,
            novel_clean: 0,
        },
        descriptor_dim: 256,
        ..SuiteSpec::default()
    }
}

fn benchmark_cases() -> Vec<TestCase> {
    let spec = benchmark_spec();
    let envs = generate_suite(&spec).unwrap();
    let policy = UpdatePolicyParams::new(1.0, 0.7, 2.0).unwrap();
    envs.iter()
        .flat_map(|e| e.to_test_cases(&policy, 0.5).unwrap())
        .collect()
}

/// Criterion 5: rejection accuracy is non-decreasing and revisit accuracies
/// non-increasing across the threshold grid, exactly at the count level.
#[test]
fn criterion_5_monotone_sweep() {
    let cases = benchmark_cases();
    let params = MethodParams::default();
    let grid = uniform_grid(0.0, 1.0, 101);
    let scale = EvalScale::new(8.0, 0.5).unwrap();
    for method in [Method::Gm, Method::SmMed, Method::SmAll] {
        let sweep = threshold_sweep(
            &cases,
            method,
            &params,
            &grid,
            scale,
            &CosineSim,
            &TraversalOracle,
        )
        .unwrap();
        for w in sweep.windows(2) {
            assert!(w[1].ao.successes >= w[0].ao.successes, "{method}");
            assert!(w[1].po.successes <= w[0].po.successes, "{method}");
            assert!(w[1].ap.successes <= w[0].ap.successes, "{method}");
        }
    }
    println!("ACCEPTANCE 5 monotone-sweep: PASS (GM, SM-Med, SM-All over 101-point grid)");
}

/// Criterion 6: sequence matching with a zero window is exactly greedy
/// matching; the belief filter with an unbounded motion model and identity
/// likelihood picks the greedy argmax; the posterior stays normalized to
/// 1e-9 over a thousand steps.
#[test]
fn criterion_6_baseline_equivalences() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xF00D);
    let frame_with = |id: usize, rng: &mut ChaCha8Rng| Frame {
        frame_id: id,
        timestamp: id as f64,
        pose: Position::new2d(id as f64, 0.0),
        traversal_dist: id as f64,
        descriptor: Some(unit_normalize(
            (0..8).map(|_| rng.random_range(-1.0f32..1.0)).collect(),
        )),
    };
    for round in 0..1000 {
        let n = rng.random_range(1..12);
        let map_frames: Vec<Frame> = (0..n).map(|i| frame_with(i, &mut rng)).collect();
        let map_seq = Sequence::new(map_frames, SequenceRole::Map).unwrap();
        let mut g = TopoMap::new();
        for f in map_seq.frames() {
            g.add_node(f.clone());
        }
        for i in 1..n {
            g.add_edge(NodeId(i - 1), NodeId(i), 1.0).unwrap();
        }
        let test_frames: Vec<Frame> = (0..3).map(|i| frame_with(i, &mut rng)).collect();
        let test = Sequence::new(test_frames, SequenceRole::Test).unwrap();
        let ti = rng.random_range(0..3);
        let tau = rng.random_range(0.0..1.0);
        let params = SmParams {
            half_window: 0,
            aggregation: if round % 2 == 0 {
                Aggregation::Median
            } else {
                Aggregation::All
            },
            tau,
        };
        let sm = sm_decide(&test, ti, &g, &map_seq, &params, &CosineSim).unwrap();
        let gm = gm_decide(&test.frames()[ti], &g, tau, &CosineSim).unwrap();
        assert_eq!(sm, gm, "round {round}");

        // Unbounded uniform motion + identity likelihood reduces the belief
        // update to the greedy argmax.
        let pbu_params = PbuParams {
            max_hop: None,
            trans_near: 1.0,
            trans_far: 0.05,
            likelihood: LikelihoodFn::Identity,
            init: BeliefInit::Uniform,
        };
        let belief = Belief::uniform(n).unwrap();
        let z = &test.frames()[ti];
        let (posterior, _) = pbu_step(&belief, z, &g, &pbu_params, 0.5, &CosineSim).unwrap();
        assert_eq!(
            posterior.peak().node,
            gm_score(z, &g, &CosineSim).unwrap().node,
            "round {round}"
        );
    }

    let n = 25;
    let map_frames: Vec<Frame> = (0..n).map(|i| frame_with(i, &mut rng)).collect();
    let mut g = TopoMap::new();
    for f in &map_frames {
        g.add_node(f.clone());
    }
    for i in 1..n {
        g.add_edge(NodeId(i - 1), NodeId(i), 1.0).unwrap();
    }
    let params = PbuParams::default();
    let mut belief = Belief::uniform(n).unwrap();
    for step in 0..1000 {
        let z = frame_with(step % 40, &mut rng);
        let (posterior, _) = pbu_step(&belief, &z, &g, &params, 0.5, &CosineSim).unwrap();
        assert!(
            (posterior.sum() - 1.0).abs() < 1e-9,
            "normalization drift at step {step}"
        );
        belief = posterior;
    }
    println!("ACCEPTANCE 6 baseline-equivalences: PASS (10^3 inputs, 10^3 belief steps)");
}

/// Criterion 7: threshold selection honors the +-3% tolerance with the
/// conservative preference, and best-balance selection matches an
/// exhaustive grid argmax.
#[test]
fn criterion_7_operating_point_selection() {
    // The forced example: rejection accuracies {0.80, 0.89, 0.93, 0.99}
    // around a 0.90 target must pick 0.93.
    let stats = |v: f64| LabelStats {
        successes: 0,
        trials: 10,
        smoothed: v,
        degenerate: false,
    };
    let mk = |tau: f64, ao: f64| SweepPoint {
        tau,
        ap: stats(0.2),
        po: stats(0.5),
        ao: stats(ao),
        bla: 0.3,
    };
    let sweep = vec![mk(0.1, 0.80), mk(0.2, 0.89), mk(0.3, 0.93), mk(0.4, 0.99)];
    let p = select_operating_point(&sweep, OperatingPointKind::AoAtRho { rho: 0.90 }).unwrap();
    assert_eq!(p.chosen_tau, 0.3);

    // Tolerance rejection with the nearest achievable value reported.
    let sweep_low = vec![mk(0.1, 0.2), mk(0.2, 0.4)];
    match select_operating_point(&sweep_low, OperatingPointKind::AoAtRho { rho: 0.9 }) {
        Err(topobench_core::Error::NoOperatingPoint { target, nearest }) => {
            assert_eq!(target, 0.9);
            assert_eq!(nearest, 0.4);
        }
        other => panic!("expected rejection, got {other:?}"),
    }

    // Candidates only below the target within tolerance: closest wins.
    let sweep_below = vec![mk(0.1, 0.85), mk(0.2, 0.875), mk(0.3, 0.88)];
    let p = select_operating_point(&sweep_below, OperatingPointKind::AoAtRho { rho: 0.9 }).unwrap();
    assert_eq!(p.chosen_tau, 0.3);

    // Best-balance selection on a real sweep matches the exhaustive argmax.
    let cases = benchmark_cases();
    let grid = uniform_grid(0.0, 1.0, 101);
    let scale = EvalScale::new(8.0, 0.5).unwrap();
    for method in Method::ALL {
        let sweep = threshold_sweep(
            &cases,
            method,
            &MethodParams::default(),
            &grid,
            scale,
            &CosineSim,
            &TraversalOracle,
        )
        .unwrap();
        let point = select_operating_point(&sweep, OperatingPointKind::BlaMax).unwrap();
        let best = sweep.iter().map(|p| p.bla).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(point.validation_values.bla, best, "{method}");
        for p in sweep.iter().filter(|p| p.bla == best) {
            assert!(point.chosen_tau <= p.tau, "{method}: not the smallest tie");
        }
    }
    println!("ACCEPTANCE 7 operating-point-selection: PASS");
}

struct MethodEval {
    /// The 90% point may be unresolvable at desk scale: with few validation
    /// novel cases, no smoothed accuracy lands within the +-3% window. That
    /// is reported, not fudged.
    at_90: Option<OperatingPoint>,
    at_99: OperatingPoint,
    at_max: OperatingPoint,
    full_sweep: Vec<SweepPoint>,
}

fn evaluate_method(
    cases: &[TestCase],
    val_idx: &[usize],
    method: Method,
    grid: &[f64],
    scale: EvalScale,
) -> MethodEval {
    let params = MethodParams::default();
    let scored = topobench_core::metrics::score_cases(
        cases,
        method,
        &params,
        scale,
        &CosineSim,
        &TraversalOracle,
    )
    .unwrap();
    let val_set: std::collections::BTreeSet<usize> = val_idx.iter().copied().collect();
    let val_scored: Vec<_> = scored
        .iter()
        .filter(|s| val_set.contains(&s.case_index))
        .cloned()
        .collect();
    let sweep_val = sweep_from_scored(grid, &val_scored).unwrap();
    let sweep_full = sweep_from_scored(grid, &scored).unwrap();
    let at_90 = match select_operating_point(&sweep_val, OperatingPointKind::AoAtRho { rho: 0.90 })
    {
        Ok(mut p) => {
            topobench_core::metrics::reevaluate_operating_point(&mut p, &sweep_full).unwrap();
            Some(p)
        }
        Err(topobench_core::Error::NoOperatingPoint { .. }) => None,
        Err(other) => panic!("unexpected selection error: {other}"),
    };
    let mut at_99 =
        select_operating_point(&sweep_val, OperatingPointKind::AoAtRho { rho: 0.99 }).unwrap();
    let mut at_max = select_operating_point(&sweep_val, OperatingPointKind::BlaMax).unwrap();
    for p in [&mut at_99, &mut at_max] {
        topobench_core::metrics::reevaluate_operating_point(p, &sweep_full).unwrap();
    }
    MethodEval {
        at_90,
        at_99,
        at_max,
        full_sweep: sweep_full,
    }
}

/// Criterion 8: the scaled-down benchmark reproduces the qualitative
/// findings. At the 99% rejection operating point every method collapses to
/// the smoothed floor on ambiguous revisits; at 90% the methods beat an
/// always-abstain reference on clean revisits while matching it on novel
/// cases at the top of the grid; published reference rows render exactly.
#[test]
fn criterion_8_qualitative_reproduction() {
    let cases = benchmark_cases();
    let n_ap = cases
        .iter()
        .filter(|c| c.label() == Some(CaseLabel::AmbiguousPositive))
        .count();
    let n_po = cases
        .iter()
        .filter(|c| c.label() == Some(CaseLabel::PositiveOnly))
        .count();
    let n_ao = cases
        .iter()
        .filter(|c| c.label() == Some(CaseLabel::AmbiguousOnly))
        .count();
    assert_eq!((n_ap, n_po, n_ao), (13, 96, 49));

    let grid = uniform_grid(0.0, 1.0, 101);
    let scale = EvalScale::new(8.0, 0.5).unwrap();
    // The validation split must carry enough novel cases for the smoothed
    // rejection accuracy to resolve a +-3% window around the target.
    let (val_idx, _) = split_validation(&cases, 0.35, 17);

    // Always-abstain reference: fails every revisit, rejects every novel.
    let abstain_po = jeffreys_smooth(0, n_po).unwrap();
    let abstain_ao = jeffreys_smooth(n_ao, n_ao).unwrap();

    let mut points = Vec::new();
    let mut resolved_90 = Vec::new();
    for method in Method::ALL {
        let eval = evaluate_method(&cases, &val_idx, method, &grid, scale);
        if eval.at_90.is_some() {
            resolved_90.push(method.name());
        }

        // At the 99% rejection point, ambiguous revisits collapse to the
        // smoothed floor: zero successes.
        let at99 = eval.at_99.test_values.as_ref().unwrap();
        assert_eq!(
            at99.ap.successes, 0,
            "{method}: expected zero ambiguous-revisit successes at the 99% point"
        );
        assert_eq!(at99.ap.smoothed, jeffreys_smooth(0, n_ap).unwrap());

        // The method must beat always-abstain on clean revisits at its best
        // balance, and at the pinned 90% point whenever that point resolves.
        let at_max = eval.at_max.test_values.as_ref().unwrap();
        assert!(
            at_max.po.smoothed > abstain_po,
            "{method}: {} <= abstain {abstain_po} at best balance",
            at_max.po.smoothed
        );
        if let Some(at90) = &eval.at_90 {
            let vals = at90.test_values.as_ref().unwrap();
            assert!(
                vals.po.smoothed > abstain_po,
                "{method}: {} <= abstain {abstain_po} at the 90% point",
                vals.po.smoothed
            );
        }

        // At the top of the grid every method abstains everywhere, matching
        // the always-abstain reference on novel cases.
        let top = eval.full_sweep.last().unwrap();
        assert_eq!(top.ao.smoothed, abstain_ao, "{method}");

        points.push((method, eval.at_90.clone(), Some(eval.at_max.clone())));
    }

    // Published reference rows render the exact constants.
    let table = topobench_core::metrics::render_results_table(
        &points,
        &reference::external_reference_rows(),
        0.90,
    );
    let text = table.to_text();
    assert!(text.contains("FAB-MAP"));
    assert!(text.contains("0.058"));
    assert!(text.contains("RatSLAM"));
    let published = reference::published_results_table();
    let published_text = published.to_text();
    for needle in ["0.058", "0.220", "0.295", "FAB-MAP", "SM-Med", "PBU"] {
        assert!(published_text.contains(needle), "missing {needle}");
    }
    assert_eq!(reference::published_row("FAB-MAP").unwrap().at_rho90[3], 0.058);
    assert_eq!(reference::published_row("SM-Med").unwrap().at_rho90[3], 0.220);
    assert_eq!(reference::published_row("PBU").unwrap().at_bla_max[3], 0.295);

    println!(
        "ACCEPTANCE 8 qualitative-reproduction: PASS ({n_ap}/{n_po}/{n_ao} cases; 90% point resolved for {resolved_90:?})"
    );
}

/// Criterion 9: manifest, trajectory, and descriptor files survive
/// write-read-write byte-identically, and a tampered manifest count is
/// rejected.
#[test]
fn criterion_9_format_round_trips() {
    // Trajectory.
    let frames: Vec<Frame> = (0..6)
        .map(|i| Frame {
            frame_id: i,
            timestamp: i as f64 * 0.7,
            pose: Position::new2d(i as f64 * 1.3, (i as f64).sin()),
            traversal_dist: i as f64 * 1.3,
            descriptor: None,
        })
        .collect();
    let seq = Sequence::new(frames, SequenceRole::Map).unwrap();
    let text = write_trajectory(&seq);
    let parsed = read_trajectory(&text, SequenceRole::Map).unwrap();
    assert_eq!(write_trajectory(&parsed), text);

    // Descriptors.
    let rows: Vec<Vec<f32>> = (0..7)
        .map(|i| unit_normalize((0..16).map(|j| ((i * 16 + j) as f32).sin()).collect()))
        .collect();
    let bytes = write_descriptors(&rows).unwrap();
    let parsed = read_descriptors(&bytes).unwrap();
    assert_eq!(write_descriptors(&parsed).unwrap(), bytes);

    // Manifest via a real exported suite.
    let spec = SuiteSpec {
        seed: 0x1234,
        counts: CaseCounts {
            ambiguous_positive: 1,
            positive_only: 2,
            ambiguous_only: 1,
            novel_clean: 0,
        },
        descriptor_dim: 64,
        ..SuiteSpec::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let manifest = save_suite(dir.path(), &generate_suite(&spec).unwrap(), &spec, "rt").unwrap();
    let json = manifest.to_json().unwrap();
    let reparsed = BenchmarkManifest::from_json(&json).unwrap();
    assert_eq!(reparsed.to_json().unwrap(), json);

    // Tampering with a count must be rejected on load.
    let mut tampered = manifest.clone();
    tampered.counts.ambiguous_only += 1;
    let tampered_json = serde_json::to_string(&tampered).unwrap();
    assert!(matches!(
        BenchmarkManifest::from_json(&tampered_json),
        Err(topobench_core::Error::ManifestInvalid(_))
    ));
    println!("ACCEPTANCE 9 format-round-trips: PASS");
}
