#![allow(clippy::needless_range_loop)]

//! Consistency metrics against exhaustive brute force, plus the executable
//! form of the growth induction: correct decisions keep both metrics at 1.

mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{brute_precision, brute_recall, random_connected_graph, random_world_spec};
use topobench_core::baselines::LocalizerDecision;
use topobench_core::consistency::{
    edge_precision, edge_precision_with_budget, edge_recall, edge_recall_with_budget,
    run_growth_invariant_harness,
};
use topobench_core::frame::SequenceRole;
use topobench_core::graph::{hop_threshold, EvalScale, NodeId, TopoMap, UpdatePolicyParams};
use topobench_core::policy::{FaultInjector, OracleSource};
use topobench_core::route::TraversalOracle;
use topobench_core::synthworld::{generate_world, WorldRouteOracle, WorldSpec};

#[test]
fn precision_matches_brute_force_on_small_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for round in 0..40 {
        let n = rng.random_range(2..=30);
        let extra = rng.random_range(0..10);
        let g = random_connected_graph(&mut rng, n, extra);
        let scale = EvalScale::new(rng.random_range(1.0..20.0), rng.random_range(0.2..1.0)).unwrap();
        let report = edge_precision(&g, scale, &TraversalOracle).unwrap();
        let (expected, expected_viol) = brute_precision(&g, scale);
        assert_eq!(report.precision, expected, "round {round}");
        let got: BTreeSet<(usize, usize)> = report
            .precision_violations
            .iter()
            .map(|p| (p.u.0, p.v.0))
            .collect();
        assert_eq!(got, expected_viol, "round {round}");
    }
}

#[test]
fn recall_matches_brute_force_on_small_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for round in 0..40 {
        let n = rng.random_range(2..=30);
        let extra = rng.random_range(0..8);
        let g = random_connected_graph(&mut rng, n, extra);
        // Random opportunity set over node pairs.
        let mut omega = BTreeSet::new();
        for _ in 0..rng.random_range(1..40) {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            if a < b {
                omega.insert((NodeId(a), NodeId(b)));
            }
        }
        let scale = EvalScale::new(rng.random_range(1.0..20.0), rng.random_range(0.2..1.0)).unwrap();
        let report = edge_recall(&g, &omega, scale, &TraversalOracle).unwrap();
        let (expected, expected_viol) = brute_recall(&g, &omega, scale);
        assert_eq!(report.recall, expected, "round {round}");
        let got: BTreeSet<(usize, usize)> = report
            .recall_violations
            .iter()
            .map(|p| (p.u.0, p.v.0))
            .collect();
        assert_eq!(got, expected_viol, "round {round}");
    }
}

fn harness_params() -> (UpdatePolicyParams, EvalScale) {
    (
        UpdatePolicyParams::new(1.0, 0.7, 2.0).unwrap(),
        EvalScale::new(8.0, 0.5).unwrap(),
    )
}

fn run_oracle_growth(spec: &WorldSpec, revisit: usize) -> topobench_core::consistency::GrowthTrace {
    let world = generate_world(spec).unwrap();
    let oracle = WorldRouteOracle { world: &world };
    let walk = world.revisit_walk(revisit);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x55AA);
    let seq = world
        .frames_along(&walk, SequenceRole::Map, spec.noise_sigma, &mut rng)
        .unwrap();
    let (params, scale) = harness_params();
    let mut source = OracleSource::new(&oracle, 0.75);
    run_growth_invariant_harness(&seq, &mut source, params, scale, &oracle).unwrap()
}

#[test]
fn oracle_decisions_keep_consistency_on_random_worlds() {
    let mut rng = ChaCha8Rng::seed_from_u64(31337);
    for round in 0..12 {
        let spec = random_world_spec(&mut rng);
        let trace = run_oracle_growth(&spec, rng.random_range(1..6));
        assert!(trace.certified);
        assert!(
            trace.all_consistent(),
            "round {round} ({:?}): first violation at {:?}",
            spec.layout,
            trace.first_violation
        );
        for step in &trace.steps {
            assert_eq!(step.report.precision, 1.0);
            assert_eq!(step.report.recall, 1.0);
        }
    }
}

#[test]
fn loop_second_lap_creates_closure_and_stays_consistent() {
    let spec = WorldSpec {
        layout: topobench_core::synthworld::LayoutKind::Loop { places: 4 },
        place_len: 5.0,
        gap_len: 6.0,
        frame_spacing: 1.0,
        descriptor_dim: 64,
        noise_sigma: 0.02,
        alias_groups: vec![],
        seed: 4242,
    };
    let trace = run_oracle_growth(&spec, 3);
    assert!(trace.all_consistent());
    // The second lap must have linked back into lap-one nodes with at least
    // one genuinely new edge between non-consecutive nodes.
    let closure = trace
        .final_map
        .edges()
        .any(|(u, v, _)| v.0 > u.0 + 1);
    assert!(closure, "no loop-closure edge was created");
}

#[test]
fn injected_wrong_accept_is_caught_at_that_step() {
    let spec = WorldSpec {
        layout: topobench_core::synthworld::LayoutKind::Corridor { places: 5 },
        place_len: 5.0,
        gap_len: 6.0,
        frame_spacing: 1.0,
        descriptor_dim: 64,
        noise_sigma: 0.02,
        alias_groups: vec![],
        seed: 77,
    };
    let world = generate_world(&spec).unwrap();
    let oracle = WorldRouteOracle { world: &world };
    let walk = world.canonical_walk();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let seq = world
        .frames_along(&walk, SequenceRole::Map, spec.noise_sigma, &mut rng)
        .unwrap();
    let (params, scale) = harness_params();
    // Step 25 sits ~25 m into the corridor; node 0 is ~24 m behind, far
    // beyond the evaluation scale d = 8.
    let bad_step = 25;
    let mut source = FaultInjector {
        inner: OracleSource::new(&oracle, 0.75),
        overrides: std::collections::BTreeMap::from([(
            bad_step,
            LocalizerDecision::accept(NodeId(0), 0.99),
        )]),
    };
    let trace = run_growth_invariant_harness(&seq, &mut source, params, scale, &oracle).unwrap();
    assert_eq!(trace.first_violation, Some(bad_step));
    let step = trace.steps.iter().find(|s| s.step == bad_step).unwrap();
    assert!(step.report.precision < 1.0);
    assert!(step
        .record
        .decision
        .accepted_node()
        .is_some_and(|n| n == NodeId(0)));
}

#[test]
fn hypothesis_violation_refuses_certification_but_still_runs() {
    let spec = WorldSpec {
        layout: topobench_core::synthworld::LayoutKind::Corridor { places: 3 },
        place_len: 5.0,
        gap_len: 6.0,
        frame_spacing: 1.0,
        descriptor_dim: 64,
        noise_sigma: 0.02,
        alias_groups: vec![],
        seed: 9,
    };
    let world = generate_world(&spec).unwrap();
    let oracle = WorldRouteOracle { world: &world };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let seq = world
        .frames_along(&world.canonical_walk(), SequenceRole::Map, 0.02, &mut rng)
        .unwrap();
    let params = UpdatePolicyParams::new(1.0, 0.7, 2.0).unwrap();
    // epsilon = 2 / kappa, violating the epsilon <= 1/kappa hypothesis.
    let scale = EvalScale::new(8.0, 1.0).unwrap();
    let mut source = OracleSource::new(&oracle, 0.75);
    let trace = run_growth_invariant_harness(&seq, &mut source, params, scale, &oracle).unwrap();
    assert!(!trace.certified);
    assert!(!trace.steps.is_empty());
}

#[test]
fn reports_are_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let g = random_connected_graph(&mut rng, 25, 8);
    let scale = EvalScale::new(5.0, 0.8).unwrap();
    let a = edge_precision(&g, scale, &TraversalOracle).unwrap();
    let b = edge_precision(&g, scale, &TraversalOracle).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// At a pinned hop budget, adding an edge whose route length is within
    /// the regularity bound never lowers recall.
    #[test]
    fn adding_legal_edge_never_lowers_recall(seed in 0u64..500) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(4..20);
        let extra = rng.random_range(0..6);
        let g = random_connected_graph(&mut rng, n, extra);
        let mut omega = BTreeSet::new();
        for _ in 0..10 {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            if a < b {
                omega.insert((NodeId(a), NodeId(b)));
            }
        }
        let scale = EvalScale::new(6.0, 0.5).unwrap();
        let mu = g.median_edge_length().unwrap();
        let budget = hop_threshold(scale, mu).unwrap();
        let before = edge_recall_with_budget(&g, &omega, scale, budget, None, &TraversalOracle)
            .unwrap()
            .recall;
        // Add a random absent edge with a policy-legal route length.
        let mut g2 = g.clone();
        let kappa = 2.0;
        'outer: for a in 0..n {
            for b in (a + 1)..n {
                if !g2.has_edge(NodeId(a), NodeId(b)) {
                    let route = (a as f64 - b as f64).abs();
                    if route <= kappa * mu {
                        g2.add_edge(NodeId(a), NodeId(b), route).unwrap();
                        break 'outer;
                    }
                }
            }
        }
        let after = edge_recall_with_budget(&g2, &omega, scale, budget, None, &TraversalOracle)
            .unwrap()
            .recall;
        prop_assert!(after >= before - 1e-12);
    }

    /// At a pinned hop budget, removing a violating edge never lowers
    /// precision.
    #[test]
    fn removing_violating_edge_never_lowers_precision(seed in 0u64..500) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(5..22);
        let extra = rng.random_range(2..8);
        let mut g = random_connected_graph(&mut rng, n, extra);
        // Inject a wormhole: an edge between traversal-distant nodes.
        let (far_a, far_b) = (0, n - 1);
        let _ = g.add_edge(NodeId(far_a), NodeId(far_b), (n - 1) as f64);
        let scale = EvalScale::new(4.0, 0.5).unwrap();
        let mu = g.median_edge_length().unwrap();
        let budget = hop_threshold(scale, mu).unwrap();
        let report =
            edge_precision_with_budget(&g, scale, budget, None, &TraversalOracle).unwrap();
        prop_assume!(!report.precision_violations.is_empty());
        let victim = &report.precision_violations[0];
        prop_assume!(g.has_edge(victim.u, victim.v));
        // Rebuild without the violating edge, keeping connectivity.
        let mut g2 = TopoMap::new();
        for node in g.nodes() {
            g2.add_node(node.source_frame.clone());
        }
        for (u, v, len) in g.edges() {
            if (u, v) != (victim.u, victim.v) {
                g2.add_edge(u, v, len).unwrap();
            }
        }
        prop_assume!(g2.is_connected());
        let after = edge_precision_with_budget(&g2, scale, budget, None, &TraversalOracle)
            .unwrap()
            .precision;
        prop_assert!(after >= report.precision - 1e-12);
    }
}
