//! Shared helpers for the integration suites: random graphs, brute-force
//! distance oracles, and randomized world specs.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::Rng;
#[allow(unused_imports)]
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use topobench_core::frame::{Frame, Position};
use topobench_core::graph::{hop_threshold, EvalScale, NodeId, TopoMap};
use topobench_core::synthworld::{LayoutKind, WorldSpec};

pub fn frame_at(id: usize, x: f64, trav: f64) -> Frame {
    Frame {
        frame_id: id,
        timestamp: id as f64,
        pose: Position::new2d(x, 0.0),
        traversal_dist: trav,
        descriptor: None,
    }
}

/// Connected random graph: a random spanning tree plus extra random edges.
/// Edge route lengths are arbitrary positive values.
pub fn random_connected_graph(rng: &mut ChaCha8Rng, nodes: usize, extra_edges: usize) -> TopoMap {
    let mut g = TopoMap::new();
    for i in 0..nodes {
        g.add_node(frame_at(i, i as f64, i as f64));
    }
    for i in 1..nodes {
        let parent = rng.random_range(0..i);
        let len = rng.random_range(0.5..3.0);
        g.add_edge(NodeId(parent), NodeId(i), len).unwrap();
    }
    for _ in 0..extra_edges {
        let a = rng.random_range(0..nodes);
        let b = rng.random_range(0..nodes);
        if a != b {
            let len = rng.random_range(0.5..3.0);
            let _ = g.add_edge(NodeId(a), NodeId(b), len);
        }
    }
    g
}

/// Random graph that may be disconnected: independent edge coin flips.
pub fn random_graph(rng: &mut ChaCha8Rng, nodes: usize, edge_prob: f64) -> TopoMap {
    let mut g = TopoMap::new();
    for i in 0..nodes {
        g.add_node(frame_at(i, i as f64, i as f64));
    }
    for a in 0..nodes {
        for b in (a + 1)..nodes {
            if rng.random_bool(edge_prob) {
                g.add_edge(NodeId(a), NodeId(b), rng.random_range(0.5..3.0))
                    .unwrap();
            }
        }
    }
    g
}

/// All-pairs hop distances by Floyd-Warshall; `None` marks unreachable.
pub fn floyd_warshall_hops(g: &TopoMap) -> Vec<Vec<Option<usize>>> {
    let n = g.node_count();
    const INF: usize = usize::MAX / 4;
    let mut d = vec![vec![INF; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0;
    }
    for (u, v, _) in g.edges() {
        d[u.0][v.0] = 1;
        d[v.0][u.0] = 1;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k].saturating_add(d[k][j]);
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d.into_iter()
        .map(|row| row.into_iter().map(|v| if v >= INF { None } else { Some(v) }).collect())
        .collect()
}

/// Brute-force edge precision: every unordered pair, hops from
/// Floyd-Warshall, routes from traversal differences.
pub fn brute_precision(g: &TopoMap, scale: EvalScale) -> (f64, BTreeSet<(usize, usize)>) {
    let mu = g.median_edge_length().unwrap();
    let n = hop_threshold(scale, mu).unwrap();
    let hops = floyd_warshall_hops(g);
    let mut denom = 0usize;
    let mut violations = BTreeSet::new();
    for u in 0..g.node_count() {
        for v in (u + 1)..g.node_count() {
            if let Some(h) = hops[u][v] {
                if h <= n {
                    denom += 1;
                    let route = (g.node(NodeId(u)).unwrap().source_frame.traversal_dist
                        - g.node(NodeId(v)).unwrap().source_frame.traversal_dist)
                        .abs();
                    if route > scale.d {
                        violations.insert((u, v));
                    }
                }
            }
        }
    }
    let precision = if denom == 0 {
        1.0
    } else {
        1.0 - violations.len() as f64 / denom as f64
    };
    (precision, violations)
}

/// Brute-force policy-conditioned edge recall over an opportunity set.
pub fn brute_recall(
    g: &TopoMap,
    omega: &BTreeSet<(NodeId, NodeId)>,
    scale: EvalScale,
) -> (f64, BTreeSet<(usize, usize)>) {
    let mu = g.median_edge_length().unwrap();
    let n = hop_threshold(scale, mu).unwrap();
    let hops = floyd_warshall_hops(g);
    let mut denom = 0usize;
    let mut violations = BTreeSet::new();
    for &(u, v) in omega {
        let route = (g.node(u).unwrap().source_frame.traversal_dist
            - g.node(v).unwrap().source_frame.traversal_dist)
            .abs();
        if route > scale.d {
            continue;
        }
        denom += 1;
        match hops[u.0][v.0] {
            Some(h) if h <= n => {}
            _ => {
                violations.insert((u.0, v.0));
            }
        }
    }
    let recall = if denom == 0 {
        1.0
    } else {
        1.0 - violations.len() as f64 / denom as f64
    };
    (recall, violations)
}

/// A randomized small world spec cycling over the three layout kinds.
pub fn random_world_spec(rng: &mut ChaCha8Rng) -> WorldSpec {
    let layout = match rng.random_range(0..3) {
        0 => LayoutKind::Corridor {
            places: rng.random_range(2..5),
        },
        1 => LayoutKind::Loop {
            places: rng.random_range(3..6),
        },
        _ => LayoutKind::Grid {
            rows: rng.random_range(2..4),
            cols: rng.random_range(2..4),
        },
    };
    let places = match layout {
        LayoutKind::Corridor { places } => places,
        LayoutKind::Loop { places } => places,
        LayoutKind::Grid { rows, cols } => rows * (cols - 1),
    };
    let alias_groups = if places >= 3 && rng.random_bool(0.5) {
        vec![vec![0, places - 1]]
    } else {
        vec![]
    };
    WorldSpec {
        layout,
        place_len: 5.0,
        gap_len: 6.0,
        frame_spacing: 1.0,
        descriptor_dim: 64,
        noise_sigma: 0.05,
        alias_groups,
        seed: rng.random(),
    }
}
