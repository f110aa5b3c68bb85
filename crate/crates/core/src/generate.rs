//! Deterministic graph generators: named families and seeded random models.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashSet;

use crate::graph::{NodeId, WorkingGraph};

fn build(n: usize, edges: impl IntoIterator<Item = (NodeId, NodeId)>) -> WorkingGraph {
    let mut g = WorkingGraph::new(n);
    for (x, y) in edges {
        g.insert_edge(x, y).expect("generator emits simple edges");
    }
    g
}

pub fn path(n: usize) -> WorkingGraph {
    build(n, (1..n as NodeId).map(|i| (i - 1, i)))
}

pub fn cycle(n: usize) -> WorkingGraph {
    assert!(n >= 3, "cycle needs at least 3 nodes");
    build(n, (0..n as NodeId).map(|i| (i, (i + 1) % n as NodeId)))
}

pub fn complete(n: usize) -> WorkingGraph {
    let n = n as NodeId;
    build(n as usize, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))))
}

/// Center 0 with `leaves` leaves 1..=leaves.
pub fn star(leaves: usize) -> WorkingGraph {
    build(leaves + 1, (1..=leaves as NodeId).map(|i| (0, i)))
}

/// Complete multipartite graph with `parts` parts of size `size`.
/// `complete_multipartite(3, 2)` is the octahedron.
pub fn complete_multipartite(parts: usize, size: usize) -> WorkingGraph {
    let n = parts * size;
    let part = |i: usize| i / size;
    build(
        n,
        (0..n).flat_map(move |i| {
            (i + 1..n)
                .filter(move |&j| part(i) != part(j))
                .map(move |j| (i as NodeId, j as NodeId))
        }),
    )
}

/// Disjoint union; ids of `b` are shifted by `a.node_bound()`.
pub fn disjoint_union(a: &WorkingGraph, b: &WorkingGraph) -> WorkingGraph {
    let shift = a.node_bound() as NodeId;
    build(
        a.node_bound() + b.node_bound(),
        a.edges()
            .into_iter()
            .chain(b.edges().into_iter().map(|(x, y)| (x + shift, y + shift))),
    )
}

/// Random tree: node i > 0 attaches to a uniform earlier node.
pub fn random_tree(n: usize, seed: u64) -> WorkingGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    build(
        n,
        (1..n).map(|i| (rng.gen_range(0..i) as NodeId, i as NodeId)),
    )
}

/// G(n, p).
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> WorkingGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen::<f64>() < p {
                edges.push((i as NodeId, j as NodeId));
            }
        }
    }
    build(n, edges)
}

/// G(n, m): `m` distinct uniform edges (capped at the complete graph).
pub fn erdos_renyi_gnm(n: usize, m: usize, seed: u64) -> WorkingGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max = n.saturating_mul(n.saturating_sub(1)) / 2;
    let m = m.min(max);
    let mut seen = FxHashSet::default();
    let mut edges = Vec::with_capacity(m);
    while edges.len() < m {
        let x = rng.gen_range(0..n) as NodeId;
        let y = rng.gen_range(0..n) as NodeId;
        if x == y {
            continue;
        }
        let key = (x.min(y), x.max(y));
        if seen.insert(key) {
            edges.push(key);
        }
    }
    build(n, edges)
}

/// Barabási–Albert preferential attachment: each new node brings `m` edges.
pub fn barabasi_albert(n: usize, m: usize, seed: u64) -> WorkingGraph {
    assert!(m >= 1, "attachment count must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let core = (m + 1).min(n);
    let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
    // endpoint multiset: sampling from it is degree-proportional
    let mut ends: Vec<NodeId> = Vec::new();
    for i in 0..core {
        for j in i + 1..core {
            edges.push((i as NodeId, j as NodeId));
            ends.extend([i as NodeId, j as NodeId]);
        }
    }
    for v in core..n {
        let mut targets: Vec<NodeId> = Vec::with_capacity(m);
        while targets.len() < m.min(v) {
            let t = ends[rng.gen_range(0..ends.len())];
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        targets.sort_unstable();
        for t in targets {
            edges.push((t, v as NodeId));
            ends.extend([t, v as NodeId]);
        }
    }
    build(n, edges)
}

/// Proptest strategy: a graph on `2..max_n` nodes given by an adjacency
/// bitmask, so shrinking removes edges and nodes.
#[cfg(test)]
pub(crate) fn arb_graph(max_n: usize) -> impl proptest::strategy::Strategy<Value = WorkingGraph> {
    use proptest::prelude::*;
    (2..max_n)
        .prop_flat_map(|n| (Just(n), proptest::collection::vec(any::<bool>(), n * (n - 1) / 2)))
        .prop_map(|(n, bits)| {
            let mut pairs = (0..n as NodeId).flat_map(|i| (i + 1..n as NodeId).map(move |j| (i, j)));
            build(
                n,
                bits.into_iter()
                    .zip(&mut pairs)
                    .filter_map(|(b, e)| b.then_some(e))
                    .collect::<Vec<_>>(),
            )
        })
}
