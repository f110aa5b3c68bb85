//! Desk-scale ground truth for the collapse algorithms.
//!
//! Everything here is deliberately naive: clique enumeration into an explicit
//! complex, GF(2) column reduction for boundary ranks, exhaustive dominance
//! scans straight from the set-inclusion definitions, and BFS from every node.
//! None of it shares code paths with the collapse passes it checks.

use std::collections::{BTreeSet, VecDeque};

use thiserror::Error;

use crate::graph::{NodeId, WorkingGraph};

pub const MAX_TRIANGLES: usize = 1_000_000;
pub const MAX_TETRAHEDRA: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("clique complex too large for the oracle: more than {limit} {what}")]
    TooLarge { what: &'static str, limit: usize },
    #[error("max_dim must be 2 or 3, got {0}")]
    BadDimension(usize),
}

/// Sparse GF(2) matrix stored by columns; each column is a sorted list of row
/// indices holding a 1.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BoundaryMatrix {
    pub rows: usize,
    pub columns: Vec<Vec<usize>>,
}

impl BoundaryMatrix {
    /// Rank over GF(2) by left-to-right column reduction on pivot rows.
    pub fn rank(&self) -> usize {
        let mut pivot_owner: Vec<Option<Vec<usize>>> = vec![None; self.rows];
        let mut rank = 0;
        for col in &self.columns {
            let mut c = col.clone();
            while let Some(&low) = c.last() {
                match &pivot_owner[low] {
                    Some(other) => c = symmetric_difference(&c, other),
                    None => break,
                }
            }
            if let Some(&low) = c.last() {
                pivot_owner[low] = Some(c);
                rank += 1;
            }
        }
        rank
    }

    /// `self ∘ inner` over GF(2), as column lists.
    pub fn compose(&self, inner: &BoundaryMatrix) -> Vec<Vec<usize>> {
        inner
            .columns
            .iter()
            .map(|col| {
                let mut acc: Vec<usize> = Vec::new();
                for &j in col {
                    acc = symmetric_difference(&acc, &self.columns[j]);
                }
                acc
            })
            .collect()
    }
}

fn symmetric_difference(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Clique complex of a graph snapshot up to dimension 2 or 3.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliqueComplex {
    pub max_dim: usize,
    pub vertices: Vec<NodeId>,
    pub edges: Vec<[NodeId; 2]>,
    pub triangles: Vec<[NodeId; 3]>,
    pub tetrahedra: Vec<[NodeId; 4]>,
    /// ∂₁, ∂₂ and (for `max_dim = 3`) ∂₃.
    pub boundaries: Vec<BoundaryMatrix>,
    /// Whether the graph has a 5-clique, i.e. simplices above the cap.
    pub truncated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BettiVector {
    pub beta0: usize,
    pub beta1: usize,
    pub beta2: Option<usize>,
}

fn sorted_intersection(a: &[NodeId], b: &[NodeId]) -> Vec<NodeId> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

pub fn build_clique_complex(g: &WorkingGraph, max_dim: usize) -> Result<CliqueComplex, OracleError> {
    if !(2..=3).contains(&max_dim) {
        return Err(OracleError::BadDimension(max_dim));
    }
    let vertices: Vec<NodeId> = g.nodes().collect();
    // forward neighbor lists: only neighbors with a larger id
    let mut fwd: Vec<Vec<NodeId>> = vec![Vec::new(); g.node_bound()];
    for &u in &vertices {
        fwd[u as usize] = g
            .neighbors(u)
            .expect("alive")
            .into_iter()
            .filter(|&w| w > u)
            .collect();
    }

    let mut edges = Vec::new();
    let mut triangles = Vec::new();
    let mut tetrahedra = Vec::new();
    let mut truncated = false;
    for &u in &vertices {
        for &v in &fwd[u as usize] {
            edges.push([u, v]);
            let uv = sorted_intersection(&fwd[u as usize], &fwd[v as usize]);
            for (k, &w) in uv.iter().enumerate() {
                triangles.push([u, v, w]);
                if triangles.len() > MAX_TRIANGLES {
                    return Err(OracleError::TooLarge {
                        what: "triangles",
                        limit: MAX_TRIANGLES,
                    });
                }
                let uvw = sorted_intersection(&uv[k + 1..], &fwd[w as usize]);
                if max_dim == 3 {
                    for (l, &x) in uvw.iter().enumerate() {
                        tetrahedra.push([u, v, w, x]);
                        if tetrahedra.len() > MAX_TETRAHEDRA {
                            return Err(OracleError::TooLarge {
                                what: "tetrahedra",
                                limit: MAX_TETRAHEDRA,
                            });
                        }
                        if !truncated
                            && !sorted_intersection(&uvw[l + 1..], &fwd[x as usize]).is_empty()
                        {
                            truncated = true;
                        }
                    }
                } else if !truncated && !uvw.is_empty() {
                    truncated = true;
                }
            }
        }
    }

    let vertex_index = |x: NodeId| vertices.binary_search(&x).expect("vertex");
    let mut boundaries = Vec::with_capacity(max_dim);
    boundaries.push(BoundaryMatrix {
        rows: vertices.len(),
        columns: edges
            .iter()
            .map(|&[a, b]| vec![vertex_index(a), vertex_index(b)])
            .collect(),
    });
    let edge_index = |a: NodeId, b: NodeId| edges.binary_search(&[a, b]).expect("face edge");
    boundaries.push(BoundaryMatrix {
        rows: edges.len(),
        columns: triangles
            .iter()
            .map(|&[a, b, c]| {
                let mut col = vec![edge_index(a, b), edge_index(a, c), edge_index(b, c)];
                col.sort_unstable();
                col
            })
            .collect(),
    });
    if max_dim == 3 {
        let tri_index =
            |a: NodeId, b: NodeId, c: NodeId| triangles.binary_search(&[a, b, c]).expect("face");
        boundaries.push(BoundaryMatrix {
            rows: triangles.len(),
            columns: tetrahedra
                .iter()
                .map(|&[a, b, c, d]| {
                    let mut col = vec![
                        tri_index(a, b, c),
                        tri_index(a, b, d),
                        tri_index(a, c, d),
                        tri_index(b, c, d),
                    ];
                    col.sort_unstable();
                    col
                })
                .collect(),
        });
    }

    Ok(CliqueComplex {
        max_dim,
        vertices,
        edges,
        triangles,
        tetrahedra,
        boundaries,
        truncated,
    })
}

impl CliqueComplex {
    /// Simplex counts per dimension, `[n, m, t, q]` (q = 0 when `max_dim = 2`).
    pub fn counts(&self) -> [usize; 4] {
        [
            self.vertices.len(),
            self.edges.len(),
            self.triangles.len(),
            self.tetrahedra.len(),
        ]
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.boundaries.iter().map(BoundaryMatrix::rank).collect()
    }

    /// Whether every face of every stored simplex is stored.
    pub fn is_closed(&self) -> bool {
        let has_edge = |a: NodeId, b: NodeId| self.edges.binary_search(&[a, b]).is_ok();
        let has_tri = |a, b, c| self.triangles.binary_search(&[a, b, c]).is_ok();
        let has_vertex = |a: NodeId| self.vertices.binary_search(&a).is_ok();
        self.edges.iter().all(|&[a, b]| has_vertex(a) && has_vertex(b))
            && self
                .triangles
                .iter()
                .all(|&[a, b, c]| has_edge(a, b) && has_edge(a, c) && has_edge(b, c))
            && self.tetrahedra.iter().all(|&[a, b, c, d]| {
                has_tri(a, b, c) && has_tri(a, b, d) && has_tri(a, c, d) && has_tri(b, c, d)
            })
    }

    /// Whether ∂_{k-1} ∘ ∂_k vanishes for every stored pair.
    pub fn boundary_squares_vanish(&self) -> bool {
        self.boundaries
            .windows(2)
            .all(|w| w[0].compose(&w[1]).iter().all(Vec::is_empty))
    }

    /// β₃ of the stored 3-skeleton, `q − rank ∂₃`. Only meaningful for
    /// `max_dim = 3`; it is the top-dimensional cycle count the Euler
    /// identity needs when 4-cliques form closed 3-cycles.
    pub fn top_cycles(&self) -> Option<usize> {
        (self.max_dim == 3).then(|| self.tetrahedra.len() - self.boundaries[2].rank())
    }
}

/// Betti numbers over GF(2): β₀ = n − rk∂₁, β₁ = (m − rk∂₁) − rk∂₂ and, for
/// `max_dim = 3`, β₂ = (t − rk∂₂) − rk∂₃.
pub fn betti_numbers(complex: &CliqueComplex) -> BettiVector {
    let ranks = complex.ranks();
    let [n, m, t, _] = complex.counts();
    BettiVector {
        beta0: n - ranks[0],
        beta1: (m - ranks[0]) - ranks[1],
        beta2: (complex.max_dim == 3).then(|| (t - ranks[1]) - ranks[2]),
    }
}

/// Shorthand for building the complex and reading its Betti numbers.
pub fn betti_of(g: &WorkingGraph, max_dim: usize) -> Result<BettiVector, OracleError> {
    Ok(betti_numbers(&build_clique_complex(g, max_dim)?))
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DominanceScan {
    /// Dominated nodes with every dominator, both ascending.
    pub nodes: Vec<(NodeId, Vec<NodeId>)>,
    /// Dominated edges `(x < y)` with every dominator, both ascending.
    pub edges: Vec<((NodeId, NodeId), Vec<NodeId>)>,
}

/// Exhaustive check of `N[u] ⊆ N[v]` over all ordered node pairs and
/// `N[x,y] ⊆ N[v]` over all edges and all `v ∉ {x, y}`, without thresholds
/// or early exits.
pub fn brute_force_dominated_scan(g: &WorkingGraph) -> DominanceScan {
    let nodes: Vec<NodeId> = g.nodes().collect();
    let closed: Vec<BTreeSet<NodeId>> = (0..g.node_bound() as NodeId)
        .map(|u| {
            if g.is_alive(u) {
                g.closed_neighborhood(u).expect("alive").into_iter().collect()
            } else {
                BTreeSet::new()
            }
        })
        .collect();

    let mut scan = DominanceScan::default();
    for &u in &nodes {
        let doms: Vec<NodeId> = nodes
            .iter()
            .copied()
            .filter(|&v| v != u && closed[u as usize].is_subset(&closed[v as usize]))
            .collect();
        if !doms.is_empty() {
            scan.nodes.push((u, doms));
        }
    }
    for &x in &nodes {
        for &y in closed[x as usize].range(x + 1..) {
            let closed_edge: BTreeSet<NodeId> = closed[x as usize]
                .intersection(&closed[y as usize])
                .copied()
                .collect();
            let doms: Vec<NodeId> = nodes
                .iter()
                .copied()
                .filter(|&v| v != x && v != y && closed_edge.is_subset(&closed[v as usize]))
                .collect();
            if !doms.is_empty() {
                scan.edges.push(((x, y), doms));
            }
        }
    }
    scan
}

pub const UNREACHABLE: u32 = u32::MAX;

/// BFS distances among alive nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMatrix {
    index: Vec<Option<usize>>,
    nodes: Vec<NodeId>,
    dist: Vec<u32>,
}

impl DistanceMatrix {
    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    /// Distance between two alive nodes, [`UNREACHABLE`] if disconnected,
    /// `None` if either was not alive when the matrix was computed.
    pub fn get(&self, a: NodeId, b: NodeId) -> Option<u32> {
        let i = (*self.index.get(a as usize)?)?;
        let j = (*self.index.get(b as usize)?)?;
        Some(self.dist[i * self.nodes.len() + j])
    }

    /// Largest increase `after − self` over pairs alive in `after`. A pair
    /// that becomes disconnected counts as `u32::MAX`; returns a negative
    /// value when every distance shrank.
    pub fn max_increase(&self, after: &DistanceMatrix) -> i64 {
        let mut worst = i64::MIN;
        for &a in &after.nodes {
            for &b in &after.nodes {
                if a >= b {
                    continue;
                }
                let (Some(old), Some(new)) = (self.get(a, b), after.get(a, b)) else {
                    continue;
                };
                let inc = if old == new {
                    0
                } else if new == UNREACHABLE {
                    i64::from(u32::MAX)
                } else if old == UNREACHABLE {
                    i64::MIN / 2
                } else {
                    i64::from(new) - i64::from(old)
                };
                worst = worst.max(inc);
            }
        }
        worst
    }
}

pub fn all_pairs_distances(g: &WorkingGraph) -> DistanceMatrix {
    let nodes: Vec<NodeId> = g.nodes().collect();
    let k = nodes.len();
    let mut index = vec![None; g.node_bound()];
    for (i, &u) in nodes.iter().enumerate() {
        index[u as usize] = Some(i);
    }
    let adj: Vec<Vec<usize>> = nodes
        .iter()
        .map(|&u| {
            g.neighbors(u)
                .expect("alive")
                .into_iter()
                .map(|w| index[w as usize].expect("alive neighbor"))
                .collect()
        })
        .collect();
    let mut dist = vec![UNREACHABLE; k * k];
    let mut queue = VecDeque::new();
    for s in 0..k {
        let row = &mut dist[s * k..(s + 1) * k];
        row[s] = 0;
        queue.push_back(s);
        while let Some(a) = queue.pop_front() {
            for &b in &adj[a] {
                if row[b] == UNREACHABLE {
                    row[b] = row[a] + 1;
                    queue.push_back(b);
                }
            }
        }
    }
    DistanceMatrix { index, nodes, dist }
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
        true
    }
}

/// Connected components among alive nodes.
pub fn component_count(g: &WorkingGraph) -> usize {
    let mut uf = UnionFind::new(g.node_bound());
    let mut merges = 0;
    for (x, y) in g.edges() {
        if uf.union(x as usize, y as usize) {
            merges += 1;
        }
    }
    g.node_count() - merges
}
