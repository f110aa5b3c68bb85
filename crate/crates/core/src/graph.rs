//! Mutable undirected graph with lazy node deletion, plus the supernode
//! bookkeeping that every collapse operation mutates.
//!
//! Node ids are dense `0..n`. Deleting a node only tombstones it and fixes
//! the degree caches of its neighbors; stale entries stay in the neighbors'
//! adjacency sets until more than half of a set is dead, at which point that
//! set is purged. Every public query filters dead ids, and every query that
//! returns a node list returns it in ascending id order.

use rustc_hash::FxHashSet;
use thiserror::Error;

pub type NodeId = u32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("node {0} is dead or out of range")]
    InvalidNode(NodeId),
    #[error("edge ({0}, {1}) does not exist")]
    MissingEdge(NodeId, NodeId),
    #[error("edge ({0}, {1}) already exists")]
    DuplicateEdge(NodeId, NodeId),
    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),
    #[error("cannot merge node {0} into itself")]
    SelfMerge(NodeId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkingGraph {
    adjacency: Vec<FxHashSet<NodeId>>,
    alive: Vec<bool>,
    degree: Vec<u32>,
    // dead ids still physically present in adjacency[u]
    stale: Vec<u32>,
    nodes_alive: usize,
    edges_alive: usize,
}

impl WorkingGraph {
    /// `n` isolated nodes.
    pub fn new(n: usize) -> Self {
        Self {
            adjacency: vec![FxHashSet::default(); n],
            alive: vec![true; n],
            degree: vec![0; n],
            stale: vec![0; n],
            nodes_alive: n,
            edges_alive: 0,
        }
    }

    /// Strict constructor: rejects self-loops, duplicates and out-of-range ids.
    pub fn from_edges(n: usize, edges: &[(NodeId, NodeId)]) -> Result<Self, GraphError> {
        let mut g = Self::new(n);
        for &(x, y) in edges {
            g.insert_edge(x, y)?;
        }
        Ok(g)
    }

    /// Total number of ids ever allocated, alive or not.
    pub fn node_bound(&self) -> usize {
        self.alive.len()
    }

    pub fn node_count(&self) -> usize {
        self.nodes_alive
    }

    pub fn edge_count(&self) -> usize {
        self.edges_alive
    }

    pub fn is_alive(&self, u: NodeId) -> bool {
        self.alive.get(u as usize).copied().unwrap_or(false)
    }

    /// Cached degree; 0 for dead or unknown ids.
    pub fn degree(&self, u: NodeId) -> usize {
        if self.is_alive(u) {
            self.degree[u as usize] as usize
        } else {
            0
        }
    }

    pub fn has_edge(&self, x: NodeId, y: NodeId) -> bool {
        self.is_alive(x) && self.is_alive(y) && self.adjacency[x as usize].contains(&y)
    }

    fn check_node(&self, u: NodeId) -> Result<(), GraphError> {
        if self.is_alive(u) {
            Ok(())
        } else {
            Err(GraphError::InvalidNode(u))
        }
    }

    fn check_edge(&self, x: NodeId, y: NodeId) -> Result<(), GraphError> {
        self.check_node(x)?;
        self.check_node(y)?;
        if self.adjacency[x as usize].contains(&y) {
            Ok(())
        } else {
            Err(GraphError::MissingEdge(x, y))
        }
    }

    /// Alive neighbors of `u` in arbitrary order. Callers that need a
    /// reproducible order use [`WorkingGraph::neighbors`].
    pub fn neighbors_unordered(&self, u: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        let alive = &self.alive;
        self.adjacency
            .get(u as usize)
            .into_iter()
            .flat_map(|set| set.iter().copied())
            .filter(move |&w| alive[w as usize])
    }

    /// N(u), ascending.
    pub fn neighbors(&self, u: NodeId) -> Result<Vec<NodeId>, GraphError> {
        self.check_node(u)?;
        let mut out: Vec<NodeId> = self.neighbors_unordered(u).collect();
        out.sort_unstable();
        Ok(out)
    }

    /// Alias of [`WorkingGraph::neighbors`] under its set-theoretic name.
    pub fn open_neighborhood(&self, u: NodeId) -> Result<Vec<NodeId>, GraphError> {
        self.neighbors(u)
    }

    /// N[u] = N(u) ∪ {u}, ascending.
    pub fn closed_neighborhood(&self, u: NodeId) -> Result<Vec<NodeId>, GraphError> {
        let mut out = self.neighbors(u)?;
        let pos = out.binary_search(&u).unwrap_err();
        out.insert(pos, u);
        Ok(out)
    }

    /// N(x) ∩ N(y), ascending. Does not require (x, y) to be an edge.
    pub fn common_neighbors(&self, x: NodeId, y: NodeId) -> Vec<NodeId> {
        if !self.is_alive(x) || !self.is_alive(y) {
            return Vec::new();
        }
        let (small, large) = if self.degree[x as usize] <= self.degree[y as usize] {
            (x, y)
        } else {
            (y, x)
        };
        let other = &self.adjacency[large as usize];
        let mut out: Vec<NodeId> = self
            .neighbors_unordered(small)
            .filter(|w| other.contains(w))
            .collect();
        out.sort_unstable();
        out
    }

    /// N(x, y) = N(x) ∩ N(y) for an alive edge.
    pub fn open_edge_neighborhood(&self, x: NodeId, y: NodeId) -> Result<Vec<NodeId>, GraphError> {
        self.check_edge(x, y)?;
        Ok(self.common_neighbors(x, y))
    }

    /// N[x, y] = N[x] ∩ N[y] = {x, y} ∪ N(x, y) for an alive edge.
    pub fn closed_edge_neighborhood(
        &self,
        x: NodeId,
        y: NodeId,
    ) -> Result<Vec<NodeId>, GraphError> {
        let mut out = self.open_edge_neighborhood(x, y)?;
        out.push(x);
        out.push(y);
        out.sort_unstable();
        Ok(out)
    }

    /// Alive node ids, ascending.
    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.alive
            .iter()
            .enumerate()
            .filter(|(_, &a)| a)
            .map(|(i, _)| i as NodeId)
    }

    /// Alive edges as `(min, max)` pairs in lexicographic order.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::with_capacity(self.edges_alive);
        for u in self.nodes() {
            let start = out.len();
            out.extend(self.neighbors_unordered(u).filter(|&w| w > u).map(|w| (u, w)));
            out[start..].sort_unstable();
        }
        out
    }

    pub fn max_degree(&self) -> usize {
        self.nodes().map(|u| self.degree(u)).max().unwrap_or(0)
    }

    pub fn average_degree(&self) -> f64 {
        if self.nodes_alive == 0 {
            0.0
        } else {
            2.0 * self.edges_alive as f64 / self.nodes_alive as f64
        }
    }

    pub fn insert_edge(&mut self, x: NodeId, y: NodeId) -> Result<(), GraphError> {
        self.check_node(x)?;
        self.check_node(y)?;
        if x == y {
            return Err(GraphError::SelfLoop(x));
        }
        if self.adjacency[x as usize].contains(&y) {
            return Err(GraphError::DuplicateEdge(x, y));
        }
        self.adjacency[x as usize].insert(y);
        self.adjacency[y as usize].insert(x);
        self.degree[x as usize] += 1;
        self.degree[y as usize] += 1;
        self.edges_alive += 1;
        Ok(())
    }

    pub fn delete_edge(&mut self, x: NodeId, y: NodeId) -> Result<(), GraphError> {
        self.check_edge(x, y)?;
        self.adjacency[x as usize].remove(&y);
        self.adjacency[y as usize].remove(&x);
        self.degree[x as usize] -= 1;
        self.degree[y as usize] -= 1;
        self.edges_alive -= 1;
        Ok(())
    }

    /// Tombstones `u` and merges its supernode into `dominator`'s.
    ///
    /// The dominator does not have to be adjacent to `u`; strong collapse
    /// always passes a neighbor, but nothing here depends on it.
    pub fn delete_node(
        &mut self,
        u: NodeId,
        map: &mut SupernodeMap,
        dominator: NodeId,
    ) -> Result<(), GraphError> {
        if u == dominator {
            return Err(GraphError::SelfMerge(u));
        }
        self.check_node(u)?;
        self.check_node(dominator)?;
        map.merge(u, dominator)?;

        self.alive[u as usize] = false;
        self.nodes_alive -= 1;
        let set = std::mem::take(&mut self.adjacency[u as usize]);
        for w in set {
            if !self.alive[w as usize] {
                continue;
            }
            let wi = w as usize;
            self.degree[wi] -= 1;
            self.edges_alive -= 1;
            self.stale[wi] += 1;
            if self.stale[wi] as usize * 2 > self.adjacency[wi].len() {
                self.purge(wi);
            }
        }
        self.degree[u as usize] = 0;
        self.stale[u as usize] = 0;
        Ok(())
    }

    fn purge(&mut self, u: usize) {
        let alive = &self.alive;
        self.adjacency[u].retain(|w| alive[*w as usize]);
        self.stale[u] = 0;
    }

    /// Physically removes every tombstoned id from every adjacency set.
    pub fn compact(&mut self) {
        for u in 0..self.adjacency.len() {
            if self.stale[u] > 0 {
                self.purge(u);
            }
        }
    }

    /// Recomputes everything the caches claim and reports the first
    /// discrepancy. Intended for tests and debug assertions.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut edges = 0usize;
        for u in self.nodes() {
            let mut deg = 0u32;
            for w in self.neighbors_unordered(u) {
                if w == u {
                    return Err(format!("self-loop on {u}"));
                }
                if !self.adjacency[w as usize].contains(&u) {
                    return Err(format!("asymmetric adjacency {u} -> {w}"));
                }
                deg += 1;
            }
            if deg != self.degree[u as usize] {
                return Err(format!(
                    "degree cache of {u} is {} but {deg} alive neighbors",
                    self.degree[u as usize]
                ));
            }
            edges += deg as usize;
        }
        if !edges.is_multiple_of(2) || edges / 2 != self.edges_alive {
            return Err(format!("edge count {} but {} half-edges", self.edges_alive, edges));
        }
        let alive = self.alive.iter().filter(|&&a| a).count();
        if alive != self.nodes_alive {
            return Err(format!("node count {} but {alive} alive", self.nodes_alive));
        }
        Ok(())
    }
}

/// Surjection from original nodes onto surviving supernodes.
///
/// A supernode's id is the id of its representative node in the
/// [`WorkingGraph`]. Merges are recorded as parent links (so the assignment of
/// a node is found by walking to a root) and member lists are combined
/// smaller-into-larger.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupernodeMap {
    parent: Vec<NodeId>,
    members: Vec<Vec<NodeId>>,
    supernodes: usize,
}

impl SupernodeMap {
    pub fn identity(n: usize) -> Self {
        Self {
            parent: (0..n as NodeId).collect(),
            members: (0..n as NodeId).map(|i| vec![i]).collect(),
            supernodes: n,
        }
    }

    pub fn original_count(&self) -> usize {
        self.parent.len()
    }

    pub fn supernode_count(&self) -> usize {
        self.supernodes
    }

    pub fn is_supernode(&self, s: NodeId) -> bool {
        self.parent.get(s as usize).is_some_and(|&p| p == s)
    }

    /// Moves every member of `from` into `into`.
    pub fn merge(&mut self, from: NodeId, into: NodeId) -> Result<(), GraphError> {
        if from == into {
            return Err(GraphError::SelfMerge(from));
        }
        if !self.is_supernode(from) {
            return Err(GraphError::InvalidNode(from));
        }
        if !self.is_supernode(into) {
            return Err(GraphError::InvalidNode(into));
        }
        self.parent[from as usize] = into;
        let mut moved = std::mem::take(&mut self.members[from as usize]);
        let target = &mut self.members[into as usize];
        if moved.len() > target.len() {
            std::mem::swap(&mut moved, target);
        }
        target.extend(moved);
        self.supernodes -= 1;
        Ok(())
    }

    /// Supernode currently holding original node `x`.
    pub fn supernode_of(&self, mut x: NodeId) -> NodeId {
        while self.parent[x as usize] != x {
            x = self.parent[x as usize];
        }
        x
    }

    /// Full assignment vector, original id → supernode id. Linear time.
    pub fn assignment(&self) -> Vec<NodeId> {
        let n = self.parent.len();
        let mut resolved: Vec<Option<NodeId>> = vec![None; n];
        let mut chain = Vec::new();
        for start in 0..n {
            let mut x = start as NodeId;
            while resolved[x as usize].is_none() && self.parent[x as usize] != x {
                chain.push(x);
                x = self.parent[x as usize];
            }
            let root = resolved[x as usize].unwrap_or(x);
            resolved[x as usize] = Some(root);
            for y in chain.drain(..) {
                resolved[y as usize] = Some(root);
            }
        }
        resolved.into_iter().map(|r| r.expect("resolved")).collect()
    }

    /// Members of supernode `s`, ascending. Empty if `s` is not a supernode.
    pub fn members(&self, s: NodeId) -> Vec<NodeId> {
        let mut out = self.members.get(s as usize).cloned().unwrap_or_default();
        out.sort_unstable();
        out
    }

    /// Supernode ids, ascending.
    pub fn supernodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.parent
            .iter()
            .enumerate()
            .filter(|(i, &p)| p as usize == *i)
            .map(|(i, _)| i as NodeId)
    }

    pub fn is_identity(&self) -> bool {
        self.supernodes == self.parent.len()
    }

    /// Checks that member lists partition the original nodes consistently
    /// with the parent links.
    pub fn check_invariants(&self) -> Result<(), String> {
        let assignment = self.assignment();
        let mut seen = vec![false; self.parent.len()];
        let mut total = 0usize;
        for s in self.supernodes() {
            for &m in &self.members[s as usize] {
                if std::mem::replace(&mut seen[m as usize], true) {
                    return Err(format!("node {m} listed twice"));
                }
                if assignment[m as usize] != s {
                    return Err(format!("node {m} listed under {s} but assigned elsewhere"));
                }
                total += 1;
            }
        }
        if total != self.parent.len() {
            return Err(format!("{total} members for {} originals", self.parent.len()));
        }
        if self.supernodes().count() != self.supernodes {
            return Err("supernode counter out of sync".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AttributeError {
    #[error("feature row {row} has dimension {found}, expected {expected}")]
    DimensionMismatch { row: usize, expected: usize, found: usize },
    #[error("{what} has {found} rows for {expected} nodes")]
    LengthMismatch { what: &'static str, expected: usize, found: usize },
}

/// Per-original-node features (dense, shared dimension) and optional labels.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AttributedData {
    dim: usize,
    // row-major, `len = rows * dim`; empty when no features were supplied
    features: Vec<f64>,
    rows: usize,
    labels: Option<Vec<Option<u32>>>,
}

impl AttributedData {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(
        features: Option<Vec<Vec<f64>>>,
        labels: Option<Vec<Option<u32>>>,
    ) -> Result<Self, AttributeError> {
        let mut data = Self::default();
        if let Some(rows) = features {
            let dim = rows.first().map_or(0, Vec::len);
            data.features.reserve(rows.len() * dim);
            for (row, f) in rows.iter().enumerate() {
                if f.len() != dim {
                    return Err(AttributeError::DimensionMismatch {
                        row,
                        expected: dim,
                        found: f.len(),
                    });
                }
                data.features.extend_from_slice(f);
            }
            data.dim = dim;
            data.rows = rows.len();
        }
        if let (Some(l), true) = (&labels, data.rows > 0) {
            if l.len() != data.rows {
                return Err(AttributeError::LengthMismatch {
                    what: "labels",
                    expected: data.rows,
                    found: l.len(),
                });
            }
        }
        data.labels = labels;
        Ok(data)
    }

    pub fn has_features(&self) -> bool {
        self.rows > 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn feature(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn labels(&self) -> Option<&[Option<u32>]> {
        self.labels.as_deref()
    }

    pub fn label(&self, i: usize) -> Option<u32> {
        self.labels.as_ref().and_then(|l| l.get(i).copied().flatten())
    }
}
