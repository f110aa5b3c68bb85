//! Dominance predicates and the worklist-driven strong and edge collapse passes.

use std::collections::VecDeque;
use std::hash::Hash;

use rustc_hash::FxHashSet;

use crate::graph::{GraphError, NodeId, SupernodeMap, WorkingGraph};

/// Outcome of a dominance query. `removed_set_size` is |S_u| for relaxed
/// node checks and 0 otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DominanceResult {
    pub dominator: Option<NodeId>,
    pub removed_set_size: usize,
}

impl DominanceResult {
    pub const NOT_DOMINATED: Self = Self {
        dominator: None,
        removed_set_size: 0,
    };

    pub fn dominated(&self) -> bool {
        self.dominator.is_some()
    }
}

/// FIFO queue that refuses ids already enqueued.
#[derive(Debug, Clone)]
pub struct Worklist<T> {
    queue: VecDeque<T>,
    membership: FxHashSet<T>,
}

impl<T: Copy + Eq + Hash> Default for Worklist<T> {
    fn default() -> Self {
        Self {
            queue: VecDeque::new(),
            membership: FxHashSet::default(),
        }
    }
}

impl<T: Copy + Eq + Hash> Worklist<T> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns false if `item` was already queued.
    pub fn push(&mut self, item: T) -> bool {
        if self.membership.insert(item) {
            self.queue.push_back(item);
            true
        } else {
            false
        }
    }

    pub fn pop(&mut self) -> Option<T> {
        let item = self.queue.pop_front()?;
        self.membership.remove(&item);
        Some(item)
    }

    pub fn contains(&self, item: &T) -> bool {
        self.membership.contains(item)
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }
}

/// Parameters shared by every pass.
#[derive(Debug, Clone, Copy)]
pub struct PassContext<'a> {
    /// Degree threshold θ₁; use `usize::MAX` to disable.
    pub theta1: usize,
    /// Node-removing passes stop once the alive count drops to this value.
    pub target_nodes: usize,
    /// Per-node labels, indexed by node id.
    pub labels: Option<&'a [Option<u32>]>,
}

impl<'a> PassContext<'a> {
    pub fn unbounded() -> Self {
        Self {
            theta1: usize::MAX,
            target_nodes: 0,
            labels: None,
        }
    }

    pub fn ratio_reached(&self, g: &WorkingGraph) -> bool {
        g.node_count() <= self.target_nodes
    }

    pub fn label(&self, u: NodeId) -> Option<u32> {
        self.labels.and_then(|l| l.get(u as usize).copied().flatten())
    }
}

/// A single graph mutation, reported to a [`MoveObserver`] right after it is
/// applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move<'a> {
    /// `node` was (r-relaxed, when `relaxation > 0`) dominated by `into` and removed.
    NodeCollapse {
        node: NodeId,
        into: NodeId,
        relaxation: usize,
    },
    EdgeCollapse {
        x: NodeId,
        y: NodeId,
        dominator: NodeId,
    },
    /// `inserted` edges were added from `apex`, then `node` was removed.
    Cone {
        node: NodeId,
        apex: NodeId,
        inserted: &'a [(NodeId, NodeId)],
    },
}

pub trait MoveObserver {
    fn observe(&mut self, mv: &Move<'_>, g: &WorkingGraph);
}

impl MoveObserver for () {
    fn observe(&mut self, _: &Move<'_>, _: &WorkingGraph) {}
}

impl<F: FnMut(&Move<'_>, &WorkingGraph)> MoveObserver for F {
    fn observe(&mut self, mv: &Move<'_>, g: &WorkingGraph) {
        self(mv, g)
    }
}

/// Which nodes (or edges) a pass starts from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Seeds {
    All,
    /// For node passes: these nodes. For edge passes: every edge incident to them.
    Nodes(Vec<NodeId>),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PassOutcome {
    pub removed: usize,
    /// Nodes whose neighborhood changed during the pass, ascending, alive.
    pub touched: Vec<NodeId>,
}

/// Neighbors of `u` in dominator-scan order: same label as `u` first, then
/// ascending id within each group.
pub fn candidate_order(g: &WorkingGraph, u: NodeId, labels: Option<&[Option<u32>]>) -> Vec<NodeId> {
    let mut nbrs = g.neighbors(u).unwrap_or_default();
    let own = labels.and_then(|l| l.get(u as usize).copied().flatten());
    if let (Some(labels), Some(own)) = (labels, own) {
        // stable: ascending order is kept inside each group
        nbrs.sort_by_key(|&v| labels.get(v as usize).copied().flatten() != Some(own));
    }
    nbrs
}

/// Finds a node `v ∈ N(u)` that (r-relaxed) dominates `u`.
///
/// With `r = 0` this is `N[u] ⊆ N[v]` behind the `deg(v) ≥ deg(u)` filter.
/// With `r > 0` it requires `|N[v]| ≥ |N[u]| > r` and `|N[u] \ N[v]| ≤ r`;
/// `u` itself is always in `N[v]` for adjacent `v`, so the witness set never
/// contains `u`.
pub fn find_node_dominator(
    g: &WorkingGraph,
    u: NodeId,
    r: usize,
    labels: Option<&[Option<u32>]>,
) -> Result<DominanceResult, GraphError> {
    if !g.is_alive(u) {
        return Err(GraphError::InvalidNode(u));
    }
    let deg_u = g.degree(u);
    if deg_u < r {
        return Ok(DominanceResult::NOT_DOMINATED);
    }
    for v in candidate_order(g, u, labels) {
        if g.degree(v) < deg_u {
            continue;
        }
        if let Some(missing) = missing_from_closed(g, u, v, r) {
            return Ok(DominanceResult {
                dominator: Some(v),
                removed_set_size: missing,
            });
        }
    }
    Ok(DominanceResult::NOT_DOMINATED)
}

/// |N[u] \ N[v]| for adjacent u, v, or `None` as soon as it exceeds `limit`.
fn missing_from_closed(g: &WorkingGraph, u: NodeId, v: NodeId, limit: usize) -> Option<usize> {
    let mut missing = 0;
    for w in g.neighbors_unordered(u) {
        if w != v && !g.has_edge(v, w) {
            missing += 1;
            if missing > limit {
                return None;
            }
        }
    }
    Some(missing)
}

/// Finds `v ∈ N(x, y)` with `N(x, y) ⊆ N[v]`. Edges with an empty common
/// neighborhood are never dominated.
pub fn find_edge_dominator(
    g: &WorkingGraph,
    x: NodeId,
    y: NodeId,
) -> Result<DominanceResult, GraphError> {
    let common = g.open_edge_neighborhood(x, y)?;
    Ok(DominanceResult {
        dominator: edge_dominator_among(g, &common),
        removed_set_size: 0,
    })
}

pub(crate) fn edge_dominator_among(g: &WorkingGraph, common: &[NodeId]) -> Option<NodeId> {
    common.iter().copied().find(|&v| {
        g.degree(v) + 1 >= common.len() && common.iter().all(|&w| w == v || g.has_edge(v, w))
    })
}

/// One worklist pass of graph strong collapse (r = 0) or r-relaxed strong
/// collapse (r > 0). Returns the number of nodes removed.
pub fn g_strong_collapse(
    g: &mut WorkingGraph,
    map: &mut SupernodeMap,
    ctx: &PassContext<'_>,
    r: usize,
    seeds: Seeds,
    observer: &mut dyn MoveObserver,
) -> Result<PassOutcome, GraphError> {
    let mut queue = Worklist::new();
    match seeds {
        Seeds::All => g.nodes().for_each(|u| {
            queue.push(u);
        }),
        Seeds::Nodes(nodes) => nodes.into_iter().filter(|&u| g.is_alive(u)).for_each(|u| {
            queue.push(u);
        }),
    }

    let mut outcome = PassOutcome::default();
    let mut touched = FxHashSet::default();
    while !ctx.ratio_reached(g) {
        let Some(u) = queue.pop() else { break };
        if !g.is_alive(u) || g.degree(u) > ctx.theta1 {
            continue;
        }
        let found = find_node_dominator(g, u, r, ctx.labels)?;
        let Some(v) = found.dominator else { continue };
        let nbrs = g.neighbors(u)?;
        g.delete_node(u, map, v)?;
        outcome.removed += 1;
        observer.observe(
            &Move::NodeCollapse {
                node: u,
                into: v,
                relaxation: r,
            },
            g,
        );
        for w in nbrs {
            queue.push(w);
            touched.insert(w);
        }
    }
    outcome.touched = sorted_alive(g, touched);
    Ok(outcome)
}

fn sorted_alive(g: &WorkingGraph, set: FxHashSet<NodeId>) -> Vec<NodeId> {
    let mut out: Vec<NodeId> = set.into_iter().filter(|&u| g.is_alive(u)).collect();
    out.sort_unstable();
    out
}

fn edge_key(x: NodeId, y: NodeId) -> (NodeId, NodeId) {
    if x < y {
        (x, y)
    } else {
        (y, x)
    }
}

fn is_heterophilic(ctx: &PassContext<'_>, (x, y): (NodeId, NodeId)) -> bool {
    match (ctx.label(x), ctx.label(y)) {
        (Some(a), Some(b)) => a != b,
        _ => false,
    }
}

/// One worklist pass of graph edge collapse. Returns the number of edges removed.
///
/// With labels, the initial worklist holds heterophilic edges ahead of
/// homophilic ones. No supernode merging happens here.
pub fn g_edge_collapse(
    g: &mut WorkingGraph,
    ctx: &PassContext<'_>,
    seeds: Seeds,
    observer: &mut dyn MoveObserver,
) -> Result<PassOutcome, GraphError> {
    let mut initial: Vec<(NodeId, NodeId)> = match seeds {
        Seeds::All => g.edges(),
        Seeds::Nodes(nodes) => {
            let mut set = FxHashSet::default();
            for u in nodes.into_iter().filter(|&u| g.is_alive(u)) {
                set.extend(g.neighbors_unordered(u).map(|w| edge_key(u, w)));
            }
            let mut v: Vec<_> = set.into_iter().collect();
            v.sort_unstable();
            v
        }
    };
    if ctx.labels.is_some() {
        initial.sort_by_key(|&e| !is_heterophilic(ctx, e));
    }
    let mut queue = Worklist::new();
    for e in initial {
        queue.push(e);
    }

    let limit = ctx.theta1.saturating_mul(2);
    let mut outcome = PassOutcome::default();
    let mut touched = FxHashSet::default();
    while let Some((x, y)) = queue.pop() {
        if !g.has_edge(x, y) || g.degree(x) + g.degree(y) > limit {
            continue;
        }
        let common = g.common_neighbors(x, y);
        let Some(v) = edge_dominator_among(g, &common) else {
            continue;
        };
        g.delete_edge(x, y)?;
        outcome.removed += 1;
        observer.observe(&Move::EdgeCollapse { x, y, dominator: v }, g);
        touched.insert(x);
        touched.insert(y);
        for end in [x, y] {
            for w in g.neighbors(end)? {
                queue.push(edge_key(end, w));
            }
        }
    }
    outcome.touched = sorted_alive(g, touched);
    Ok(outcome)
}


#[cfg(test)]
mod props {
    use std::collections::BTreeSet;

    use proptest::prelude::*;

    use super::*;
    use crate::generate::arb_graph;
    use crate::oracle::brute_force_dominated_scan;

    fn closed(g: &WorkingGraph, u: NodeId) -> BTreeSet<NodeId> {
        g.closed_neighborhood(u).unwrap().into_iter().collect()
    }

    proptest! {
        #[test]
        fn relaxed_matches_set_difference_oracle(g in arb_graph(12), r in 0usize..4) {
            for u in g.nodes() {
                let nu = closed(&g, u);
                let expected = g.neighbors(u).unwrap().into_iter().find(|&v| {
                    let nv = closed(&g, v);
                    nv.len() >= nu.len() && nu.len() > r && nu.difference(&nv).count() <= r
                });
                let got = find_node_dominator(&g, u, r, None).unwrap();
                prop_assert_eq!(got.dominator, expected);
                if let Some(v) = expected {
                    prop_assert_eq!(got.removed_set_size, nu.difference(&closed(&g, v)).count());
                }
            }
        }

        #[test]
        fn domination_is_monotone_in_r(g in arb_graph(12)) {
            for u in g.nodes() {
                for r in 0..4 {
                    let at_r = find_node_dominator(&g, u, r, None).unwrap().dominated();
                    let deg_ok = g.degree(u) + 1 > r + 1;
                    if at_r && deg_ok {
                        prop_assert!(find_node_dominator(&g, u, r + 1, None).unwrap().dominated());
                    }
                }
            }
        }

        #[test]
        fn closed_and_open_edge_forms_agree(g in arb_graph(12)) {
            for (x, y) in g.edges() {
                let open: BTreeSet<NodeId> = g.common_neighbors(x, y).into_iter().collect();
                let mut closed_edge = open.clone();
                closed_edge.extend([x, y]);
                for &v in &open {
                    let nv = closed(&g, v);
                    prop_assert_eq!(closed_edge.is_subset(&nv), open.is_subset(&nv));
                }
            }
        }

        #[test]
        fn full_strong_collapse_leaves_no_dominated_node(g in arb_graph(16)) {
            let mut g = g;
            let mut map = SupernodeMap::identity(g.node_bound());
            g_strong_collapse(&mut g, &mut map, &PassContext::unbounded(), 0, Seeds::All, &mut ()).unwrap();
            prop_assert!(brute_force_dominated_scan(&g).nodes.is_empty());
            map.check_invariants().unwrap();
            prop_assert_eq!(map.supernode_count(), g.node_count());
        }

        #[test]
        fn full_edge_collapse_leaves_no_dominated_edge(g in arb_graph(16)) {
            let mut g = g;
            g_edge_collapse(&mut g, &PassContext::unbounded(), Seeds::All, &mut ()).unwrap();
            prop_assert!(brute_force_dominated_scan(&g).edges.is_empty());
        }
    }
}
