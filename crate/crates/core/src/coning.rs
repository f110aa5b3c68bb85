//! Neighborhood coning: insert dominated edges from an apex `v` to the rest of
//! `N(u)` so that `u` becomes dominated by `v`, then remove `u`.
//!
//! Each insertion is the inverse of an edge collapse, so a coning move keeps
//! the clique complex's homotopy type.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rustc_hash::FxHashSet;

use crate::collapse::{
    candidate_order, edge_dominator_among, Move, MoveObserver, PassContext,
};
use crate::graph::{GraphError, NodeId, SupernodeMap, WorkingGraph};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConingPlan {
    pub target: NodeId,
    pub apex: NodeId,
    /// Edges `(apex, w)` to insert, in the order they were validated.
    pub insert_list: Vec<(NodeId, NodeId)>,
}

/// Whether `(apex, w)` would be a dominated edge once it and every edge
/// `(apex, a)` for `a` in `accepted` are added to `g`.
///
/// All virtual edges share the apex, and the apex is never in its own common
/// neighborhood, so adjacency among common neighbors is read from `g` alone.
fn insertion_dominated(g: &WorkingGraph, apex: NodeId, w: NodeId, accepted: &[NodeId]) -> bool {
    let mut common = g.common_neighbors(apex, w);
    for &a in accepted {
        if g.has_edge(a, w) {
            common.push(a);
        }
    }
    common.sort_unstable();
    common.dedup();
    edge_dominator_among(g, &common).is_some()
}

/// Finds the first apex in [`candidate_order`] for which every missing edge
/// `(v, w)`, `w ∈ N(u) \ {v}`, can be inserted as a dominated edge.
pub fn plan_coning(
    g: &WorkingGraph,
    u: NodeId,
    labels: Option<&[Option<u32>]>,
) -> Result<Option<ConingPlan>, GraphError> {
    let nbrs = g.neighbors(u)?;
    'apex: for v in candidate_order(g, u, labels) {
        let mut accepted: Vec<NodeId> = Vec::new();
        for &w in &nbrs {
            if w == v || g.has_edge(v, w) {
                continue;
            }
            if insertion_dominated(g, v, w, &accepted) {
                accepted.push(w);
            } else {
                continue 'apex;
            }
        }
        return Ok(Some(ConingPlan {
            target: u,
            apex: v,
            insert_list: accepted.into_iter().map(|w| (v, w)).collect(),
        }));
    }
    Ok(None)
}

/// Min-priority queue of nodes keyed by degree, with stale-entry skipping in
/// place of decrease-key. Ties pop in ascending id order.
#[derive(Debug, Clone, Default)]
pub struct DegreeQueue {
    heap: BinaryHeap<Reverse<(usize, NodeId)>>,
    // degree recorded by the live entry of each enqueued node
    queued: Vec<Option<usize>>,
}

impl DegreeQueue {
    pub fn new(g: &WorkingGraph) -> Self {
        let mut q = Self {
            heap: BinaryHeap::with_capacity(g.node_count()),
            queued: vec![None; g.node_bound()],
        };
        for u in g.nodes() {
            q.push(u, g.degree(u));
        }
        q
    }

    fn push(&mut self, u: NodeId, degree: usize) {
        self.queued[u as usize] = Some(degree);
        self.heap.push(Reverse((degree, u)));
    }

    pub fn contains(&self, u: NodeId) -> bool {
        self.queued.get(u as usize).is_some_and(Option::is_some)
    }

    /// Re-keys `u` with its current degree if it is still enqueued.
    pub fn update(&mut self, g: &WorkingGraph, u: NodeId) {
        if !self.contains(u) {
            return;
        }
        if g.is_alive(u) {
            let d = g.degree(u);
            if self.queued[u as usize] != Some(d) {
                self.push(u, d);
            }
        } else {
            self.queued[u as usize] = None;
        }
    }

    pub fn pop(&mut self, g: &WorkingGraph) -> Option<NodeId> {
        while let Some(Reverse((d, u))) = self.heap.pop() {
            if self.queued[u as usize] != Some(d) {
                continue;
            }
            self.queued[u as usize] = None;
            if g.is_alive(u) {
                debug_assert_eq!(g.degree(u), d, "degree changed without update");
                return Some(u);
            }
        }
        None
    }

    /// Enqueued nodes with their recorded degree (for consistency checks).
    pub fn enqueued(&self) -> impl Iterator<Item = (NodeId, usize)> + '_ {
        self.queued
            .iter()
            .enumerate()
            .filter_map(|(u, d)| d.map(|d| (u as NodeId, d)))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConingOutcome {
    pub removed: usize,
    pub inserted: usize,
    /// Inserted edges deleted again because another node dominates them.
    pub cleaned: usize,
    pub touched: Vec<NodeId>,
}

/// One pass of neighborhood coning over all alive nodes in ascending degree.
///
/// After each successful move, every inserted edge that is still dominated
/// (necessarily by a node other than the removed one) is collapsed again and
/// reported as an [`Move::EdgeCollapse`].
pub fn neighborhood_coning(
    g: &mut WorkingGraph,
    map: &mut SupernodeMap,
    ctx: &PassContext<'_>,
    observer: &mut dyn MoveObserver,
) -> Result<ConingOutcome, GraphError> {
    let mut queue = DegreeQueue::new(g);
    let mut outcome = ConingOutcome::default();
    let mut touched = FxHashSet::default();
    while !ctx.ratio_reached(g) {
        let Some(u) = queue.pop(g) else { break };
        if g.degree(u) > ctx.theta1 {
            continue;
        }
        let Some(plan) = plan_coning(g, u, ctx.labels)? else {
            continue;
        };
        let nbrs = g.neighbors(u)?;
        for &(v, w) in &plan.insert_list {
            g.insert_edge(v, w)?;
        }
        g.delete_node(u, map, plan.apex)?;
        outcome.removed += 1;
        outcome.inserted += plan.insert_list.len();
        observer.observe(
            &Move::Cone {
                node: u,
                apex: plan.apex,
                inserted: &plan.insert_list,
            },
            g,
        );
        for &(v, w) in &plan.insert_list {
            if !g.has_edge(v, w) {
                continue;
            }
            if let Some(d) = edge_dominator_among(g, &g.common_neighbors(v, w)) {
                g.delete_edge(v, w)?;
                outcome.cleaned += 1;
                observer.observe(&Move::EdgeCollapse { x: v, y: w, dominator: d }, g);
            }
        }
        for w in nbrs {
            queue.update(g, w);
            touched.insert(w);
        }
    }
    let mut t: Vec<NodeId> = touched.into_iter().filter(|&u| g.is_alive(u)).collect();
    t.sort_unstable();
    outcome.touched = t;
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collapse::find_edge_dominator;
    use crate::generate;

    #[test]
    fn degree_two_node_on_long_cycle_is_coned_with_its_chord() {
        let g = generate::cycle(5);
        let plan = plan_coning(&g, 0, None).unwrap().unwrap();
        assert_eq!(plan.apex, 1);
        assert_eq!(plan.insert_list, vec![(1, 4)]);
    }

    #[test]
    fn triangle_needs_no_insertions() {
        let g = WorkingGraph::from_edges(4, &[(0, 1), (0, 2), (1, 2), (2, 3)]).unwrap();
        let plan = plan_coning(&g, 0, None).unwrap().unwrap();
        assert_eq!(plan.apex, 1);
        assert!(plan.insert_list.is_empty());
    }

    #[test]
    fn c4_has_no_plan() {
        let g = generate::cycle(4);
        for u in 0..4 {
            assert_eq!(plan_coning(&g, u, None).unwrap(), None);
        }
    }

    #[test]
    fn planned_insertion_is_an_inverse_edge_collapse() {
        let g = generate::cycle(7);
        let plan = plan_coning(&g, 3, None).unwrap().unwrap();
        let (v, w) = plan.insert_list[0];
        let mut h = g.clone();
        h.insert_edge(v, w).unwrap();
        assert!(find_edge_dominator(&h, v, w).unwrap().dominated());
        h.delete_edge(v, w).unwrap();
        assert_eq!(h, g);
    }

    #[test]
    fn cycles_cone_down_to_c4() {
        for n in 5..12 {
            let mut g = generate::cycle(n);
            let mut map = SupernodeMap::identity(n);
            let out =
                neighborhood_coning(&mut g, &mut map, &PassContext::unbounded(), &mut ()).unwrap();
            assert_eq!(out.removed, n - 4, "C{n}");
            assert_eq!(g.node_count(), 4);
            assert_eq!(g.edge_count(), 4);
            g.check_invariants().unwrap();
            map.check_invariants().unwrap();
        }
    }

    #[test]
    fn c4_is_untouched() {
        let mut g = generate::cycle(4);
        let mut map = SupernodeMap::identity(4);
        let out =
            neighborhood_coning(&mut g, &mut map, &PassContext::unbounded(), &mut ()).unwrap();
        assert_eq!(out.removed, 0);
        assert_eq!(g, generate::cycle(4));
    }

    #[test]
    fn queue_pops_minimum_current_degree() {
        let mut g = generate::barabasi_albert(60, 2, 4);
        let mut map = SupernodeMap::identity(60);
        let mut q = DegreeQueue::new(&g);
        let mut steps = 0;
        loop {
            let min = q.enqueued().map(|(u, _)| (g.degree(u), u)).min();
            let Some(u) = q.pop(&g) else { break };
            assert_eq!(Some((g.degree(u), u)), min);
            // mutate: merge u into its lowest neighbor, then re-key the neighbors
            if let Ok(nbrs) = g.neighbors(u) {
                if steps % 3 == 0 && !nbrs.is_empty() {
                    g.delete_node(u, &mut map, nbrs[0]).unwrap();
                    for w in nbrs {
                        q.update(&g, w);
                    }
                }
            }
            steps += 1;
        }
        assert!(q.enqueued().next().is_none());
    }
}
