//! Orchestration: the exact (homotopy-preserving) phase, the approximate
//! phase driven by r-relaxed strong collapse, attribute aggregation onto
//! supernodes, and export-time edge dropping.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collapse::{g_edge_collapse, g_strong_collapse, MoveObserver, PassContext, Seeds};
use crate::coning::neighborhood_coning;
use crate::graph::{AttributeError, AttributedData, GraphError, NodeId, SupernodeMap, WorkingGraph};

/// DropEdge ratio used when exporting for GNN training.
pub const GNN_DROP_EDGE_RATIO: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("theta1 must be at least 1")]
    Theta1,
    #[error("target ratio must lie in (0, 1], got {0}")]
    TargetRatio(f64),
    #[error("drop-edge ratio must lie in [0, 1), got {0}")]
    DropEdgeRatio(f64),
    #[error("{0} must be at least 1")]
    Iterations(&'static str),
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Attributes(#[from] AttributeError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoarseningConfig {
    /// Degree threshold θ₁: nodes (and edges with `deg x + deg y`) above it are skipped.
    pub theta1: usize,
    /// θ₂: a relaxed pass removing fewer nodes than this raises r.
    pub theta2: usize,
    /// Cap on strong/edge alternations in the exact phase.
    pub exact_iters: usize,
    /// Cap on relaxed/edge alternations in the approximate phase.
    pub approx_iters: usize,
    pub target_ratio: f64,
    pub drop_edge_ratio: f64,
    pub rng_seed: u64,
}

impl Default for CoarseningConfig {
    fn default() -> Self {
        Self {
            theta1: usize::MAX,
            theta2: 0,
            exact_iters: 50,
            approx_iters: 1000,
            target_ratio: 1.0,
            drop_edge_ratio: 0.0,
            rng_seed: 0,
        }
    }
}

impl CoarseningConfig {
    /// θ₁ = 4 × average degree and θ₂ = 1 % of the node count.
    pub fn for_graph(g: &WorkingGraph, target_ratio: f64) -> Self {
        Self {
            theta1: default_theta1(g),
            theta2: g.node_count() / 100,
            target_ratio,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.theta1 < 1 {
            return Err(ConfigError::Theta1);
        }
        if !(self.target_ratio > 0.0 && self.target_ratio <= 1.0) {
            return Err(ConfigError::TargetRatio(self.target_ratio));
        }
        if !(0.0..1.0).contains(&self.drop_edge_ratio) {
            return Err(ConfigError::DropEdgeRatio(self.drop_edge_ratio));
        }
        if self.exact_iters < 1 {
            return Err(ConfigError::Iterations("exact_iters"));
        }
        if self.approx_iters < 1 {
            return Err(ConfigError::Iterations("approx_iters"));
        }
        Ok(())
    }

    /// Largest alive count that satisfies `alive / original ≤ c`.
    pub fn target_nodes(&self, original: usize) -> usize {
        (self.target_ratio * original as f64 + 1e-9).floor() as usize
    }
}

pub fn default_theta1(g: &WorkingGraph) -> usize {
    ((4.0 * g.average_degree()).ceil() as usize).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    StrongCollapse,
    EdgeCollapse,
    NeighborhoodConing,
    RelaxedStrongCollapse,
    DropEdge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseEntry {
    pub phase: Phase,
    pub nodes_removed: usize,
    /// Edges deleted explicitly (edge collapse, coning cleanup, DropEdge);
    /// edges that disappear with a removed node are not counted.
    pub edges_removed: usize,
    pub edges_inserted: usize,
    pub r_value: usize,
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestWarnings {
    pub self_loops: usize,
    pub duplicate_edges: usize,
    /// Nodes that appear only in the feature file and were added isolated.
    pub feature_only_nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoarseningReport {
    pub config: CoarseningConfig,
    pub original_nodes: usize,
    pub original_edges: usize,
    pub input_d_max: usize,
    pub input_d_bar: f64,
    pub phase_log: Vec<PhaseEntry>,
    /// Alive nodes when the exact phase finished.
    pub exact_nodes: usize,
    pub alive_nodes: usize,
    pub alive_edges: usize,
    pub final_ratio: f64,
    pub reached: bool,
    pub d_max: usize,
    pub d_bar: f64,
    pub ingest_warnings: IngestWarnings,
    pub warnings: Vec<String>,
    pub total_time_ms: f64,
}

impl CoarseningReport {
    fn start(g: &WorkingGraph, config: &CoarseningConfig) -> Self {
        Self {
            config: config.clone(),
            original_nodes: g.node_count(),
            original_edges: g.edge_count(),
            input_d_max: g.max_degree(),
            input_d_bar: g.average_degree(),
            phase_log: Vec::new(),
            exact_nodes: g.node_count(),
            alive_nodes: g.node_count(),
            alive_edges: g.edge_count(),
            final_ratio: 1.0,
            reached: false,
            d_max: 0,
            d_bar: 0.0,
            ingest_warnings: IngestWarnings::default(),
            warnings: Vec::new(),
            total_time_ms: 0.0,
        }
    }

    fn finish(&mut self, g: &WorkingGraph) {
        self.alive_nodes = g.node_count();
        self.alive_edges = g.edge_count();
        self.final_ratio = if self.original_nodes == 0 {
            1.0
        } else {
            g.node_count() as f64 / self.original_nodes as f64
        };
        self.reached = g.node_count() <= self.config.target_nodes(self.original_nodes);
        self.d_max = g.max_degree();
        self.d_bar = g.average_degree();
    }

    /// Copy with every wall-clock field zeroed, for determinism comparisons.
    pub fn without_timing(&self) -> Self {
        let mut r = self.clone();
        r.total_time_ms = 0.0;
        for e in &mut r.phase_log {
            e.wall_time_ms = 0.0;
        }
        r
    }

    pub fn nodes_removed(&self) -> usize {
        self.phase_log.iter().map(|e| e.nodes_removed).sum()
    }

    /// Sum of nodes removed in phases of one kind.
    pub fn removed_in(&self, phase: Phase) -> usize {
        self.phase_log
            .iter()
            .filter(|e| e.phase == phase)
            .map(|e| e.nodes_removed)
            .sum()
    }
}

fn elapsed_ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn entry(phase: Phase, t: Instant) -> PhaseEntry {
    PhaseEntry {
        phase,
        nodes_removed: 0,
        edges_removed: 0,
        edges_inserted: 0,
        r_value: 0,
        wall_time_ms: elapsed_ms(t),
    }
}

/// Strong/edge collapse alternation to a fixed point (or `exact_iters`
/// alternations), then one coning pass; repeated while coning removes nodes,
/// since a coning move can expose new dominated edges.
///
/// After the first alternation, strong collapse only revisits endpoints of
/// edges removed by the previous edge pass, and edge collapse only revisits
/// edges incident to nodes that lost a neighbor in the preceding strong pass.
pub fn exact_coarsening(
    g: &mut WorkingGraph,
    map: &mut SupernodeMap,
    config: &CoarseningConfig,
    labels: Option<&[Option<u32>]>,
    log: &mut Vec<PhaseEntry>,
    observer: &mut dyn MoveObserver,
) -> Result<(), GraphError> {
    let ctx = PassContext {
        theta1: config.theta1,
        target_nodes: config.target_nodes(map.original_count()),
        labels,
    };
    let mut round = 0;
    while !ctx.ratio_reached(g) {
        let mut node_seeds = Seeds::All;
        for iter in 0..config.exact_iters {
            let t = Instant::now();
            let strong = g_strong_collapse(g, map, &ctx, 0, node_seeds, observer)?;
            log.push(PhaseEntry {
                nodes_removed: strong.removed,
                ..entry(Phase::StrongCollapse, t)
            });
            if ctx.ratio_reached(g) {
                return Ok(());
            }
            let edge_seeds = if iter == 0 {
                Seeds::All
            } else {
                Seeds::Nodes(strong.touched)
            };
            let t = Instant::now();
            let edge = g_edge_collapse(g, &ctx, edge_seeds, observer)?;
            log.push(PhaseEntry {
                edges_removed: edge.removed,
                ..entry(Phase::EdgeCollapse, t)
            });
            // strong collapse ran to exhaustion and the edge pass saw every
            // edge it could have changed, so no edge removal means a fixed point
            if edge.removed == 0 {
                break;
            }
            node_seeds = Seeds::Nodes(edge.touched);
        }

        let t = Instant::now();
        let cone = neighborhood_coning(g, map, &ctx, observer)?;
        log.push(PhaseEntry {
            nodes_removed: cone.removed,
            edges_removed: cone.cleaned,
            edges_inserted: cone.inserted,
            ..entry(Phase::NeighborhoodConing, t)
        });
        round += 1;
        if cone.removed == 0 || round >= config.exact_iters {
            break;
        }
    }
    Ok(())
}

/// Relaxation level carried across approximate-phase passes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RelaxState {
    pub r: usize,
    /// Revisit every node on the next pass (set when r changes).
    pub reseed: bool,
    /// Nodes to revisit when not reseeding.
    pub pending: Vec<NodeId>,
}

impl RelaxState {
    pub fn new() -> Self {
        Self {
            r: 0,
            reseed: true,
            pending: Vec::new(),
        }
    }
}

/// One strong collapse pass at relaxation `state.r`; raises r for the next
/// pass when fewer than θ₂ nodes were removed.
pub fn relaxed_strong_collapse(
    g: &mut WorkingGraph,
    map: &mut SupernodeMap,
    config: &CoarseningConfig,
    state: &mut RelaxState,
    labels: Option<&[Option<u32>]>,
    observer: &mut dyn MoveObserver,
) -> Result<(usize, Vec<NodeId>), GraphError> {
    let ctx = PassContext {
        theta1: config.theta1,
        target_nodes: config.target_nodes(map.original_count()),
        labels,
    };
    let seeds = if state.reseed {
        Seeds::All
    } else {
        Seeds::Nodes(std::mem::take(&mut state.pending))
    };
    let out = g_strong_collapse(g, map, &ctx, state.r, seeds, observer)?;
    if out.removed < config.theta2 {
        state.r += 1;
        state.reseed = true;
    } else {
        state.reseed = false;
    }
    Ok((out.removed, out.touched))
}

/// Relaxed strong collapse alternated with edge collapse until the target
/// ratio is met, `approx_iters` runs out, or no move is possible at any
/// larger r. Returns whether the ratio was reached.
pub fn approximate_coarsening(
    g: &mut WorkingGraph,
    map: &mut SupernodeMap,
    config: &CoarseningConfig,
    labels: Option<&[Option<u32>]>,
    log: &mut Vec<PhaseEntry>,
    observer: &mut dyn MoveObserver,
) -> Result<bool, GraphError> {
    let ctx = PassContext {
        theta1: config.theta1,
        target_nodes: config.target_nodes(map.original_count()),
        labels,
    };
    let mut state = RelaxState::new();
    for iter in 0..config.approx_iters {
        if ctx.ratio_reached(g) {
            break;
        }
        let r = state.r;
        let t = Instant::now();
        let (removed, touched) = relaxed_strong_collapse(g, map, config, &mut state, labels, observer)?;
        log.push(PhaseEntry {
            nodes_removed: removed,
            r_value: r,
            ..entry(Phase::RelaxedStrongCollapse, t)
        });
        if ctx.ratio_reached(g) {
            break;
        }
        let seeds = if iter == 0 {
            Seeds::All
        } else {
            Seeds::Nodes(touched)
        };
        let t = Instant::now();
        let edge = g_edge_collapse(g, &ctx, seeds, observer)?;
        log.push(PhaseEntry {
            edges_removed: edge.removed,
            r_value: r,
            ..entry(Phase::EdgeCollapse, t)
        });
        if removed == 0 && edge.removed == 0 && state.r > g.max_degree() {
            // |N[u]| > r is now impossible for every node
            break;
        }
        state.pending.extend(edge.touched);
    }
    Ok(ctx.ratio_reached(g))
}

/// Aggregated attributes, one row per supernode in ascending id order.
#[derive(Debug, Clone, PartialEq)]
pub struct SupernodeAttributes {
    pub ids: Vec<NodeId>,
    pub data: AttributedData,
}

impl SupernodeAttributes {
    /// Labels indexed by node id (`None` for non-supernodes).
    pub fn labels_by_node(&self, bound: usize) -> Option<Vec<Option<u32>>> {
        let labels = self.data.labels()?;
        let mut out = vec![None; bound];
        for (&id, &l) in self.ids.iter().zip(labels) {
            out[id as usize] = l;
        }
        Some(out)
    }
}

/// Mean member feature and modal member label (ties to the lowest label;
/// unlabeled members do not vote) for every supernode.
pub fn aggregate_attributes(map: &SupernodeMap, attributed: &AttributedData) -> SupernodeAttributes {
    let ids: Vec<NodeId> = map.supernodes().collect();
    let features = attributed.has_features().then(|| {
        ids.iter()
            .map(|&s| {
                let members = map.members(s);
                let mut sum = vec![0.0; attributed.dim()];
                for &m in &members {
                    for (acc, x) in sum.iter_mut().zip(attributed.feature(m as usize)) {
                        *acc += x;
                    }
                }
                let k = members.len() as f64;
                sum.iter_mut().for_each(|x| *x /= k);
                sum
            })
            .collect::<Vec<_>>()
    });
    let labels = attributed.labels().map(|_| {
        ids.iter()
            .map(|&s| modal_label(map.members(s).iter().filter_map(|&m| attributed.label(m as usize))))
            .collect::<Vec<_>>()
    });
    let data = AttributedData::new(features, labels).expect("rows share the input dimension");
    SupernodeAttributes { ids, data }
}

fn modal_label(labels: impl Iterator<Item = u32>) -> Option<u32> {
    let mut sorted: Vec<u32> = labels.collect();
    sorted.sort_unstable();
    let mut best: Option<(usize, u32)> = None;
    for chunk in sorted.chunk_by(|a, b| a == b) {
        // strict > keeps the lowest label among equal counts
        if best.is_none_or(|(count, _)| chunk.len() > count) {
            best = Some((chunk.len(), chunk[0]));
        }
    }
    best.map(|(_, l)| l)
}

/// Deletes ⌊ratio · |E|⌋ edges, sampled uniformly from heterophilic edges
/// first and from the rest only when that pool is too small. Returns the
/// deleted edges in ascending order. Connectivity is not protected.
pub fn drop_edges(
    g: &mut WorkingGraph,
    labels: Option<&[Option<u32>]>,
    ratio: f64,
    seed: u64,
) -> Result<Vec<(NodeId, NodeId)>, GraphError> {
    let edges = g.edges();
    let quota = ((ratio * edges.len() as f64) + 1e-9).floor() as usize;
    if quota == 0 {
        return Ok(Vec::new());
    }
    let label = |u: NodeId| labels.and_then(|l| l.get(u as usize).copied().flatten());
    let (mut hetero, mut homo): (Vec<_>, Vec<_>) = edges.into_iter().partition(|&(x, y)| {
        matches!((label(x), label(y)), (Some(a), Some(b)) if a != b)
    });
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<(NodeId, NodeId)> = if hetero.len() >= quota {
        hetero.partial_shuffle(&mut rng, quota).0.to_vec()
    } else {
        let rest = quota - hetero.len();
        let extra = homo.partial_shuffle(&mut rng, rest).0.to_vec();
        hetero.extend(extra);
        hetero
    };
    chosen.sort_unstable();
    for &(x, y) in &chosen {
        g.delete_edge(x, y)?;
    }
    Ok(chosen)
}

#[derive(Debug, Clone)]
pub struct CoarseningResult {
    pub graph: WorkingGraph,
    pub map: SupernodeMap,
    pub attributes: SupernodeAttributes,
    pub dropped: Vec<(NodeId, NodeId)>,
    pub report: CoarseningReport,
}

/// Full pipeline: exact phase, approximate phase if the ratio is not met,
/// attribute aggregation, then DropEdge when configured.
pub fn coarsen(
    graph: WorkingGraph,
    attributed: &AttributedData,
    config: &CoarseningConfig,
) -> Result<CoarseningResult, PipelineError> {
    coarsen_observed(graph, attributed, config, &mut ())
}

pub fn coarsen_observed(
    mut graph: WorkingGraph,
    attributed: &AttributedData,
    config: &CoarseningConfig,
    observer: &mut dyn MoveObserver,
) -> Result<CoarseningResult, PipelineError> {
    config.validate()?;
    let n = graph.node_bound();
    if attributed.has_features() && attributed.rows() != n {
        return Err(AttributeError::LengthMismatch {
            what: "features",
            expected: n,
            found: attributed.rows(),
        }
        .into());
    }
    if let Some(l) = attributed.labels() {
        if l.len() != n {
            return Err(AttributeError::LengthMismatch {
                what: "labels",
                expected: n,
                found: l.len(),
            }
            .into());
        }
    }

    let start = Instant::now();
    let mut report = CoarseningReport::start(&graph, config);
    let mut map = SupernodeMap::identity(n);
    let labels = attributed.labels();

    exact_coarsening(&mut graph, &mut map, config, labels, &mut report.phase_log, observer)?;
    report.exact_nodes = graph.node_count();
    let target = config.target_nodes(n);
    if graph.node_count() > target {
        let reached = approximate_coarsening(
            &mut graph,
            &mut map,
            config,
            labels,
            &mut report.phase_log,
            observer,
        )?;
        if !reached {
            report.warnings.push(format!(
                "target ratio {} not reached within {} approximate iterations: {} of {} nodes remain",
                config.target_ratio,
                config.approx_iters,
                graph.node_count(),
                n
            ));
        }
    }

    let attributes = aggregate_attributes(&map, attributed);
    let mut dropped = Vec::new();
    if config.drop_edge_ratio > 0.0 {
        let t = Instant::now();
        let by_node = attributes.labels_by_node(n);
        dropped = drop_edges(&mut graph, by_node.as_deref(), config.drop_edge_ratio, config.rng_seed)?;
        report.phase_log.push(PhaseEntry {
            edges_removed: dropped.len(),
            ..entry(Phase::DropEdge, t)
        });
    }

    report.finish(&graph);
    report.total_time_ms = elapsed_ms(start);
    Ok(CoarseningResult {
        graph,
        map,
        attributes,
        dropped,
        report,
    })
}
