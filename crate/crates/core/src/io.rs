//! Edge-list and CSV ingestion, external id mapping, and output files.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rustc_hash::{FxHashMap, FxHashSet};
use thiserror::Error;

use crate::graph::{AttributeError, AttributedData, GraphError, NodeId, WorkingGraph};
use crate::pipeline::{CoarseningReport, CoarseningResult, IngestWarnings};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: u64,
        msg: String,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: node {id} has no feature row")]
    MissingFeatures { path: PathBuf, id: String },
    #[error(transparent)]
    Attributes(#[from] AttributeError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("report serialization: {0}")]
    Json(#[from] serde_json::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_owned(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> IoError + '_ {
    move |source| IoError::Csv {
        path: path.to_owned(),
        source,
    }
}

/// Dense internal ids assigned in order of first appearance.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdMap {
    external: Vec<String>,
    index: FxHashMap<String, NodeId>,
}

impl IdMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.external.len()
    }

    pub fn is_empty(&self) -> bool {
        self.external.is_empty()
    }

    pub fn intern(&mut self, id: &str) -> NodeId {
        if let Some(&u) = self.index.get(id) {
            return u;
        }
        let u = self.external.len() as NodeId;
        self.external.push(id.to_owned());
        self.index.insert(id.to_owned(), u);
        u
    }

    pub fn get(&self, id: &str) -> Option<NodeId> {
        self.index.get(id).copied()
    }

    pub fn external(&self, u: NodeId) -> &str {
        &self.external[u as usize]
    }
}

/// Parses "u v" lines; '#' and '%' start comment lines. Self-loops and
/// repeated edges (in either orientation) are dropped and counted.
pub fn parse_edge_list(
    reader: impl BufRead,
    path: &Path,
    ids: &mut IdMap,
    warnings: &mut IngestWarnings,
) -> Result<Vec<(NodeId, NodeId)>, IoError> {
    let mut seen = FxHashSet::default();
    let mut edges = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('%') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let [a, b] = tokens[..] else {
            return Err(IoError::Parse {
                path: path.to_owned(),
                line: i as u64 + 1,
                msg: format!("expected two node ids, found {} fields", tokens.len()),
            });
        };
        let (x, y) = (ids.intern(a), ids.intern(b));
        if x == y {
            warnings.self_loops += 1;
            continue;
        }
        if seen.insert((x.min(y), x.max(y))) {
            edges.push((x, y));
        } else {
            warnings.duplicate_edges += 1;
        }
    }
    Ok(edges)
}

fn has_header(first: &csv::StringRecord) -> bool {
    first.iter().skip(1).any(|f| f.trim().parse::<f64>().is_err())
}

fn record_line(r: &csv::StringRecord) -> u64 {
    r.position().map_or(0, |p| p.line())
}

/// Rows of `external_id,x1,..,xd`; an optional header row is detected by a
/// non-numeric value column. Ids unseen in the edge list become new nodes.
fn read_features(
    path: &Path,
    ids: &mut IdMap,
    warnings: &mut IngestWarnings,
) -> Result<FxHashMap<NodeId, Vec<f64>>, IoError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(csv_err(path))?;
    let mut rows = FxHashMap::default();
    let mut dim = None;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        if i == 0 && has_header(&rec) {
            continue;
        }
        let line = record_line(&rec);
        let parse_err = |msg: String| IoError::Parse {
            path: path.to_owned(),
            line,
            msg,
        };
        let id = rec.get(0).filter(|s| !s.is_empty()).ok_or_else(|| parse_err("missing id".into()))?;
        let values = rec
            .iter()
            .skip(1)
            .map(|f| f.parse::<f64>().map_err(|e| parse_err(format!("bad feature {f:?}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(parse_err(format!(
                    "feature dimension mismatch: expected {d}, found {}",
                    values.len()
                )))
            }
            _ => {}
        }
        let known = ids.get(id).is_some();
        let u = ids.intern(id);
        if !known {
            warnings.feature_only_nodes += 1;
        }
        if rows.insert(u, values).is_some() {
            return Err(parse_err(format!("duplicate feature row for {id}")));
        }
    }
    Ok(rows)
}

/// Rows of `external_id,label` with an optional header. Every id must be a
/// known node; nodes without a row stay unlabeled.
fn read_labels(path: &Path, ids: &IdMap) -> Result<Vec<Option<u32>>, IoError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(csv_err(path))?;
    let mut labels = vec![None; ids.len()];
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        if i == 0 && has_header(&rec) {
            continue;
        }
        let line = record_line(&rec);
        let parse_err = |msg: String| IoError::Parse {
            path: path.to_owned(),
            line,
            msg,
        };
        if rec.len() != 2 {
            return Err(parse_err(format!("expected id,label, found {} fields", rec.len())));
        }
        let u = ids
            .get(&rec[0])
            .ok_or_else(|| parse_err(format!("unknown node {}", &rec[0])))?;
        let label = rec[1]
            .parse::<u32>()
            .map_err(|e| parse_err(format!("bad label {:?}: {e}", &rec[1])))?;
        labels[u as usize] = Some(label);
    }
    Ok(labels)
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub graph: WorkingGraph,
    pub attributes: AttributedData,
    pub ids: IdMap,
    pub warnings: IngestWarnings,
}

pub fn ingest(
    edge_path: &Path,
    features_path: Option<&Path>,
    labels_path: Option<&Path>,
) -> Result<Ingested, IoError> {
    let file = File::open(edge_path).map_err(io_err(edge_path))?;
    let mut ids = IdMap::new();
    let mut warnings = IngestWarnings::default();
    let edges = parse_edge_list(BufReader::new(file), edge_path, &mut ids, &mut warnings)?;

    let features = match features_path {
        Some(p) => {
            let mut rows = read_features(p, &mut ids, &mut warnings)?;
            let mut ordered = Vec::with_capacity(ids.len());
            for u in 0..ids.len() as NodeId {
                let row = rows.remove(&u).ok_or_else(|| IoError::MissingFeatures {
                    path: p.to_owned(),
                    id: ids.external(u).to_owned(),
                })?;
                ordered.push(row);
            }
            Some(ordered)
        }
        None => None,
    };
    let labels = labels_path.map(|p| read_labels(p, &ids)).transpose()?;

    let graph = WorkingGraph::from_edges(ids.len(), &edges)?;
    let attributes = AttributedData::new(features, labels)?;
    Ok(Ingested {
        graph,
        attributes,
        ids,
        warnings,
    })
}

/// Paths of the files written by [`write_outputs`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputPaths {
    pub edges: PathBuf,
    pub nodes: PathBuf,
    pub partition: PathBuf,
    pub features: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub report: PathBuf,
}

/// Writes `edges.txt`, `nodes.csv` (internal to external id),
/// `partition.csv`, `features.csv` / `labels.csv` when attributes exist, and
/// `report.json`. Everything except `nodes.csv` is keyed by external ids.
pub fn write_outputs(dir: &Path, ids: &IdMap, result: &CoarseningResult) -> Result<OutputPaths, IoError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let paths = OutputPaths {
        edges: dir.join("edges.txt"),
        nodes: dir.join("nodes.csv"),
        partition: dir.join("partition.csv"),
        features: result
            .attributes
            .data
            .has_features()
            .then(|| dir.join("features.csv")),
        labels: result.attributes.data.labels().map(|_| dir.join("labels.csv")),
        report: dir.join("report.json"),
    };

    let file = File::create(&paths.edges).map_err(io_err(&paths.edges))?;
    let mut w = BufWriter::new(file);
    for (x, y) in result.graph.edges() {
        writeln!(w, "{} {}", ids.external(x), ids.external(y)).map_err(io_err(&paths.edges))?;
    }
    w.flush().map_err(io_err(&paths.edges))?;

    let mut w = csv::Writer::from_path(&paths.nodes).map_err(csv_err(&paths.nodes))?;
    w.write_record(["internal_id", "external_id"]).map_err(csv_err(&paths.nodes))?;
    for u in 0..ids.len() as NodeId {
        w.write_record([u.to_string().as_str(), ids.external(u)])
            .map_err(csv_err(&paths.nodes))?;
    }
    w.flush().map_err(io_err(&paths.nodes))?;

    let assignment = result.map.assignment();
    let mut w = csv::Writer::from_path(&paths.partition).map_err(csv_err(&paths.partition))?;
    w.write_record(["external_id", "supernode_external_id"])
        .map_err(csv_err(&paths.partition))?;
    for (u, &s) in assignment.iter().enumerate() {
        w.write_record([ids.external(u as NodeId), ids.external(s)])
            .map_err(csv_err(&paths.partition))?;
    }
    w.flush().map_err(io_err(&paths.partition))?;

    let data = &result.attributes.data;
    if let Some(p) = &paths.features {
        let mut w = csv::Writer::from_path(p).map_err(csv_err(p))?;
        let mut header = vec!["supernode_external_id".to_owned()];
        header.extend((0..data.dim()).map(|k| format!("x{k}")));
        w.write_record(&header).map_err(csv_err(p))?;
        for (i, &s) in result.attributes.ids.iter().enumerate() {
            let mut row = vec![ids.external(s).to_owned()];
            row.extend(data.feature(i).iter().map(f64::to_string));
            w.write_record(&row).map_err(csv_err(p))?;
        }
        w.flush().map_err(io_err(p))?;
    }
    if let Some(p) = &paths.labels {
        let mut w = csv::Writer::from_path(p).map_err(csv_err(p))?;
        w.write_record(["supernode_external_id", "label"]).map_err(csv_err(p))?;
        for (i, &s) in result.attributes.ids.iter().enumerate() {
            let label = data.label(i).map(|l| l.to_string()).unwrap_or_default();
            w.write_record([ids.external(s), label.as_str()]).map_err(csv_err(p))?;
        }
        w.flush().map_err(io_err(p))?;
    }

    let json = serde_json::to_string_pretty(&result.report)?;
    fs::write(&paths.report, json + "\n").map_err(io_err(&paths.report))?;
    Ok(paths)
}

/// Human-readable summary of a report.
pub fn render_text(report: &CoarseningReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "nodes {} -> {} (ratio {:.4}, target {}, {})",
        report.original_nodes,
        report.alive_nodes,
        report.final_ratio,
        report.config.target_ratio,
        if report.reached { "reached" } else { "not reached" }
    );
    let _ = writeln!(s, "edges {} -> {}", report.original_edges, report.alive_edges);
    let _ = writeln!(
        s,
        "d_max {} -> {}, d_bar {:.3} -> {:.3}",
        report.input_d_max, report.d_max, report.input_d_bar, report.d_bar
    );
    let _ = writeln!(
        s,
        "theta1 {}, theta2 {}, exact phase left {} nodes",
        report.config.theta1, report.config.theta2, report.exact_nodes
    );
    let w = &report.ingest_warnings;
    if w.self_loops + w.duplicate_edges + w.feature_only_nodes > 0 {
        let _ = writeln!(
            s,
            "ingest: {} self-loops, {} duplicate edges, {} feature-only nodes",
            w.self_loops, w.duplicate_edges, w.feature_only_nodes
        );
    }
    let _ = writeln!(s, "{:<26}{:>10}{:>10}{:>10}{:>6}{:>12}", "phase", "nodes", "edges-", "edges+", "r", "ms");
    for e in &report.phase_log {
        let _ = writeln!(
            s,
            "{:<26}{:>10}{:>10}{:>10}{:>6}{:>12.3}",
            format!("{:?}", e.phase),
            e.nodes_removed,
            e.edges_removed,
            e.edges_inserted,
            e.r_value,
            e.wall_time_ms
        );
    }
    for warning in &report.warnings {
        let _ = writeln!(s, "warning: {warning}");
    }
    let _ = writeln!(s, "total {:.3} ms", report.total_time_ms);
    s
}
