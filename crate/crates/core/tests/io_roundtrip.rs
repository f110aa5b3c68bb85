use std::fs;
use std::path::Path;

use topocoarse::generate;
use topocoarse::io::{ingest, write_outputs};
use topocoarse::pipeline::{coarsen, CoarseningConfig};
use topocoarse::{AttributedData, NodeId};

fn write_edges(path: &Path, edges: &[(NodeId, NodeId)], ext: impl Fn(NodeId) -> String) {
    let text: String = edges
        .iter()
        .map(|&(x, y)| format!("{} {}\n", ext(x), ext(y)))
        .collect();
    fs::write(path, text).unwrap();
}

fn canonical(edges: impl IntoIterator<Item = (String, String)>) -> Vec<(String, String)> {
    let mut v: Vec<_> = edges
        .into_iter()
        .map(|(a, b)| if a <= b { (a, b) } else { (b, a) })
        .collect();
    v.sort();
    v
}

fn read_pairs(path: &Path) -> Vec<(String, String)> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| {
            let mut it = l.split_whitespace();
            (it.next().unwrap().to_owned(), it.next().unwrap().to_owned())
        })
        .collect()
}

#[test]
fn uncoarsened_export_reingests_to_the_same_edges() {
    let dir = tempfile::tempdir().unwrap();
    let g = generate::barabasi_albert(300, 2, 5);
    let ext = |u: NodeId| format!("node-{}", 1000 - u);
    let input = dir.path().join("in.txt");
    // reversed orientation plus a duplicate and a self-loop
    let mut edges: Vec<(NodeId, NodeId)> = g.edges().into_iter().map(|(x, y)| (y, x)).collect();
    edges.push(edges[0]);
    edges.push((3, 3));
    write_edges(&input, &edges, ext);

    let ing = ingest(&input, None, None).unwrap();
    assert_eq!(ing.warnings.duplicate_edges, 1);
    assert_eq!(ing.warnings.self_loops, 1);
    let config = CoarseningConfig::for_graph(&ing.graph, 1.0);
    let res = coarsen(ing.graph.clone(), &ing.attributes, &config).unwrap();
    let out = dir.path().join("out");
    let paths = write_outputs(&out, &ing.ids, &res).unwrap();

    let original = canonical(g.edges().into_iter().map(|(x, y)| (ext(x), ext(y))));
    assert_eq!(canonical(read_pairs(&paths.edges)), original);

    let again = ingest(&paths.edges, None, None).unwrap();
    assert_eq!(again.graph.edge_count(), g.edge_count());
    let relabeled = canonical(
        again
            .graph
            .edges()
            .into_iter()
            .map(|(x, y)| (again.ids.external(x).to_owned(), again.ids.external(y).to_owned())),
    );
    assert_eq!(relabeled, original);

    // identity partition
    let partition = fs::read_to_string(&paths.partition).unwrap();
    for line in partition.lines().skip(1) {
        let (a, b) = line.split_once(',').unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn partition_and_attributes_use_external_ids() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("g.txt");
    let features = dir.path().join("f.csv");
    let labels = dir.path().join("l.csv");
    // path a-b-c collapses to one supernode
    fs::write(&input, "a b\nb c\n").unwrap();
    fs::write(&features, "a,1.0\nb,2.0\nc,6.0\n").unwrap();
    fs::write(&labels, "external_id,label\na,4\nc,4\n").unwrap();
    let ing = ingest(&input, Some(&features), Some(&labels)).unwrap();
    let config = CoarseningConfig::for_graph(&ing.graph, 0.3);
    let res = coarsen(ing.graph.clone(), &ing.attributes, &config).unwrap();
    assert_eq!(res.graph.node_count(), 1);
    let paths = write_outputs(dir.path(), &ing.ids, &res).unwrap();

    let partition = fs::read_to_string(&paths.partition).unwrap();
    let rows: Vec<&str> = partition.lines().collect();
    assert_eq!(rows[0], "external_id,supernode_external_id");
    let target = rows[1].split_once(',').unwrap().1;
    assert!(rows[1..].iter().all(|r| r.ends_with(&format!(",{target}"))));
    let feats = fs::read_to_string(paths.features.unwrap()).unwrap();
    assert_eq!(feats.lines().nth(1).unwrap(), format!("{target},3"));
    let labs = fs::read_to_string(paths.labels.unwrap()).unwrap();
    assert_eq!(labs.lines().nth(1).unwrap(), format!("{target},4"));
    let nodes = fs::read_to_string(&paths.nodes).unwrap();
    assert_eq!(nodes, "internal_id,external_id\n0,a\n1,b\n2,c\n");
    assert!(fs::read_to_string(&paths.edges).unwrap().is_empty());
}

#[test]
fn report_matches_the_documented_schema() {
    let schema: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../docs/report.schema.json")).unwrap(),
    )
    .unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let cases = [
        (generate::erdos_renyi(200, 0.04, 1), 0.3, 0.0),
        (generate::barabasi_albert(200, 2, 1), 0.5, 0.1),
        (generate::cycle(4), 1.0, 0.0),
        (generate::complete(6), 0.1, 0.0),
    ];
    for (g, c, drop) in cases {
        let config = CoarseningConfig {
            drop_edge_ratio: drop,
            ..CoarseningConfig::for_graph(&g, c)
        };
        let res = coarsen(g, &AttributedData::empty(), &config).unwrap();
        let json = serde_json::to_value(&res.report).unwrap();
        let errors: Vec<String> = validator.iter_errors(&json).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{errors:?}");
    }

    let mut broken = serde_json::to_value(
        &coarsen(generate::path(3), &AttributedData::empty(), &CoarseningConfig::default())
            .unwrap()
            .report,
    )
    .unwrap();
    broken["final_ratio"] = serde_json::json!(0.0);
    assert!(!validator.is_valid(&broken));
}
