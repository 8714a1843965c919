//! Dataset files.
//!
//! * nodes: one JSON object per line, `{"id": 0, "text": "...", "label": "..."}`
//!   (`label` optional);
//! * edges: one edge per line, either `src dst` / `src,dst` or a JSON object
//!   with `src` and `dst` fields;
//! * labels: the label vocabulary, one label string per line, in order.
//!
//! Blank lines and lines starting with `#` are skipped in the edge and label
//! files; blank lines are skipped in the node file.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::DatasetError;
use crate::graph::{NodeId, NodeRecord, TextAttributedGraph};

#[derive(Debug, Serialize, Deserialize)]
struct NodeLine {
    id: NodeId,
    text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

#[derive(Debug, Deserialize)]
struct EdgeLine {
    src: NodeId,
    dst: NodeId,
}

/// Counts reported after ingesting a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub nodes: usize,
    pub edges: usize,
    pub edge_entries: usize,
    pub labeled_nodes: usize,
    pub labels: usize,
    pub average_degree: f64,
}

/// A loaded graph together with the raw edge-entry count of the source.
#[derive(Debug, Clone)]
pub struct LoadedGraph {
    pub graph: TextAttributedGraph,
    pub stats: GraphStats,
}

pub fn load_graph<N: BufRead, E: BufRead>(
    nodes: N,
    edges: E,
    labels: Option<&[String]>,
) -> Result<LoadedGraph, DatasetError> {
    let mut records: BTreeMap<NodeId, NodeLine> = BTreeMap::new();
    for (i, line) in nodes.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: NodeLine = serde_json::from_str(&line).map_err(|e| DatasetError::Malformed {
            file: "nodes",
            line: i + 1,
            reason: e.to_string(),
        })?;
        let id = rec.id;
        if records.insert(id, rec).is_some() {
            return Err(DatasetError::DuplicateNode(id));
        }
    }
    for (expected, &id) in records.keys().enumerate() {
        if id != expected {
            return Err(DatasetError::MissingNode(expected));
        }
    }

    let mut vocab: Vec<String> = labels.map(<[String]>::to_vec).unwrap_or_default();
    let fixed_vocab = labels.is_some();
    let mut index: BTreeMap<String, usize> = vocab.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();
    let mut node_records = Vec::with_capacity(records.len());
    for (id, rec) in records {
        let label_id = match rec.label {
            None => None,
            Some(l) => match index.get(&l) {
                Some(&i) => Some(i),
                None if fixed_vocab => return Err(DatasetError::UnknownLabel { node: id, label: l }),
                None => {
                    vocab.push(l.clone());
                    index.insert(l, vocab.len() - 1);
                    Some(vocab.len() - 1)
                }
            },
        };
        node_records.push(NodeRecord { id, text: rec.text, label_id });
    }

    let n = node_records.len();
    let mut pairs = Vec::new();
    for (i, line) in edges.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (a, b) =
            parse_edge(trimmed).map_err(|reason| DatasetError::Malformed { file: "edges", line: i + 1, reason })?;
        for id in [a, b] {
            if id >= n {
                return Err(DatasetError::UnknownNode { id, line: i + 1 });
            }
        }
        pairs.push((a, b));
    }

    let labeled_nodes = node_records.iter().filter(|r| r.label_id.is_some()).count();
    let label_texts = if vocab.is_empty() && !fixed_vocab { None } else { Some(vocab) };
    let graph = TextAttributedGraph::from_records(node_records, &pairs, label_texts)?;
    let stats = GraphStats {
        nodes: graph.num_nodes(),
        edges: graph.num_edges(),
        edge_entries: pairs.len(),
        labeled_nodes,
        labels: graph.label_texts().map_or(0, <[String]>::len),
        average_degree: graph.average_degree(),
    };
    Ok(LoadedGraph { graph, stats })
}

fn parse_edge(line: &str) -> Result<(NodeId, NodeId), String> {
    if line.starts_with('{') {
        let e: EdgeLine = serde_json::from_str(line).map_err(|e| e.to_string())?;
        return Ok((e.src, e.dst));
    }
    let fields: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
    match fields.as_slice() {
        [a, b] => {
            let a = a.parse().map_err(|_| format!("bad node id {a:?}"))?;
            let b = b.parse().map_err(|_| format!("bad node id {b:?}"))?;
            Ok((a, b))
        }
        _ => Err(format!("expected two node ids, found {} fields", fields.len())),
    }
}

pub fn read_label_vocab<R: BufRead>(reader: R) -> Result<Vec<String>, DatasetError> {
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        out.push(t.to_string());
    }
    Ok(out)
}

pub fn load_graph_files(nodes: &Path, edges: &Path, labels: Option<&Path>) -> Result<LoadedGraph, DatasetError> {
    let vocab = match labels {
        Some(p) => Some(read_label_vocab(BufReader::new(File::open(p)?))?),
        None => None,
    };
    load_graph(BufReader::new(File::open(nodes)?), BufReader::new(File::open(edges)?), vocab.as_deref())
}

/// Writes `graph` in the dataset format: `nodes.jsonl`, `edges.txt`, and
/// `labels.txt` when the graph has a label vocabulary.
pub fn write_dataset(graph: &TextAttributedGraph, dir: &Path) -> Result<(), DatasetError> {
    std::fs::create_dir_all(dir)?;
    let vocab = graph.label_texts();
    let mut nodes = std::io::BufWriter::new(File::create(dir.join("nodes.jsonl"))?);
    for rec in graph.nodes() {
        let label = match (rec.label_id, vocab) {
            (Some(l), Some(v)) => Some(v[l].clone()),
            _ => None,
        };
        let line = NodeLine { id: rec.id, text: rec.text.clone(), label };
        writeln!(nodes, "{}", serde_json::to_string(&line).expect("node records serialize"))?;
    }
    nodes.flush()?;
    let mut edges = std::io::BufWriter::new(File::create(dir.join("edges.txt"))?);
    for (a, b) in graph.edges() {
        writeln!(edges, "{a} {b}")?;
    }
    edges.flush()?;
    if let Some(v) = vocab {
        let mut labels = File::create(dir.join("labels.txt"))?;
        for l in v {
            writeln!(labels, "{l}")?;
        }
    }
    Ok(())
}
