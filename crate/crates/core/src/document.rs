//! Hierarchical document layout: an ego-graph written out as a sectioned
//! text document.
//!
//! Sections follow the preorder of the BFS tree and carry dotted numbers
//! that extend their parent's number, so the tree is recoverable from the
//! numbering alone. Every cross-edge becomes one `See also section ...` line
//! placed at whichever endpoint comes later in the document.
//!
//! Rendered grammar, per section:
//!
//! ```text
//! <dotted-number>. <title>
//! <body lines>
//! See also section <dotted-number>.
//! ```
//!
//! Body lines that would read as a header, a reference, or that start with
//! `\` are prefixed with `\`; [`parse_document`] strips the prefix again.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::DocumentError;
use crate::graph::{EgoGraph, NodeId, TextAttributedGraph};

const TITLE_WORDS: usize = 8;
const REFERENCE_PREFIX: &str = "See also section ";
const ESCAPE: char = '\\';

/// Dotted section number such as `1.2.1`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SectionNumber(Vec<u32>);

impl SectionNumber {
    pub fn root() -> Self {
        Self(vec![1])
    }

    pub fn child(&self, index: u32) -> Self {
        let mut parts = self.0.clone();
        parts.push(index);
        Self(parts)
    }

    pub fn parent(&self) -> Option<Self> {
        (self.0.len() > 1).then(|| Self(self.0[..self.0.len() - 1].to_vec()))
    }

    pub fn parts(&self) -> &[u32] {
        &self.0
    }

    pub fn depth(&self) -> usize {
        self.0.len() - 1
    }

    fn last(&self) -> u32 {
        *self.0.last().expect("section numbers are never empty")
    }
}

impl fmt::Display for SectionNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

impl FromStr for SectionNumber {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        let parts: Result<Vec<u32>, ()> = s
            .split('.')
            .map(|p| {
                if p.is_empty() || !p.bytes().all(|b| b.is_ascii_digit()) || (p.len() > 1 && p.starts_with('0')) {
                    return Err(());
                }
                p.parse::<u32>().ok().filter(|&v| v > 0).ok_or(())
            })
            .collect();
        parts.map(SectionNumber)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub number: SectionNumber,
    pub node: NodeId,
    pub text: String,
    /// Sections this one points back to, in document order.
    pub references: Vec<SectionNumber>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HierarchicalDocument {
    pub root: NodeId,
    pub sections: Vec<Section>,
    pub by_node: BTreeMap<NodeId, SectionNumber>,
}

/// Rendered text plus its whitespace-token count.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DocumentText {
    pub content: String,
    pub word_count: usize,
}

impl DocumentText {
    pub fn new(content: String) -> Self {
        let word_count = word_count(&content);
        Self { content, word_count }
    }
}

impl fmt::Display for DocumentText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.content)
    }
}

pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Assigns sections in preorder and attaches one back-reference per
/// cross-edge, at the endpoint that appears later in the document.
pub fn layout(ego: &EgoGraph, graph: &TextAttributedGraph) -> HierarchicalDocument {
    layout_with(ego, |v| graph.text(v).to_string())
}

pub fn layout_with(ego: &EgoGraph, text_of: impl Fn(NodeId) -> String) -> HierarchicalDocument {
    let mut by_node = BTreeMap::new();
    by_node.insert(ego.root(), SectionNumber::root());
    for &v in ego.preorder() {
        let number = by_node[&v].clone();
        for (i, &c) in ego.children(v).iter().enumerate() {
            by_node.insert(c, number.child(i as u32 + 1));
        }
    }
    let position: BTreeMap<NodeId, usize> = ego.preorder().iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut refs: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    for &(a, b) in ego.cross_edges() {
        let (earlier, later) = if position[&a] < position[&b] { (a, b) } else { (b, a) };
        refs.entry(later).or_default().push(earlier);
    }
    let sections = ego
        .preorder()
        .iter()
        .map(|&v| {
            let mut targets = refs.remove(&v).unwrap_or_default();
            targets.sort_by_key(|t| position[t]);
            Section {
                number: by_node[&v].clone(),
                node: v,
                text: text_of(v),
                references: targets.iter().map(|t| by_node[t].clone()).collect(),
            }
        })
        .collect();
    HierarchicalDocument { root: ego.root(), sections, by_node }
}

impl HierarchicalDocument {
    /// Keeps only the sections of `keep`, with their original numbers, and
    /// only the references whose two endpoints both survive.
    pub fn restrict(&self, keep: &BTreeSet<NodeId>) -> HierarchicalDocument {
        let kept_numbers: BTreeSet<&SectionNumber> =
            self.sections.iter().filter(|s| keep.contains(&s.node)).map(|s| &s.number).collect();
        let sections: Vec<Section> = self
            .sections
            .iter()
            .filter(|s| keep.contains(&s.node))
            .map(|s| Section {
                references: s.references.iter().filter(|r| kept_numbers.contains(r)).cloned().collect(),
                ..s.clone()
            })
            .collect();
        let by_node = sections.iter().map(|s| (s.node, s.number.clone())).collect();
        HierarchicalDocument { root: self.root, sections, by_node }
    }

    /// Total words across the node texts, excluding headers and references.
    pub fn body_word_count(&self) -> usize {
        self.sections.iter().map(|s| word_count(&s.text)).sum()
    }

    /// Rebuilds the ego-graph: tree edges from the numbering, cross-edges
    /// from the references.
    pub fn to_ego(&self) -> Result<EgoGraph, DocumentError> {
        let node_of: BTreeMap<&SectionNumber, NodeId> = self.sections.iter().map(|s| (&s.number, s.node)).collect();
        let mut tree = Vec::new();
        let mut cross = Vec::new();
        for s in &self.sections {
            if let Some(p) = s.number.parent() {
                let parent =
                    *node_of.get(&p).ok_or(DocumentError::NonContiguous { line: 0, number: s.number.to_string() })?;
                tree.push((parent, s.node));
            }
            for r in &s.references {
                let target = *node_of.get(r).ok_or(DocumentError::UnknownTarget { line: 0, target: r.to_string() })?;
                cross.push((target, s.node));
            }
        }
        let depth = self.sections.iter().map(|s| s.number.depth()).max().ok_or(DocumentError::Empty)?;
        EgoGraph::from_parts(self.root, depth, tree, cross)
            .map_err(|e| DocumentError::MalformedHeader { line: 0, text: e.to_string() })
    }
}

fn title(text: &str, node: NodeId) -> String {
    let words: Vec<&str> = text.split_whitespace().take(TITLE_WORDS).collect();
    if words.is_empty() {
        format!("Node {node}")
    } else {
        words.join(" ")
    }
}

fn header_number(line: &str) -> Option<&str> {
    let (num, _) = line.split_once(". ")?;
    let ok = !num.is_empty() && num.split('.').all(|p| !p.is_empty() && p.bytes().all(|b| b.is_ascii_digit()));
    ok.then_some(num)
}

fn reference_target(line: &str) -> Option<&str> {
    let num = line.strip_prefix(REFERENCE_PREFIX)?.strip_suffix('.')?;
    let ok = !num.is_empty() && num.split('.').all(|p| !p.is_empty() && p.bytes().all(|b| b.is_ascii_digit()));
    ok.then_some(num)
}

fn needs_escape(line: &str) -> bool {
    line.starts_with(ESCAPE) || header_number(line).is_some() || reference_target(line).is_some()
}

fn body_lines(text: &str) -> impl Iterator<Item = &str> {
    (!text.is_empty()).then(|| text.split('\n')).into_iter().flatten()
}

/// Byte-deterministic rendering of a document.
pub fn render(doc: &HierarchicalDocument) -> DocumentText {
    let mut out = String::new();
    for s in &doc.sections {
        out.push_str(&format!("{}. {}\n", s.number, title(&s.text, s.node)));
        for line in body_lines(&s.text) {
            if needs_escape(line) {
                out.push(ESCAPE);
            }
            out.push_str(line);
            out.push('\n');
        }
        for r in &s.references {
            out.push_str(&format!("{REFERENCE_PREFIX}{r}.\n"));
        }
    }
    DocumentText::new(out)
}

/// Parses rendered text back into a document whose node ids are the
/// sections' positions in document order (the root is node 0).
pub fn parse_document(text: &str) -> Result<HierarchicalDocument, DocumentError> {
    struct Raw {
        number: SectionNumber,
        body: Vec<String>,
        refs: Vec<(usize, String)>,
    }
    let mut raws: Vec<Raw> = Vec::new();
    let mut path: Vec<SectionNumber> = Vec::new();
    let mut child_counts: BTreeMap<SectionNumber, u32> = BTreeMap::new();

    let mut lines: Vec<&str> = text.split('\n').collect();
    if lines.last() == Some(&"") {
        lines.pop();
    }
    for (i, line) in lines.into_iter().enumerate() {
        let lineno = i + 1;
        if let Some(escaped) = line.strip_prefix(ESCAPE) {
            match raws.last_mut() {
                Some(r) => r.body.push(escaped.to_string()),
                None => return Err(DocumentError::MalformedHeader { line: lineno, text: line.to_string() }),
            }
        } else if let Some(num) = header_number(line) {
            let number: SectionNumber =
                num.parse().map_err(|_| DocumentError::MalformedHeader { line: lineno, text: line.to_string() })?;
            let breaks = || DocumentError::NonContiguous { line: lineno, number: number.to_string() };
            match number.parent() {
                None if raws.is_empty() && number == SectionNumber::root() => {}
                None => return Err(breaks()),
                Some(parent) => {
                    let depth = path.iter().position(|p| *p == parent).ok_or_else(breaks)?;
                    let count = child_counts.entry(parent).or_insert(0);
                    if number.last() != *count + 1 {
                        return Err(breaks());
                    }
                    *count += 1;
                    path.truncate(depth + 1);
                }
            }
            path.push(number.clone());
            raws.push(Raw { number, body: Vec::new(), refs: Vec::new() });
        } else if let Some(target) = reference_target(line) {
            match raws.last_mut() {
                Some(r) => r.refs.push((lineno, target.to_string())),
                None => return Err(DocumentError::MalformedHeader { line: lineno, text: line.to_string() }),
            }
        } else {
            match raws.last_mut() {
                Some(r) => r.body.push(line.to_string()),
                None => return Err(DocumentError::MalformedHeader { line: lineno, text: line.to_string() }),
            }
        }
    }
    if raws.is_empty() {
        return Err(DocumentError::Empty);
    }

    let index: BTreeMap<SectionNumber, usize> = raws.iter().enumerate().map(|(i, r)| (r.number.clone(), i)).collect();
    let mut seen_edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    for (i, r) in raws.iter().enumerate() {
        if let Some(p) = r.number.parent() {
            seen_edges.insert((index[&p], i));
        }
    }
    let mut sections = Vec::with_capacity(raws.len());
    for (i, r) in raws.into_iter().enumerate() {
        let mut references = Vec::new();
        for (lineno, target) in r.refs {
            let number: Option<SectionNumber> = target.parse().ok();
            let j = match number.as_ref().and_then(|n| index.get(n)) {
                Some(&j) => j,
                None => return Err(DocumentError::UnknownTarget { line: lineno, target }),
            };
            if j >= i {
                return Err(DocumentError::ForwardReference { line: lineno, target });
            }
            if !seen_edges.insert((j, i)) {
                return Err(DocumentError::DuplicateReference { line: lineno, target });
            }
            references.push(number.expect("resolved above"));
        }
        sections.push(Section { number: r.number, node: i, text: r.body.join("\n"), references });
    }
    let by_node = sections.iter().map(|s| (s.node, s.number.clone())).collect();
    Ok(HierarchicalDocument { root: 0, sections, by_node })
}

/// Recovers the ego-graph encoded in rendered text.
pub fn parse(text: &DocumentText) -> Result<EgoGraph, DocumentError> {
    parse_document(&text.content)?.to_ego()
}

/// Baseline encoding that spells out every node and every edge.
pub fn flat_edge_listing(ego: &EgoGraph, graph: &TextAttributedGraph) -> DocumentText {
    let position: BTreeMap<NodeId, usize> = ego.preorder().iter().enumerate().map(|(i, &v)| (v, i + 1)).collect();
    let mut out = String::new();
    for &v in ego.preorder() {
        let text = graph.text(v).split_whitespace().collect::<Vec<_>>().join(" ");
        out.push_str(&format!("Node {}: {}.\n", position[&v], text));
    }
    let mut edges: Vec<(usize, usize)> = ego
        .induced_edges()
        .into_iter()
        .map(|(a, b)| {
            let (pa, pb) = (position[&a], position[&b]);
            (pa.min(pb), pa.max(pb))
        })
        .collect();
    edges.sort_unstable();
    for (a, b) in edges {
        out.push_str(&format!("Node {a} connects to node {b}.\n"));
    }
    DocumentText::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g0() -> TextAttributedGraph {
        let texts = (0..6).map(|i| format!("text of node {i}")).collect();
        TextAttributedGraph::new(texts, &[(0, 1), (0, 2), (1, 3), (2, 3), (2, 4), (3, 5)]).unwrap()
    }

    fn num(s: &str) -> SectionNumber {
        s.parse().unwrap()
    }

    #[test]
    fn section_number_parsing() {
        assert_eq!(num("1.2.10").parts(), &[1, 2, 10]);
        for bad in ["", "1.", ".1", "1..2", "0", "1.02", "a"] {
            assert!(bad.parse::<SectionNumber>().is_err(), "{bad}");
        }
        assert_eq!(num("1.3").to_string(), "1.3");
    }

    #[test]
    fn g0_layout() {
        let g = g0();
        let doc = layout(&g.ego_graph(0, 2).unwrap(), &g);
        let numbers: Vec<(NodeId, String)> = doc.sections.iter().map(|s| (s.node, s.number.to_string())).collect();
        assert_eq!(
            numbers,
            vec![(0, "1".into()), (1, "1.1".into()), (3, "1.1.1".into()), (2, "1.2".into()), (4, "1.2.1".into())]
        );
        let refs: Vec<_> = doc.sections.iter().filter(|s| !s.references.is_empty()).collect();
        assert_eq!(refs.len(), 1);
        assert_eq!(refs[0].number, num("1.2"));
        assert_eq!(refs[0].references, vec![num("1.1.1")]);
        let text = render(&doc);
        let lines: Vec<&str> = text.content.lines().collect();
        let at = lines.iter().position(|l| *l == "1.2. text of node 2").unwrap();
        assert_eq!(lines[at + 2], "See also section 1.1.1.");
    }

    #[test]
    fn single_section_render() {
        let g = TextAttributedGraph::new(vec!["graph learning".into()], &[]).unwrap();
        let doc = layout(&g.ego_graph(0, 1).unwrap(), &g);
        let text = render(&doc);
        assert_eq!(text.content, "1. graph learning\ngraph learning\n");
        assert_eq!(text.word_count, 5);
        let back = parse(&text).unwrap();
        assert_eq!(back.len(), 1);
        assert!(back.tree_edges().is_empty());
    }

    #[test]
    fn empty_texts_use_fallback_titles() {
        let g = TextAttributedGraph::new(vec![String::new(); 3], &[(0, 1), (0, 2)]).unwrap();
        let text = render(&layout(&g.ego_graph(0, 1).unwrap(), &g));
        assert_eq!(text.content, "1. Node 0\n1.1. Node 1\n1.2. Node 2\n");
    }

    #[test]
    fn title_is_first_eight_words() {
        let g = TextAttributedGraph::new(vec!["a b c d e f g h i j".into()], &[]).unwrap();
        let text = render(&layout(&g.ego_graph(0, 0).unwrap(), &g));
        assert!(text.content.starts_with("1. a b c d e f g h\n"));
    }

    #[test]
    fn star_has_no_references() {
        let g =
            TextAttributedGraph::new(vec!["c".into(), "x".into(), "y".into(), "z".into()], &[(0, 1), (0, 2), (0, 3)])
                .unwrap();
        let doc = layout(&g.ego_graph(0, 1).unwrap(), &g);
        let nums: Vec<String> = doc.sections.iter().map(|s| s.number.to_string()).collect();
        assert_eq!(nums, ["1", "1.1", "1.2", "1.3"]);
        assert!(doc.sections.iter().all(|s| s.references.is_empty()));
    }

    #[test]
    fn g0_round_trip() {
        let g = g0();
        let ego = g.ego_graph(0, 2).unwrap();
        let back = parse(&render(&layout(&ego, &g))).unwrap();
        // 0:"1" 1:"1.1" 2:"1.1.1" 3:"1.2" 4:"1.2.1" after relabeling.
        assert_eq!(back.tree_edges(), &[(0, 1), (1, 2), (0, 3), (3, 4)]);
        assert_eq!(back.cross_edges(), &[(2, 3)]);
        assert_eq!(back.canonical().tree_edges(), ego.canonical().tree_edges());
        assert_eq!(back.canonical().cross_edges(), ego.canonical().cross_edges());
    }

    #[test]
    fn colliding_body_lines_are_escaped() {
        let tricky = "1. looks like a header\nSee also section 1.\n\\starts with escape\n\nplain";
        let g = TextAttributedGraph::new(vec![tricky.into(), "child".into()], &[(0, 1)]).unwrap();
        let doc = layout(&g.ego_graph(0, 1).unwrap(), &g);
        let text = render(&doc);
        assert!(text.content.contains("\n\\1. looks like a header\n"));
        assert!(text.content.contains("\n\\See also section 1.\n"));
        let back = parse_document(&text.content).unwrap();
        assert_eq!(back.sections[0].text, tricky);
        assert_eq!(back.sections[1].text, "child");
        assert!(back.sections.iter().all(|s| s.references.is_empty()));
    }

    #[test]
    fn parse_errors() {
        let unknown = parse_document("1. a\na\nSee also section 9.9.\n").unwrap_err();
        assert!(matches!(unknown, DocumentError::UnknownTarget { ref target, .. } if target == "9.9"));
        let forward = parse_document("1. a\n1.1. b\nSee also section 1.2.\n1.2. c\n").unwrap_err();
        assert!(matches!(forward, DocumentError::ForwardReference { .. }));
        let tree_dup = parse_document("1. a\n1.1. b\nSee also section 1.\n").unwrap_err();
        assert!(matches!(tree_dup, DocumentError::DuplicateReference { .. }));
        let gap = parse_document("1. a\n1.2. b\n").unwrap_err();
        assert!(matches!(gap, DocumentError::NonContiguous { line: 2, .. }));
        let order = parse_document("1. a\n1.1. b\n1.2. c\n1.1.1. d\n").unwrap_err();
        assert!(matches!(order, DocumentError::NonContiguous { line: 4, .. }));
        let second_root = parse_document("1. a\n2. b\n").unwrap_err();
        assert!(matches!(second_root, DocumentError::NonContiguous { .. }));
        let no_header = parse_document("hello\n1. a\n").unwrap_err();
        assert!(matches!(no_header, DocumentError::MalformedHeader { line: 1, .. }));
        let zero = parse_document("1. a\n1.0. b\n").unwrap_err();
        assert!(matches!(zero, DocumentError::MalformedHeader { line: 2, .. }));
        assert_eq!(parse_document("").unwrap_err(), DocumentError::Empty);
    }

    #[test]
    fn flat_listing() {
        let g = TextAttributedGraph::new(vec!["alpha".into(), "beta".into()], &[(0, 1)]).unwrap();
        let single = flat_edge_listing(&g.ego_graph(0, 0).unwrap(), &g);
        assert_eq!(single.content, "Node 1: alpha.\n");
        let pair = flat_edge_listing(&g.ego_graph(0, 1).unwrap(), &g);
        assert!(pair.content.contains("Node 1 connects to node 2."));

        let g = g0();
        let listing = flat_edge_listing(&g.ego_graph(0, 2).unwrap(), &g);
        let nodes = listing.content.lines().filter(|l| l.contains(": ")).count();
        let edges = listing.content.lines().filter(|l| l.contains(" connects to ")).count();
        assert_eq!((nodes, edges), (5, 5));
    }

    #[test]
    fn restriction() {
        let g = g0();
        let doc = layout(&g.ego_graph(0, 2).unwrap(), &g);
        let all: BTreeSet<NodeId> = doc.by_node.keys().copied().collect();
        assert_eq!(render(&doc.restrict(&all)), render(&doc));
        let sub = doc.restrict(&BTreeSet::from([0, 2, 3]));
        let nums: Vec<String> = sub.sections.iter().map(|s| s.number.to_string()).collect();
        assert_eq!(nums, ["1", "1.1.1", "1.2"]);
        assert_eq!(sub.sections[2].references, vec![num("1.1.1")]);
        let sub = doc.restrict(&BTreeSet::from([0, 1, 3]));
        assert!(sub.sections.iter().all(|s| s.references.is_empty()));
    }
}
