//! Text-attributed graphs and k-hop ego-graph extraction.
//!
//! Every node carries a text corpus. Edges are undirected, deduplicated and
//! free of self-loops. An [`EgoGraph`] is the subgraph induced on a node and
//! its k-hop neighborhood, split into a BFS tree backbone and the remaining
//! cross-edges.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::GraphError;

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: NodeId,
    pub text: String,
    pub label_id: Option<usize>,
}

/// Node texts plus a symmetric adjacency structure with sorted neighbor lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextAttributedGraph {
    nodes: Vec<NodeRecord>,
    adjacency: Vec<Vec<NodeId>>,
    label_texts: Option<Vec<String>>,
    num_edges: usize,
}

impl TextAttributedGraph {
    /// Builds a graph from node texts and an edge list. Edges are
    /// symmetrized, self-loops dropped and duplicates collapsed.
    pub fn new(texts: Vec<String>, edges: &[(NodeId, NodeId)]) -> Result<Self, GraphError> {
        let nodes = texts.into_iter().enumerate().map(|(id, text)| NodeRecord { id, text, label_id: None }).collect();
        Self::from_records(nodes, edges, None)
    }

    /// `nodes[i].id` must equal `i`.
    pub fn from_records(
        nodes: Vec<NodeRecord>,
        edges: &[(NodeId, NodeId)],
        label_texts: Option<Vec<String>>,
    ) -> Result<Self, GraphError> {
        for (i, n) in nodes.iter().enumerate() {
            if n.id != i {
                return Err(GraphError::NonDenseIds { expected: i, found: n.id });
            }
            if let (Some(label), Some(texts)) = (n.label_id, label_texts.as_ref()) {
                if label >= texts.len() {
                    return Err(GraphError::UnknownLabelIndex { node: i, label });
                }
            }
        }
        let n = nodes.len();
        let mut sets = vec![BTreeSet::new(); n];
        for &(a, b) in edges {
            if a >= n {
                return Err(GraphError::UnknownNode(a));
            }
            if b >= n {
                return Err(GraphError::UnknownNode(b));
            }
            if a == b {
                continue;
            }
            sets[a].insert(b);
            sets[b].insert(a);
        }
        let adjacency: Vec<Vec<NodeId>> = sets.into_iter().map(|s| s.into_iter().collect()).collect();
        let num_edges = adjacency.iter().map(Vec::len).sum::<usize>() / 2;
        Ok(Self { nodes, adjacency, label_texts, num_edges })
    }

    pub fn with_labels(mut self, label_ids: Vec<Option<usize>>, label_texts: Vec<String>) -> Result<Self, GraphError> {
        if label_ids.len() != self.nodes.len() {
            return Err(GraphError::LabelCount { nodes: self.nodes.len(), labels: label_ids.len() });
        }
        for (node, (rec, label)) in self.nodes.iter_mut().zip(label_ids).enumerate() {
            if let Some(l) = label {
                if l >= label_texts.len() {
                    return Err(GraphError::UnknownLabelIndex { node, label: l });
                }
            }
            rec.label_id = label;
        }
        self.label_texts = Some(label_texts);
        Ok(self)
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    pub fn nodes(&self) -> &[NodeRecord] {
        &self.nodes
    }

    pub fn text(&self, v: NodeId) -> &str {
        &self.nodes[v].text
    }

    pub fn label(&self, v: NodeId) -> Option<usize> {
        self.nodes[v].label_id
    }

    pub fn label_texts(&self) -> Option<&[String]> {
        self.label_texts.as_deref()
    }

    /// Sorted ascending.
    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adjacency[v].len()
    }

    pub fn average_degree(&self) -> f64 {
        if self.nodes.is_empty() {
            0.0
        } else {
            2.0 * self.num_edges as f64 / self.nodes.len() as f64
        }
    }

    pub fn contains(&self, v: NodeId) -> bool {
        v < self.nodes.len()
    }

    fn check(&self, v: NodeId) -> Result<(), GraphError> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(GraphError::UnknownNode(v))
        }
    }

    /// Each undirected edge once, as `(min, max)`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(a, ns)| ns.iter().filter(move |&&b| a < b).map(move |&b| (a, b)))
    }

    /// Nodes at shortest-path distance `1..=k` from `v`.
    pub fn k_hop_neighborhood(&self, v: NodeId, k: usize) -> Result<BTreeSet<NodeId>, GraphError> {
        self.check(v)?;
        let mut seen = BTreeSet::from([v]);
        let mut frontier = vec![v];
        for _ in 0..k {
            let mut next = Vec::new();
            for &u in &frontier {
                for &w in &self.adjacency[u] {
                    if seen.insert(w) {
                        next.push(w);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        seen.remove(&v);
        Ok(seen)
    }

    /// Extracts the `k`-hop ego-graph of `v`.
    ///
    /// The BFS runs level by level with each frontier sorted ascending, so
    /// a node reachable from several parents on the same level is claimed by
    /// the smallest-id one and every child list comes out ascending.
    pub fn ego_graph(&self, v: NodeId, k: usize) -> Result<EgoGraph, GraphError> {
        self.check(v)?;
        let mut parent: BTreeMap<NodeId, NodeId> = BTreeMap::new();
        let mut members = BTreeSet::from([v]);
        let mut children: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        let mut frontier = vec![v];
        for _ in 0..k {
            let mut next = Vec::new();
            for &u in &frontier {
                for &w in &self.adjacency[u] {
                    if members.insert(w) {
                        parent.insert(w, u);
                        children.entry(u).or_default().push(w);
                        next.push(w);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            next.sort_unstable();
            frontier = next;
        }

        let tree_edges: Vec<(NodeId, NodeId)> =
            preorder_of(v, &children).into_iter().skip(1).map(|c| (parent[&c], c)).collect();
        let mut cross_edges = Vec::new();
        for &a in &members {
            for &b in &self.adjacency[a] {
                if a < b && members.contains(&b) && parent.get(&b) != Some(&a) && parent.get(&a) != Some(&b) {
                    cross_edges.push((a, b));
                }
            }
        }
        EgoGraph::from_parts(v, k, tree_edges, cross_edges)
    }
}

fn preorder_of(root: NodeId, children: &BTreeMap<NodeId, Vec<NodeId>>) -> Vec<NodeId> {
    let mut order = Vec::new();
    let mut stack = vec![root];
    while let Some(u) = stack.pop() {
        order.push(u);
        if let Some(cs) = children.get(&u) {
            stack.extend(cs.iter().rev());
        }
    }
    order
}

/// A rooted ego-graph decomposed into a BFS tree and cross-edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EgoGraph {
    root: NodeId,
    hops: usize,
    members: BTreeSet<NodeId>,
    /// `(parent, child)` in preorder of the child.
    tree_edges: Vec<(NodeId, NodeId)>,
    /// `(min, max)`, sorted.
    cross_edges: Vec<(NodeId, NodeId)>,
    preorder: Vec<NodeId>,
    children: BTreeMap<NodeId, Vec<NodeId>>,
    cross_adj: BTreeMap<NodeId, Vec<NodeId>>,
}

impl EgoGraph {
    /// Assembles an ego-graph from a tree and cross-edge set, validating the
    /// tree/cross partition. Children are ordered ascending by id.
    pub fn from_parts(
        root: NodeId,
        hops: usize,
        tree_edges: Vec<(NodeId, NodeId)>,
        cross_edges: Vec<(NodeId, NodeId)>,
    ) -> Result<Self, GraphError> {
        let mut members = BTreeSet::from([root]);
        let mut children: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        let mut has_parent = BTreeSet::new();
        for &(p, c) in &tree_edges {
            if c == root || !has_parent.insert(c) {
                return Err(GraphError::InvalidEgo(format!("node {c} has more than one parent")));
            }
            members.insert(p);
            members.insert(c);
            children.entry(p).or_default().push(c);
        }
        for cs in children.values_mut() {
            cs.sort_unstable();
        }
        let preorder = preorder_of(root, &children);
        if preorder.len() != members.len() {
            return Err(GraphError::InvalidEgo("tree edges do not span a tree rooted at the root".into()));
        }

        let tree_set: BTreeSet<(NodeId, NodeId)> = tree_edges.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
        let mut cross: Vec<(NodeId, NodeId)> = cross_edges.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
        cross.sort_unstable();
        for w in cross.windows(2) {
            if w[0] == w[1] {
                return Err(GraphError::InvalidEgo(format!("duplicate cross-edge {:?}", w[0])));
            }
        }
        let mut cross_adj: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for &(a, b) in &cross {
            if a == b || !members.contains(&a) || !members.contains(&b) || tree_set.contains(&(a, b)) {
                return Err(GraphError::InvalidEgo(format!("invalid cross-edge ({a}, {b})")));
            }
            cross_adj.entry(a).or_default().push(b);
            cross_adj.entry(b).or_default().push(a);
        }
        for ns in cross_adj.values_mut() {
            ns.sort_unstable();
        }

        let position: BTreeMap<NodeId, usize> = preorder.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut tree_edges = tree_edges;
        tree_edges.sort_by_key(|&(_, c)| position[&c]);

        Ok(Self { root, hops, members, tree_edges, cross_edges: cross, preorder, children, cross_adj })
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn hops(&self) -> usize {
        self.hops
    }

    pub fn members(&self) -> &BTreeSet<NodeId> {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn tree_edges(&self) -> &[(NodeId, NodeId)] {
        &self.tree_edges
    }

    pub fn cross_edges(&self) -> &[(NodeId, NodeId)] {
        &self.cross_edges
    }

    pub fn preorder(&self) -> &[NodeId] {
        &self.preorder
    }

    /// BFS-tree children, ascending.
    pub fn children(&self, v: NodeId) -> &[NodeId] {
        self.children.get(&v).map_or(&[], Vec::as_slice)
    }

    /// Endpoints of cross-edges incident to `v`, ascending.
    pub fn cross_neighbors(&self, v: NodeId) -> &[NodeId] {
        self.cross_adj.get(&v).map_or(&[], Vec::as_slice)
    }

    /// Tree plus cross edges as `(min, max)` pairs.
    pub fn induced_edges(&self) -> BTreeSet<(NodeId, NodeId)> {
        self.tree_edges.iter().chain(self.cross_edges.iter()).map(|&(a, b)| (a.min(b), a.max(b))).collect()
    }

    /// Height of the BFS tree (0 for a single node).
    pub fn depth(&self) -> usize {
        fn go(ego: &EgoGraph, v: NodeId) -> usize {
            ego.children(v).iter().map(|&c| 1 + go(ego, c)).max().unwrap_or(0)
        }
        go(self, self.root)
    }

    /// The same structure with every node relabeled by its preorder
    /// position. Two ego-graphs are structurally equal when their canonical
    /// forms are equal.
    pub fn canonical(&self) -> EgoGraph {
        let pos: BTreeMap<NodeId, usize> = self.preorder.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let tree = self.tree_edges.iter().map(|&(p, c)| (pos[&p], pos[&c])).collect();
        let cross = self.cross_edges.iter().map(|&(a, b)| (pos[&a], pos[&b])).collect();
        EgoGraph::from_parts(0, self.hops, tree, cross).expect("relabeling preserves validity")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn g0() -> TextAttributedGraph {
        let texts = (0..6).map(|i| format!("node {i}")).collect();
        TextAttributedGraph::new(texts, &[(0, 1), (0, 2), (1, 3), (2, 3), (2, 4), (3, 5)]).unwrap()
    }

    /// Distances by Floyd-Warshall, independent of the BFS code.
    fn distances(g: &TextAttributedGraph) -> Vec<Vec<usize>> {
        let n = g.num_nodes();
        let inf = usize::MAX / 4;
        let mut d = vec![vec![inf; n]; n];
        for i in 0..n {
            d[i][i] = 0;
            for &j in g.neighbors(i) {
                d[i][j] = 1;
            }
        }
        for m in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if d[i][m] + d[m][j] < d[i][j] {
                        d[i][j] = d[i][m] + d[m][j];
                    }
                }
            }
        }
        d
    }

    #[test]
    fn neighborhood_of_g0() {
        let g = g0();
        assert_eq!(g.k_hop_neighborhood(0, 1).unwrap(), BTreeSet::from([1, 2]));
        assert_eq!(g.k_hop_neighborhood(0, 2).unwrap(), BTreeSet::from([1, 2, 3, 4]));
        assert!(g.k_hop_neighborhood(3, 0).unwrap().is_empty());
        let d = distances(&g);
        for v in 0..6 {
            for k in 0..5 {
                let want: BTreeSet<_> = (0..6).filter(|&u| u != v && d[v][u] <= k).collect();
                assert_eq!(g.k_hop_neighborhood(v, k).unwrap(), want);
            }
        }
    }

    #[test]
    fn unknown_node_is_an_error() {
        let g = g0();
        assert!(matches!(g.k_hop_neighborhood(6, 1), Err(GraphError::UnknownNode(6))));
        assert!(matches!(g.ego_graph(17, 1), Err(GraphError::UnknownNode(17))));
    }

    #[test]
    fn ego_of_g0() {
        let e = g0().ego_graph(0, 2).unwrap();
        assert_eq!(e.members(), &BTreeSet::from([0, 1, 2, 3, 4]));
        assert_eq!(e.tree_edges(), &[(0, 1), (1, 3), (0, 2), (2, 4)]);
        assert_eq!(e.cross_edges(), &[(2, 3)]);
        assert_eq!(e.preorder(), &[0, 1, 3, 2, 4]);
        assert_eq!(e.depth(), 2);
    }

    #[test]
    fn isolated_and_star() {
        let g = TextAttributedGraph::new(vec!["a".into(), "b".into()], &[]).unwrap();
        let e = g.ego_graph(1, 3).unwrap();
        assert_eq!(e.members(), &BTreeSet::from([1]));
        assert!(e.tree_edges().is_empty() && e.cross_edges().is_empty());
        assert_eq!(e.preorder(), &[1]);

        let texts = (0..6).map(|i| i.to_string()).collect();
        let star = TextAttributedGraph::new(texts, &[(0, 1), (0, 2), (0, 3), (0, 4), (0, 5)]).unwrap();
        let e = star.ego_graph(0, 1).unwrap();
        assert_eq!(e.tree_edges().len(), 5);
        assert!(e.cross_edges().is_empty());
    }

    #[test]
    fn symmetrizes_and_drops_self_loops() {
        let g = TextAttributedGraph::new(vec!["".into(), "".into()], &[(0, 1), (1, 0), (1, 1)]).unwrap();
        assert_eq!(g.num_edges(), 1);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1)]);
        assert_eq!(g.neighbors(1), &[0]);
    }

    #[test]
    fn smallest_parent_wins() {
        // 0-1, 0-2, 1-3, 2-3: node 3 is reachable from both 1 and 2.
        let g = TextAttributedGraph::new(vec![String::new(); 4], &[(0, 2), (0, 1), (2, 3), (1, 3)]).unwrap();
        let e = g.ego_graph(0, 2).unwrap();
        assert!(e.tree_edges().contains(&(1, 3)));
        assert_eq!(e.cross_edges(), &[(2, 3)]);
    }

    #[test]
    fn from_parts_rejects_bad_partitions() {
        assert!(EgoGraph::from_parts(0, 1, vec![(0, 1), (1, 0)], vec![]).is_err());
        assert!(EgoGraph::from_parts(0, 1, vec![(0, 1)], vec![(0, 1)]).is_err());
        assert!(EgoGraph::from_parts(0, 1, vec![(0, 1)], vec![(1, 5)]).is_err());
        assert!(EgoGraph::from_parts(0, 1, vec![(0, 1), (2, 3)], vec![]).is_err());
    }
}
