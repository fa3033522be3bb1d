//! Relational document graph over sentence, past, future and global nodes.
//!
//! Node layout for `n` sentences with every feature enabled:
//! `0..n` sentences, `n..2n` past nodes, `2n..3n` future nodes, `3n` global.
//! Disabled node kinds are left out and later blocks shift down.

use std::fmt;

use crate::corpus::{BankDims, BankRecord, Document, NodeRole};
use crate::error::{Error, Result};
use crate::numeric::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relation {
    /// Between every ordered pair of distinct sentences.
    SentenceToSentence,
    /// Past node into its sentence.
    PastToSentence,
    /// Future node into its sentence; relabeled as past when CSK relations are merged.
    FutureToSentence,
    /// Global node into every sentence.
    GlobalToSentence,
}

impl Relation {
    pub const ALL: [Relation; 4] = [
        Relation::SentenceToSentence,
        Relation::PastToSentence,
        Relation::FutureToSentence,
        Relation::GlobalToSentence,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            Relation::SentenceToSentence => "sentence",
            Relation::PastToSentence => "past",
            Relation::FutureToSentence => "future",
            Relation::GlobalToSentence => "global",
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

/// Ablation switches.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GraphConfig {
    pub use_csk: bool,
    pub use_global: bool,
    /// Past and future edges share one relation (nodes and edges are kept).
    pub merge_csk_relations: bool,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            use_csk: true,
            use_global: true,
            merge_csk_relations: false,
        }
    }
}

impl GraphConfig {
    /// Every combination of the three switches.
    pub fn all_combinations() -> Vec<GraphConfig> {
        (0..8)
            .map(|bits| GraphConfig {
                use_csk: bits & 1 != 0,
                use_global: bits & 2 != 0,
                merge_csk_relations: bits & 4 != 0,
            })
            .collect()
    }

    /// Relations that can carry edges, and hence own weights, under this config.
    pub fn active_relations(&self) -> Vec<Relation> {
        let mut rels = vec![Relation::SentenceToSentence];
        if self.use_csk {
            rels.push(Relation::PastToSentence);
            if !self.merge_csk_relations {
                rels.push(Relation::FutureToSentence);
            }
        }
        if self.use_global {
            rels.push(Relation::GlobalToSentence);
        }
        rels
    }

    /// Node roles present in the graph, in layout order.
    pub fn active_roles(&self) -> Vec<NodeRole> {
        let mut roles = vec![NodeRole::Sentence];
        if self.use_csk {
            roles.extend([NodeRole::Past, NodeRole::Future]);
        }
        if self.use_global {
            roles.push(NodeRole::Global);
        }
        roles
    }

    pub fn expected_nodes(&self, n: usize) -> usize {
        n + if self.use_csk { 2 * n } else { 0 } + usize::from(self.use_global)
    }

    pub fn expected_edges(&self, n: usize) -> usize {
        n * n.saturating_sub(1) + if self.use_csk { 2 * n } else { 0 } + if self.use_global { n } else { 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GraphNode {
    pub role: NodeRole,
    /// Sentence the node belongs to; 0 for the global node.
    pub sentence: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Edge {
    pub source: usize,
    pub relation: Relation,
    pub target: usize,
}

/// Initial embeddings of one role block, one row per node, in layout order.
#[derive(Clone, Debug, PartialEq)]
pub struct RoleBlock {
    pub role: NodeRole,
    pub start: usize,
    pub embeddings: Tensor,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DocumentGraph {
    n: usize,
    config: GraphConfig,
    nodes: Vec<GraphNode>,
    edges: Vec<Edge>,
    blocks: Vec<RoleBlock>,
}

impl DocumentGraph {
    pub fn sentence_count(&self) -> usize {
        self.n
    }

    pub fn config(&self) -> GraphConfig {
        self.config
    }

    pub fn nodes(&self) -> &[GraphNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn blocks(&self) -> &[RoleBlock] {
        &self.blocks
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Indices of the sentence nodes, in storage order.
    pub fn sentence_nodes(&self) -> std::ops::Range<usize> {
        0..self.n
    }

    /// Initial embedding of node `v`.
    pub fn embedding(&self, v: usize) -> &[f64] {
        let block = self
            .blocks
            .iter()
            .rev()
            .find(|b| b.start <= v)
            .expect("node index within graph");
        block.embeddings.row(v - block.start)
    }

    /// For each node `i`, the sources `j` of edges `(j, relation, i)`.
    pub fn in_neighbors(&self, relation: Relation) -> Vec<Vec<usize>> {
        let mut lists = vec![Vec::new(); self.nodes.len()];
        for e in self.edges.iter().filter(|e| e.relation == relation) {
            lists[e.target].push(e.source);
        }
        lists
    }
}

/// Builds the graph for one document from its bank record.
pub fn build_graph(
    doc: &Document,
    record: &BankRecord,
    dims: &BankDims,
    config: GraphConfig,
) -> Result<DocumentGraph> {
    record.check_against(&doc.doc_id, doc.len(), dims)?;
    build_graph_from_record(record, config)
}

/// Same as [`build_graph`] for a record already known to be consistent.
pub fn build_graph_from_record(record: &BankRecord, config: GraphConfig) -> Result<DocumentGraph> {
    let n = record.count(NodeRole::Sentence);
    if n == 0 {
        return Err(Error::Invalid("graph needs at least one sentence".into()));
    }
    for role in [NodeRole::Past, NodeRole::Future] {
        if config.use_csk && record.count(role) != n {
            return Err(Error::Invalid(format!(
                "{} vectors: expected {n}, found {}",
                role.name(),
                record.count(role)
            )));
        }
    }
    if config.use_global && record.count(NodeRole::Global) != 1 {
        return Err(Error::Invalid("expected exactly one global vector".into()));
    }

    let mut nodes = Vec::with_capacity(config.expected_nodes(n));
    let mut blocks = Vec::new();
    for role in config.active_roles() {
        let start = nodes.len();
        let count = if role == NodeRole::Global { 1 } else { n };
        nodes.extend((0..count).map(|i| GraphNode { role, sentence: i }));
        blocks.push(RoleBlock {
            role,
            start,
            embeddings: record.vectors(role).clone(),
        });
    }
    let start_of = |role: NodeRole| blocks.iter().find(|b| b.role == role).map(|b| b.start);

    let mut edges = Vec::with_capacity(config.expected_edges(n));
    for i in 0..n {
        for j in 0..n {
            if i != j {
                edges.push(Edge {
                    source: i,
                    relation: Relation::SentenceToSentence,
                    target: j,
                });
            }
        }
    }
    if let (Some(past), Some(future)) = (start_of(NodeRole::Past), start_of(NodeRole::Future)) {
        let future_rel = if config.merge_csk_relations {
            Relation::PastToSentence
        } else {
            Relation::FutureToSentence
        };
        for i in 0..n {
            edges.push(Edge {
                source: past + i,
                relation: Relation::PastToSentence,
                target: i,
            });
            edges.push(Edge {
                source: future + i,
                relation: future_rel,
                target: i,
            });
        }
    }
    if let Some(g) = start_of(NodeRole::Global) {
        for i in 0..n {
            edges.push(Edge {
                source: g,
                relation: Relation::GlobalToSentence,
                target: i,
            });
        }
    }

    Ok(DocumentGraph {
        n,
        config,
        nodes,
        edges,
        blocks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Split;

    pub(crate) fn record(n: usize, dim: usize) -> BankRecord {
        let m = |rows: usize, off: f64| {
            let data = (0..rows * dim).map(|k| off + k as f64 * 0.5).collect();
            Tensor::matrix(rows, dim, data).unwrap()
        };
        BankRecord::new(m(n, 0.0), m(n, 100.0), m(n, 200.0), m(1, 300.0)).unwrap()
    }

    fn graph(n: usize, config: GraphConfig) -> DocumentGraph {
        build_graph_from_record(&record(n, 2), config).unwrap()
    }

    #[test]
    fn five_sentences_full_config() {
        let g = graph(5, GraphConfig::default());
        assert_eq!(g.node_count(), 16);
        assert_eq!(g.edge_count(), 35);
        let count = |r| g.edges().iter().filter(|e| e.relation == r).count();
        assert_eq!(count(Relation::SentenceToSentence), 20);
        assert_eq!(count(Relation::PastToSentence) + count(Relation::FutureToSentence), 10);
        assert_eq!(count(Relation::GlobalToSentence), 5);
    }

    #[test]
    fn two_sentences_without_csk() {
        let cfg = GraphConfig {
            use_csk: false,
            ..GraphConfig::default()
        };
        let g = graph(2, cfg);
        assert_eq!((g.node_count(), g.edge_count()), (3, 4));
    }

    #[test]
    fn single_sentence_has_no_pair_edges() {
        let g = graph(1, GraphConfig::default());
        assert_eq!((g.node_count(), g.edge_count()), (4, 3));
        assert!(g.edges().iter().all(|e| e.relation != Relation::SentenceToSentence));
    }

    #[test]
    fn closed_forms_for_all_configs() {
        for cfg in GraphConfig::all_combinations() {
            for n in 1..=40 {
                let g = graph(n, cfg);
                assert_eq!(g.node_count(), cfg.expected_nodes(n), "{cfg:?} n={n}");
                assert_eq!(g.edge_count(), cfg.expected_edges(n), "{cfg:?} n={n}");
            }
        }
    }

    #[test]
    fn context_edges_point_into_sentences() {
        for cfg in GraphConfig::all_combinations() {
            let g = graph(4, cfg);
            for e in g.edges() {
                assert_eq!(g.nodes()[e.target].role, NodeRole::Sentence);
                if g.nodes()[e.source].role != NodeRole::Sentence {
                    assert_ne!(e.relation, Relation::SentenceToSentence);
                }
            }
        }
    }

    #[test]
    fn merged_relations_keep_nodes_and_edges() {
        let merged = GraphConfig {
            merge_csk_relations: true,
            ..GraphConfig::default()
        };
        let g = graph(3, merged);
        assert_eq!(g.node_count(), 10);
        assert!(g.edges().iter().all(|e| e.relation != Relation::FutureToSentence));
        assert_eq!(
            g.edges().iter().filter(|e| e.relation == Relation::PastToSentence).count(),
            6
        );
    }

    #[test]
    fn embeddings_follow_layout() {
        let g = graph(2, GraphConfig::default());
        assert_eq!(g.embedding(0), &[0.0, 0.5]);
        assert_eq!(g.embedding(2), &[100.0, 100.5]);
        assert_eq!(g.embedding(5), &[201.0, 201.5]);
        assert_eq!(g.embedding(6), &[300.0, 300.5]);
    }

    #[test]
    fn permuting_sentences_relabels_graph() {
        let n = 4;
        let dim = 3;
        let base = record(n, dim);
        let perm = [2usize, 0, 3, 1]; // new position k holds old sentence perm[k]
        let pick = |role: NodeRole| {
            let rows: Vec<Vec<f64>> = perm.iter().map(|&o| base.vectors(role).row(o).to_vec()).collect();
            Tensor::from_rows(&rows, dim).unwrap()
        };
        let permuted = BankRecord::new(
            pick(NodeRole::Sentence),
            pick(NodeRole::Past),
            pick(NodeRole::Future),
            base.vectors(NodeRole::Global).clone(),
        )
        .unwrap();
        let cfg = GraphConfig::default();
        let g0 = build_graph_from_record(&base, cfg).unwrap();
        let g1 = build_graph_from_record(&permuted, cfg).unwrap();

        // Map node of g1 to node of g0.
        let map = |v: usize| -> usize {
            let node = g1.nodes()[v];
            let block = g1.blocks().iter().find(|b| b.role == node.role).unwrap();
            match node.role {
                NodeRole::Global => v,
                _ => block.start + perm[v - block.start],
            }
        };
        for v in 0..g1.node_count() {
            assert_eq!(g1.embedding(v), g0.embedding(map(v)));
        }
        let mut mapped: Vec<Edge> = g1
            .edges()
            .iter()
            .map(|e| Edge {
                source: map(e.source),
                relation: e.relation,
                target: map(e.target),
            })
            .collect();
        let mut original = g0.edges().to_vec();
        mapped.sort();
        original.sort();
        assert_eq!(mapped, original);
    }

    #[test]
    fn mismatched_record_is_rejected() {
        let doc = Document {
            doc_id: "d".into(),
            split: Split::Test,
            sentences: vec!["a".into(), "b".into(), "c".into()],
        };
        let err = build_graph(&doc, &record(2, 2), &BankDims::uniform(2), GraphConfig::default());
        assert!(matches!(err, Err(Error::BankMismatch { .. })));
    }
}
