//! Rooted partition trees and proportion arithmetic.
//!
//! A tree decomposes an object into disjoint parts down to weighted
//! leaves. Internal node values are the sums of their children, path
//! values are destination/source ratios, chained paths multiply, and
//! the same product symmetry gives the discrete Bayes update.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TreeError {
    #[error("unknown node id '{0}'")]
    UnknownNode(String),
    #[error("duplicate node id '{0}'")]
    DuplicateId(String),
    #[error("node '{id}' cannot have both children and a weight")]
    BadNodeSpec { id: String },
    #[error("node '{parent}' references missing child '{child}'")]
    MissingChild { parent: String, child: String },
    #[error("node '{child}' has more than one parent")]
    MultipleParents { child: String },
    #[error("root '{0}' must not appear as a child")]
    RootHasParent(String),
    #[error("node '{0}' is not reachable from the root")]
    Unreachable(String),
    #[error("leaf '{id}' has invalid weight {weight}; weights are finite and non-negative")]
    BadWeight { id: String, weight: f64 },
    #[error("'{destination}' is not a descendant of '{source_node}'")]
    NotDescendant {
        source_node: String,
        destination: String,
    },
    #[error("source '{0}' has value zero: conditioning on an empty event")]
    EmptySource(String),
    #[error("paths must share a single source; got '{0}' and '{1}'")]
    MixedSources(String, String),
    #[error("destinations '{0}' and '{1}' overlap")]
    OverlappingDestinations(String, String),
    #[error("at least one path is required")]
    NoPaths,
    #[error("prior and likelihood must have equal positive length, got {prior} and {likelihood}")]
    BayesShape { prior: usize, likelihood: usize },
    #[error("{what}[{index}] is negative ({value})")]
    NegativeEntry { what: &'static str, index: usize, value: f64 },
    #[error("prior sums to {sum}, expected 1")]
    UnnormalizedPrior { sum: f64 },
    #[error("evidence is zero: the data are impossible under every hypothesis")]
    ZeroEvidence,
    #[error("invalid tree JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// One node of a tree under construction: an internal node with named
/// children, or a weighted leaf.
#[derive(Debug, Clone)]
pub enum NodeSpec {
    Internal { id: String, children: Vec<String> },
    Leaf { id: String, weight: f64 },
}

impl NodeSpec {
    pub fn internal(id: &str, children: &[&str]) -> NodeSpec {
        NodeSpec::Internal {
            id: id.to_string(),
            children: children.iter().map(|c| c.to_string()).collect(),
        }
    }

    pub fn leaf(id: &str, weight: f64) -> NodeSpec {
        NodeSpec::Leaf {
            id: id.to_string(),
            weight,
        }
    }

    fn id(&self) -> &str {
        match self {
            NodeSpec::Internal { id, .. } | NodeSpec::Leaf { id, .. } => id,
        }
    }
}

/// Serialized form of a tree: `{"nodes": [...], "root": "O"}` where each
/// node is `{"id": ..., "children": [...]}` or `{"id": ..., "weight": w}`.
/// A node with neither is a leaf of weight 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeDoc {
    pub nodes: Vec<NodeDoc>,
    pub root: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDoc {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub children: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
}

/// A source-to-destination query: the destination must lie in the
/// subtree of the source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreePath {
    pub source: String,
    pub destination: String,
}

impl TreePath {
    pub fn new(destination: &str, source: &str) -> TreePath {
        TreePath {
            source: source.to_string(),
            destination: destination.to_string(),
        }
    }
}

/// An immutable rooted partition tree with cached node values.
#[derive(Debug, Clone)]
pub struct PartitionTree {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    children: Vec<Vec<usize>>,
    parent: Vec<Option<usize>>,
    values: Vec<f64>,
    root: usize,
}

impl PartitionTree {
    pub fn from_nodes(nodes: Vec<NodeSpec>, root: &str) -> Result<PartitionTree, TreeError> {
        let mut index = HashMap::new();
        for (i, node) in nodes.iter().enumerate() {
            if index.insert(node.id().to_string(), i).is_some() {
                return Err(TreeError::DuplicateId(node.id().to_string()));
            }
        }
        let root_idx = *index
            .get(root)
            .ok_or_else(|| TreeError::UnknownNode(root.to_string()))?;

        let n = nodes.len();
        let mut children = vec![Vec::new(); n];
        let mut parent = vec![None; n];
        for (i, node) in nodes.iter().enumerate() {
            if let NodeSpec::Internal { id, children: kids } = node {
                if kids.is_empty() {
                    return Err(TreeError::BadNodeSpec { id: id.clone() });
                }
                for child in kids {
                    let c = *index
                        .get(child)
                        .ok_or_else(|| TreeError::MissingChild {
                            parent: id.clone(),
                            child: child.clone(),
                        })?;
                    if parent[c].is_some() {
                        return Err(TreeError::MultipleParents { child: child.clone() });
                    }
                    parent[c] = Some(i);
                    children[i].push(c);
                }
            }
        }
        if parent[root_idx].is_some() {
            return Err(TreeError::RootHasParent(root.to_string()));
        }
        for (i, node) in nodes.iter().enumerate() {
            if i != root_idx && parent[i].is_none() {
                return Err(TreeError::Unreachable(node.id().to_string()));
            }
        }

        // Values bottom-up: leaves carry their weight, internal nodes sum
        // their children. Post-order via a reverse depth-first pass.
        let mut order = Vec::with_capacity(n);
        let mut stack = vec![root_idx];
        while let Some(i) = stack.pop() {
            order.push(i);
            stack.extend(&children[i]);
        }
        let mut values = vec![0.0; n];
        for &i in order.iter().rev() {
            match &nodes[i] {
                NodeSpec::Leaf { id, weight } => {
                    if !weight.is_finite() || *weight < 0.0 {
                        return Err(TreeError::BadWeight {
                            id: id.clone(),
                            weight: *weight,
                        });
                    }
                    values[i] = *weight;
                }
                NodeSpec::Internal { .. } => {
                    values[i] = children[i].iter().map(|&c| values[c]).sum();
                }
            }
        }

        Ok(PartitionTree {
            ids: nodes.iter().map(|s| s.id().to_string()).collect(),
            index,
            children,
            parent,
            values,
            root: root_idx,
        })
    }

    pub fn from_doc(doc: &TreeDoc) -> Result<PartitionTree, TreeError> {
        let nodes = doc
            .nodes
            .iter()
            .map(|node| match (&node.children, node.weight) {
                (Some(children), None) => Ok(NodeSpec::Internal {
                    id: node.id.clone(),
                    children: children.clone(),
                }),
                // A-priori-equivalent base states: weight defaults to 1.
                (None, weight) => Ok(NodeSpec::Leaf {
                    id: node.id.clone(),
                    weight: weight.unwrap_or(1.0),
                }),
                (Some(_), Some(_)) => Err(TreeError::BadNodeSpec { id: node.id.clone() }),
            })
            .collect::<Result<Vec<_>, _>>()?;
        PartitionTree::from_nodes(nodes, &doc.root)
    }

    pub fn from_json(json: &str) -> Result<PartitionTree, TreeError> {
        let doc: TreeDoc = serde_json::from_str(json)?;
        PartitionTree::from_doc(&doc)
    }

    pub fn root(&self) -> &str {
        &self.ids[self.root]
    }

    pub fn node_ids(&self) -> impl Iterator<Item = &str> {
        self.ids.iter().map(String::as_str)
    }

    pub fn children_of(&self, id: &str) -> Result<Vec<&str>, TreeError> {
        let i = self.node_index(id)?;
        Ok(self.children[i].iter().map(|&c| self.ids[c].as_str()).collect())
    }

    fn node_index(&self, id: &str) -> Result<usize, TreeError> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| TreeError::UnknownNode(id.to_string()))
    }

    /// True when `descendant` lies in the subtree rooted at `ancestor`
    /// (a node is its own descendant).
    fn is_descendant(&self, descendant: usize, ancestor: usize) -> bool {
        let mut node = descendant;
        loop {
            if node == ancestor {
                return true;
            }
            match self.parent[node] {
                Some(p) => node = p,
                None => return false,
            }
        }
    }

    /// Value of a node: its weight for leaves, the sum of its children's
    /// values otherwise.
    pub fn node_value(&self, id: &str) -> Result<f64, TreeError> {
        Ok(self.values[self.node_index(id)?])
    }

    /// Proportion carried by a source-to-destination path:
    /// `value(destination) / value(source)`.
    pub fn path_value(&self, path: &TreePath) -> Result<f64, TreeError> {
        let source = self.node_index(&path.source)?;
        let destination = self.node_index(&path.destination)?;
        if !self.is_descendant(destination, source) {
            return Err(TreeError::NotDescendant {
                source_node: path.source.clone(),
                destination: path.destination.clone(),
            });
        }
        if self.values[source] == 0.0 {
            return Err(TreeError::EmptySource(path.source.clone()));
        }
        Ok(self.values[destination] / self.values[source])
    }

    /// Sum of path values for disjoint destinations under one source.
    pub fn sibling_path_sum(&self, paths: &[TreePath]) -> Result<f64, TreeError> {
        let first = paths.first().ok_or(TreeError::NoPaths)?;
        let mut destinations = Vec::with_capacity(paths.len());
        for path in paths {
            if path.source != first.source {
                return Err(TreeError::MixedSources(
                    first.source.clone(),
                    path.source.clone(),
                ));
            }
            destinations.push(self.node_index(&path.destination)?);
        }
        for (a, &da) in destinations.iter().enumerate() {
            for &db in &destinations[a + 1..] {
                if self.is_descendant(da, db) || self.is_descendant(db, da) {
                    return Err(TreeError::OverlappingDestinations(
                        self.ids[da].clone(),
                        self.ids[db].clone(),
                    ));
                }
            }
        }
        paths.iter().map(|p| self.path_value(p)).sum()
    }
}

/// Chained paths multiply.
pub fn chain(p1: f64, p2: f64) -> f64 {
    p1 * p2
}

/// Discrete Bayes update: returns `(posterior, evidence)` with
/// `posterior[k] = prior[k]·likelihood[k] / evidence`.
pub fn bayes(prior: &[f64], likelihood: &[f64]) -> Result<(Vec<f64>, f64), TreeError> {
    if prior.is_empty() || prior.len() != likelihood.len() {
        return Err(TreeError::BayesShape {
            prior: prior.len(),
            likelihood: likelihood.len(),
        });
    }
    for (what, values) in [("prior", prior), ("likelihood", likelihood)] {
        for (index, &value) in values.iter().enumerate() {
            if value < 0.0 || !value.is_finite() {
                return Err(TreeError::NegativeEntry { what, index, value });
            }
        }
    }
    let sum: f64 = prior.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(TreeError::UnnormalizedPrior { sum });
    }
    let evidence: f64 = prior.iter().zip(likelihood).map(|(p, l)| p * l).sum();
    if evidence <= 0.0 {
        return Err(TreeError::ZeroEvidence);
    }
    let posterior = prior
        .iter()
        .zip(likelihood)
        .map(|(p, l)| p * l / evidence)
        .collect();
    Ok((posterior, evidence))
}

/// The worked nine-leaf example tree: `O = A ⊕ D`, `A = B ⊕ C`, with
/// B over 2 unit leaves, C over 4, and D over 3.
pub fn worked_example() -> PartitionTree {
    let mut nodes = vec![
        NodeSpec::internal("O", &["A", "D"]),
        NodeSpec::internal("A", &["B", "C"]),
        NodeSpec::internal("B", &["b1", "b2"]),
        NodeSpec::internal("C", &["c1", "c2", "c3", "c4"]),
        NodeSpec::internal("D", &["d1", "d2", "d3"]),
    ];
    for leaf in ["b1", "b2", "c1", "c2", "c3", "c4", "d1", "d2", "d3"] {
        nodes.push(NodeSpec::leaf(leaf, 1.0));
    }
    PartitionTree::from_nodes(nodes, "O").expect("worked example is valid")
}
