//! Weighted dependency graph of capacity-building nodes.
//!
//! A [`SkillsGraph`] is immutable once built. Every constructor validates the
//! structural invariants (unique ids, known endpoints, no self loops, positive
//! weights) and, unless explicitly relaxed, acyclicity. Code that needs a
//! changed graph builds a new one, see [`SkillsGraph::with_edge_weights`].

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("duplicate node id `{0}`")]
    DuplicateNodeId(String),
    #[error("edge {from}->{to} references unknown node `{missing}`")]
    UnknownEndpoint {
        from: String,
        to: String,
        missing: String,
    },
    #[error("duplicate edge {0}->{1}")]
    DuplicateEdge(String, String),
    #[error("self loop on `{0}`")]
    SelfLoop(String),
    #[error("edge {from}->{to} has non-positive weight {weight}")]
    NonPositiveWeight { from: String, to: String, weight: f64 },
    #[error("{owner}: field `{field}` must be a finite non-negative number, got {value}")]
    InvalidAttribute {
        owner: String,
        field: &'static str,
        value: f64,
    },
    #[error("cycle detected: {}", .0.join(" -> "))]
    CycleDetected(Vec<String>),
    #[error("graph has no edges")]
    EmptyGraph,
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("unknown edge {0}->{1}")]
    UnknownEdge(String, String),
    #[error("graph file: {message}")]
    Parse {
        message: String,
        line: usize,
        column: usize,
    },
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

/// A capacity node: an intervention or competency area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkillNode {
    pub id: String,
    pub label: String,
    /// Utility per unit of resource.
    pub effectiveness: f64,
    /// Cost of selecting the node as a whole.
    pub cost: f64,
    /// Maximum resource the node can absorb; `None` is unbounded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity: Option<f64>,
}

impl SkillNode {
    pub fn new(id: impl Into<String>, effectiveness: f64, cost: f64) -> Self {
        let id = id.into();
        SkillNode {
            label: id.clone(),
            id,
            effectiveness,
            cost,
            capacity: None,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_capacity(mut self, capacity: f64) -> Self {
        self.capacity = Some(capacity);
        self
    }
}

/// Directed dependency `from -> to`: `to` depends on `from`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DependencyEdge {
    pub from: String,
    pub to: String,
    /// Dependency strength, also the path cost of traversing the edge.
    pub weight: f64,
    /// Additive per-edge contribution to a path's secondary objective.
    #[serde(default)]
    pub objective_cost: f64,
}

impl DependencyEdge {
    pub fn new(from: impl Into<String>, to: impl Into<String>, weight: f64) -> Self {
        DependencyEdge {
            from: from.into(),
            to: to.into(),
            weight,
            objective_cost: 0.0,
        }
    }

    pub fn with_objective_cost(mut self, objective_cost: f64) -> Self {
        self.objective_cost = objective_cost;
        self
    }
}

/// Named non-negative scores in a fixed, deterministic order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeScores(IndexMap<String, f64>);

impl NodeScores {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: impl Into<String>, score: f64) {
        self.0.insert(id.into(), score);
    }

    pub fn get(&self, id: &str) -> Option<f64> {
        self.0.get(id).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.values().sum()
    }
}

impl FromIterator<(String, f64)> for NodeScores {
    fn from_iter<I: IntoIterator<Item = (String, f64)>>(iter: I) -> Self {
        NodeScores(iter.into_iter().collect())
    }
}

/// On-disk layout of a graph file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub nodes: Vec<SkillNode>,
    pub edges: Vec<DependencyEdge>,
}

#[derive(Debug, Clone)]
pub struct SkillsGraph {
    nodes: Vec<SkillNode>,
    edges: Vec<DependencyEdge>,
    allow_cycles: bool,
    index: HashMap<String, usize>,
    edge_index: HashMap<(usize, usize), usize>,
    /// Outgoing edge indices per node, in edge insertion order.
    out_edges: Vec<Vec<usize>>,
    endpoints: Vec<(usize, usize)>,
}

impl PartialEq for SkillsGraph {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes
            && self.edges == other.edges
            && self.allow_cycles == other.allow_cycles
    }
}

fn check_attr(owner: &str, field: &'static str, value: f64) -> Result<(), GraphError> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(GraphError::InvalidAttribute {
            owner: owner.to_string(),
            field,
            value,
        })
    }
}

impl SkillsGraph {
    /// Builds a validated, acyclic graph.
    pub fn new(nodes: Vec<SkillNode>, edges: Vec<DependencyEdge>) -> Result<Self, GraphError> {
        let graph = Self::assemble(nodes, edges, false)?;
        graph.topological_order()?;
        Ok(graph)
    }

    /// Builds a validated graph that may contain directed cycles. Only the
    /// Markov tooling should need this.
    pub fn new_allowing_cycles(
        nodes: Vec<SkillNode>,
        edges: Vec<DependencyEdge>,
    ) -> Result<Self, GraphError> {
        Self::assemble(nodes, edges, true)
    }

    fn assemble(
        nodes: Vec<SkillNode>,
        edges: Vec<DependencyEdge>,
        allow_cycles: bool,
    ) -> Result<Self, GraphError> {
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, node) in nodes.iter().enumerate() {
            if index.insert(node.id.clone(), i).is_some() {
                return Err(GraphError::DuplicateNodeId(node.id.clone()));
            }
            check_attr(&node.id, "effectiveness", node.effectiveness)?;
            check_attr(&node.id, "cost", node.cost)?;
            if let Some(cap) = node.capacity {
                check_attr(&node.id, "capacity", cap)?;
            }
        }

        let mut edge_index = HashMap::with_capacity(edges.len());
        let mut out_edges = vec![Vec::new(); nodes.len()];
        let mut endpoints = Vec::with_capacity(edges.len());
        for (k, edge) in edges.iter().enumerate() {
            let lookup = |id: &str| {
                index
                    .get(id)
                    .copied()
                    .ok_or_else(|| GraphError::UnknownEndpoint {
                        from: edge.from.clone(),
                        to: edge.to.clone(),
                        missing: id.to_string(),
                    })
            };
            let from = lookup(&edge.from)?;
            let to = lookup(&edge.to)?;
            if from == to {
                return Err(GraphError::SelfLoop(edge.from.clone()));
            }
            if !(edge.weight.is_finite() && edge.weight > 0.0) {
                return Err(GraphError::NonPositiveWeight {
                    from: edge.from.clone(),
                    to: edge.to.clone(),
                    weight: edge.weight,
                });
            }
            check_attr(
                &format!("{}->{}", edge.from, edge.to),
                "objective_cost",
                edge.objective_cost,
            )?;
            if edge_index.insert((from, to), k).is_some() {
                return Err(GraphError::DuplicateEdge(edge.from.clone(), edge.to.clone()));
            }
            out_edges[from].push(k);
            endpoints.push((from, to));
        }

        Ok(SkillsGraph {
            nodes,
            edges,
            allow_cycles,
            index,
            edge_index,
            out_edges,
            endpoints,
        })
    }

    pub fn from_json_str(text: &str) -> Result<Self, GraphError> {
        let file: GraphFile = serde_json::from_str(text).map_err(|e| GraphError::Parse {
            message: e.to_string(),
            line: e.line(),
            column: e.column(),
        })?;
        Self::new(file.nodes, file.edges)
    }

    pub fn load(path: &Path) -> Result<Self, GraphError> {
        let text = std::fs::read_to_string(path).map_err(|e| GraphError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json_str(&text)
    }

    pub fn to_file(&self) -> GraphFile {
        GraphFile {
            nodes: self.nodes.clone(),
            edges: self.edges.clone(),
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("graph serializes")
    }

    pub fn nodes(&self) -> &[SkillNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[DependencyEdge] {
        &self.edges
    }

    pub fn allows_cycles(&self) -> bool {
        self.allow_cycles
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn node(&self, id: &str) -> Option<&SkillNode> {
        self.node_index(id).map(|i| &self.nodes[i])
    }

    pub fn edge(&self, from: &str, to: &str) -> Option<&DependencyEdge> {
        let key = (self.node_index(from)?, self.node_index(to)?);
        self.edge_index.get(&key).map(|&k| &self.edges[k])
    }

    pub fn edge_position(&self, from: &str, to: &str) -> Option<usize> {
        let key = (self.node_index(from)?, self.node_index(to)?);
        self.edge_index.get(&key).copied()
    }

    /// Outgoing edge indices of node `i`, in edge insertion order.
    pub fn out_edge_indices(&self, i: usize) -> &[usize] {
        &self.out_edges[i]
    }

    /// `(from, to)` node indices of edge `k`.
    pub fn endpoints(&self, k: usize) -> (usize, usize) {
        self.endpoints[k]
    }

    /// Returns a copy of the graph whose edge weights are replaced by
    /// `weights` (one per edge, in edge order). The input is untouched.
    pub fn with_edge_weights(&self, weights: &[f64]) -> Result<Self, GraphError> {
        assert_eq!(weights.len(), self.edges.len(), "one weight per edge");
        let edges = self
            .edges
            .iter()
            .zip(weights)
            .map(|(e, &w)| DependencyEdge { weight: w, ..e.clone() })
            .collect();
        let graph = Self::assemble(self.nodes.clone(), edges, self.allow_cycles)?;
        Ok(graph)
    }

    /// Kahn elimination with ties broken by node insertion order. On failure
    /// a witness cycle is reported, rotated to start at its earliest node.
    pub fn topological_order(&self) -> Result<Vec<String>, GraphError> {
        let n = self.nodes.len();
        let mut indegree = vec![0usize; n];
        for &(_, to) in &self.endpoints {
            indegree[to] += 1;
        }
        let mut ready: BinaryHeap<Reverse<usize>> = (0..n)
            .filter(|&i| indegree[i] == 0)
            .map(Reverse)
            .collect();
        let mut order = Vec::with_capacity(n);
        while let Some(Reverse(i)) = ready.pop() {
            order.push(i);
            for &k in &self.out_edges[i] {
                let to = self.endpoints[k].1;
                indegree[to] -= 1;
                if indegree[to] == 0 {
                    ready.push(Reverse(to));
                }
            }
        }
        if order.len() == n {
            return Ok(order.into_iter().map(|i| self.nodes[i].id.clone()).collect());
        }
        Err(GraphError::CycleDetected(self.witness_cycle(&indegree)))
    }

    /// Every node left over by Kahn elimination has a remaining predecessor,
    /// so walking predecessors must revisit a node.
    fn witness_cycle(&self, residual_indegree: &[usize]) -> Vec<String> {
        let residual: HashSet<usize> = (0..self.nodes.len())
            .filter(|&i| residual_indegree[i] > 0)
            .collect();
        let start = *residual.iter().min().expect("non-empty residual");
        let mut walk = vec![start];
        let mut seen = HashMap::from([(start, 0usize)]);
        let mut current = start;
        loop {
            let pred = self
                .endpoints
                .iter()
                .find(|&&(from, to)| to == current && residual.contains(&from))
                .map(|&(from, _)| from)
                .expect("residual node has a residual predecessor");
            if let Some(&pos) = seen.get(&pred) {
                let mut cycle: Vec<usize> = walk[pos..].to_vec();
                cycle.reverse();
                let min_pos = cycle
                    .iter()
                    .enumerate()
                    .min_by_key(|&(_, &v)| v)
                    .map(|(p, _)| p)
                    .unwrap_or(0);
                cycle.rotate_left(min_pos);
                return cycle.into_iter().map(|i| self.nodes[i].id.clone()).collect();
            }
            seen.insert(pred, walk.len());
            walk.push(pred);
            current = pred;
        }
    }
}

impl fmt::Display for SkillsGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "SkillsGraph({} nodes, {} edges)",
            self.nodes.len(),
            self.edges.len()
        )
    }
}

/// Validating constructor, mirroring [`SkillsGraph::new`].
pub fn build_graph(
    nodes: Vec<SkillNode>,
    edges: Vec<DependencyEdge>,
) -> Result<SkillsGraph, GraphError> {
    SkillsGraph::new(nodes, edges)
}

/// Topological order of the graph, or the witness cycle that prevents one.
pub fn validate_dag(graph: &SkillsGraph) -> Result<Vec<String>, GraphError> {
    graph.topological_order()
}

/// Share of total edge weight carried by each node's outgoing edges.
pub fn weighted_centrality(graph: &SkillsGraph) -> Result<NodeScores, GraphError> {
    if graph.edge_count() == 0 {
        return Err(GraphError::EmptyGraph);
    }
    let total: f64 = graph.edges().iter().map(|e| e.weight).sum();
    let mut out = vec![0.0; graph.node_count()];
    for (k, edge) in graph.edges().iter().enumerate() {
        out[graph.endpoints(k).0] += edge.weight;
    }
    Ok(graph
        .nodes()
        .iter()
        .zip(out)
        .map(|(node, w)| (node.id.clone(), w / total))
        .collect())
}

/// The five-node case-study graph with its nine dependencies, unit weights
/// and zero objective costs. Node attributes are illustrative.
pub fn case_study_graph() -> SkillsGraph {
    let labels = [
        ("v1", "Training Programs"),
        ("v2", "Technological Infrastructure"),
        ("v3", "Human Resources Development"),
        ("v4", "Incident Response Planning"),
        ("v5", "Strategic Planning"),
    ];
    let nodes = labels
        .iter()
        .map(|(id, label)| SkillNode::new(*id, 1.0, 1.0).with_label(*label))
        .collect();
    SkillsGraph::new(nodes, case_study_edges(1.0)).expect("case study graph is valid")
}

pub fn case_study_edges(weight: f64) -> Vec<DependencyEdge> {
    [
        ("v1", "v2"),
        ("v1", "v3"),
        ("v2", "v3"),
        ("v2", "v4"),
        ("v3", "v4"),
        ("v1", "v5"),
        ("v2", "v5"),
        ("v3", "v5"),
        ("v4", "v5"),
    ]
    .iter()
    .map(|(a, b)| DependencyEdge::new(*a, *b, weight))
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn nodes(ids: &[&str]) -> Vec<SkillNode> {
        ids.iter().map(|id| SkillNode::new(*id, 1.0, 1.0)).collect()
    }

    #[test]
    fn case_study_shape() {
        let g = case_study_graph();
        assert_eq!(g.node_count(), 5);
        assert_eq!(g.edge_count(), 9);
    }

    #[test]
    fn empty_graph_is_valid() {
        let g = build_graph(vec![], vec![]).unwrap();
        assert_eq!(g.node_count(), 0);
        assert_eq!(validate_dag(&g).unwrap(), Vec::<String>::new());
    }

    #[test]
    fn unknown_endpoint() {
        let err = build_graph(nodes(&["v1"]), vec![DependencyEdge::new("v1", "v9", 1.0)])
            .unwrap_err();
        assert!(matches!(err, GraphError::UnknownEndpoint { ref missing, .. } if missing == "v9"));
    }

    #[test]
    fn structural_errors() {
        assert_eq!(
            build_graph(nodes(&["a", "a"]), vec![]).unwrap_err(),
            GraphError::DuplicateNodeId("a".into())
        );
        assert_eq!(
            build_graph(nodes(&["a"]), vec![DependencyEdge::new("a", "a", 1.0)]).unwrap_err(),
            GraphError::SelfLoop("a".into())
        );
        let dup = vec![DependencyEdge::new("a", "b", 1.0), DependencyEdge::new("a", "b", 2.0)];
        assert_eq!(
            build_graph(nodes(&["a", "b"]), dup).unwrap_err(),
            GraphError::DuplicateEdge("a".into(), "b".into())
        );
        for w in [0.0, -1.0, f64::NAN] {
            let err = build_graph(nodes(&["a", "b"]), vec![DependencyEdge::new("a", "b", w)])
                .unwrap_err();
            assert!(matches!(err, GraphError::NonPositiveWeight { .. }));
        }
        let bad = vec![SkillNode::new("a", -1.0, 0.0)];
        assert!(matches!(
            build_graph(bad, vec![]).unwrap_err(),
            GraphError::InvalidAttribute { field: "effectiveness", .. }
        ));
    }

    #[test]
    fn ids_are_case_sensitive() {
        let g = build_graph(nodes(&["A", "a"]), vec![DependencyEdge::new("A", "a", 1.0)]).unwrap();
        assert_eq!(g.node_count(), 2);
    }

    #[test]
    fn case_study_topological_order() {
        let order = validate_dag(&case_study_graph()).unwrap();
        assert_eq!(order, vec!["v1", "v2", "v3", "v4", "v5"]);
    }

    #[test]
    fn single_node_order() {
        let g = build_graph(nodes(&["v"]), vec![]).unwrap();
        assert_eq!(validate_dag(&g).unwrap(), vec!["v"]);
    }

    #[test]
    fn two_cycle_witness() {
        let edges = vec![DependencyEdge::new("a", "b", 1.0), DependencyEdge::new("b", "a", 1.0)];
        let err = build_graph(nodes(&["a", "b"]), edges.clone()).unwrap_err();
        assert_eq!(err, GraphError::CycleDetected(vec!["a".into(), "b".into()]));
        let g = SkillsGraph::new_allowing_cycles(nodes(&["a", "b"]), edges).unwrap();
        assert!(validate_dag(&g).is_err());
    }

    #[test]
    fn cycle_witness_skips_downstream_nodes() {
        // x feeds the cycle b -> c -> d -> b, which feeds e.
        let edges = vec![
            DependencyEdge::new("x", "b", 1.0),
            DependencyEdge::new("b", "c", 1.0),
            DependencyEdge::new("c", "d", 1.0),
            DependencyEdge::new("d", "b", 1.0),
            DependencyEdge::new("d", "e", 1.0),
        ];
        let g = SkillsGraph::new_allowing_cycles(nodes(&["x", "e", "b", "c", "d"]), edges).unwrap();
        match validate_dag(&g).unwrap_err() {
            GraphError::CycleDetected(c) => assert_eq!(c, vec!["b", "c", "d"]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn case_study_unit_centrality() {
        let c = weighted_centrality(&case_study_graph()).unwrap();
        let expected = [3.0 / 9.0, 3.0 / 9.0, 2.0 / 9.0, 1.0 / 9.0, 0.0];
        for ((_, got), want) in c.iter().zip(expected) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn single_edge_centrality() {
        let g = build_graph(nodes(&["a", "b"]), vec![DependencyEdge::new("a", "b", 7.0)]).unwrap();
        let c = weighted_centrality(&g).unwrap();
        assert_eq!(c.get("a"), Some(1.0));
        assert_eq!(c.get("b"), Some(0.0));
    }

    #[test]
    fn centrality_needs_edges() {
        let g = build_graph(nodes(&["a"]), vec![]).unwrap();
        assert_eq!(weighted_centrality(&g).unwrap_err(), GraphError::EmptyGraph);
    }

    #[test]
    fn json_rejects_unknown_keys_and_defaults_optional_fields() {
        let text = r#"{"nodes":[{"id":"a","label":"A","effectiveness":1,"cost":2},
                                 {"id":"b","label":"B","effectiveness":1,"cost":2,"capacity":3}],
                       "edges":[{"from":"a","to":"b","weight":2}]}"#;
        let g = SkillsGraph::from_json_str(text).unwrap();
        assert_eq!(g.node("a").unwrap().capacity, None);
        assert_eq!(g.node("b").unwrap().capacity, Some(3.0));
        assert_eq!(g.edge("a", "b").unwrap().objective_cost, 0.0);

        let extra = r#"{"nodes":[],"edges":[],"colour":"red"}"#;
        assert!(matches!(
            SkillsGraph::from_json_str(extra).unwrap_err(),
            GraphError::Parse { .. }
        ));
        let extra_node = r#"{"nodes":[{"id":"a","label":"A","effectiveness":1,"cost":2,"x":1}],"edges":[]}"#;
        assert!(SkillsGraph::from_json_str(extra_node).is_err());
    }

    #[test]
    fn parse_error_has_location() {
        let err = SkillsGraph::from_json_str("{\n  \"nodes\": [,\n").unwrap_err();
        match err {
            GraphError::Parse { line, column, .. } => {
                assert_eq!(line, 2);
                assert!(column > 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn with_edge_weights_leaves_input_alone() {
        let g = case_study_graph();
        let before = g.clone();
        let h = g.with_edge_weights(&[2.0; 9]).unwrap();
        assert_eq!(g, before);
        assert!(h.edges().iter().all(|e| e.weight == 2.0));
    }

    /// Random DAG over `n` nodes: edges only go from lower to higher index,
    /// then nodes are inserted in a shuffled order.
    fn random_dag() -> impl Strategy<Value = SkillsGraph> {
        (2usize..9)
            .prop_flat_map(|n| {
                let pairs: Vec<(usize, usize)> =
                    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
                let m = pairs.len();
                (
                    Just(n),
                    Just(pairs),
                    proptest::collection::vec(proptest::option::weighted(0.5, 0.01f64..50.0), m),
                    Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
                )
            })
            .prop_map(|(n, pairs, weights, perm)| {
                let ids: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
                let nodes = perm.iter().map(|&i| SkillNode::new(ids[i].clone(), 1.0, 1.0)).collect();
                let edges = pairs
                    .iter()
                    .zip(weights)
                    .filter_map(|(&(i, j), w)| {
                        w.map(|w| DependencyEdge::new(ids[i].clone(), ids[j].clone(), w))
                    })
                    .collect();
                SkillsGraph::new(nodes, edges).unwrap()
            })
    }

    proptest! {
        #[test]
        fn topological_order_points_edges_forward(g in random_dag()) {
            let order = validate_dag(&g).unwrap();
            let pos: HashMap<&str, usize> =
                order.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
            for e in g.edges() {
                prop_assert!(pos[e.from.as_str()] < pos[e.to.as_str()]);
            }
        }

        #[test]
        fn centrality_sums_to_one_and_is_scale_free(g in random_dag(), k in 0.001f64..1000.0) {
            prop_assume!(g.edge_count() > 0);
            let c = weighted_centrality(&g).unwrap();
            prop_assert!((c.total() - 1.0).abs() < 1e-9);
            prop_assert!(c.iter().all(|(_, s)| s >= 0.0));
            let scaled: Vec<f64> = g.edges().iter().map(|e| e.weight * k).collect();
            let c2 = weighted_centrality(&g.with_edge_weights(&scaled).unwrap()).unwrap();
            for ((_, a), (_, b)) in c.iter().zip(c2.iter()) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn json_round_trip(g in random_dag()) {
            let back = SkillsGraph::from_json_str(&g.to_json_string()).unwrap();
            prop_assert_eq!(back, g);
        }
    }
}
