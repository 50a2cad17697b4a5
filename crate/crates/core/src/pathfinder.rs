//! Minimum-weight paths under an additive objective budget.
//!
//! A path's cost is the sum of its edge weights; its objective is the sum of
//! edge `objective_cost` values. [`find_optimal_path`] returns the cheapest
//! path whose objective stays within the threshold, breaking cost ties by the
//! lexicographically smallest node-id sequence.
//!
//! With a threshold the search is a bi-criteria label-setting algorithm that
//! keeps, per node, only labels not dominated by an already settled one.
//! Without a threshold it is plain Dijkstra.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::SkillsGraph;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PathError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("no feasible path from `{from}` to `{to}`")]
    NoFeasiblePath { from: String, to: String },
    #[error("threshold must be non-negative, got {0}")]
    InvalidThreshold(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathQuery {
    pub source: String,
    pub target: String,
    /// Upper bound on the path objective; `None` is unbounded.
    #[serde(default)]
    pub threshold: Option<f64>,
}

impl PathQuery {
    pub fn new(source: impl Into<String>, target: impl Into<String>, threshold: Option<f64>) -> Self {
        PathQuery {
            source: source.into(),
            target: target.into(),
            threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub nodes: Vec<String>,
    pub cost: f64,
    pub objective: f64,
}

/// Search label. `ranks` holds the id-rank of each node on the path, so that
/// comparing rank vectors compares the id sequences lexicographically.
#[derive(Debug, Clone)]
struct Label {
    cost: f64,
    objective: f64,
    node: usize,
    ranks: Vec<usize>,
    nodes: Vec<usize>,
}

impl Label {
    fn key_cmp(&self, other: &Self) -> Ordering {
        self.cost
            .total_cmp(&other.cost)
            .then_with(|| self.ranks.cmp(&other.ranks))
    }
}

impl PartialEq for Label {
    fn eq(&self, other: &Self) -> bool {
        self.key_cmp(other) == Ordering::Equal
    }
}

impl Eq for Label {}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// Reversed: BinaryHeap is a max-heap and we pop the smallest key first.
impl Ord for Label {
    fn cmp(&self, other: &Self) -> Ordering {
        other.key_cmp(self)
    }
}

struct Search<'g> {
    graph: &'g SkillsGraph,
    id_rank: Vec<usize>,
    source: usize,
    target: usize,
}

impl<'g> Search<'g> {
    fn prepare(graph: &'g SkillsGraph, query: &PathQuery) -> Result<Self, PathError> {
        if let Some(t) = query.threshold {
            if !(t >= 0.0) {
                return Err(PathError::InvalidThreshold(t));
            }
        }
        let lookup = |id: &str| {
            graph
                .node_index(id)
                .ok_or_else(|| PathError::UnknownNode(id.to_string()))
        };
        let source = lookup(&query.source)?;
        let target = lookup(&query.target)?;
        let mut by_id: Vec<usize> = (0..graph.node_count()).collect();
        by_id.sort_by(|&a, &b| graph.nodes()[a].id.cmp(&graph.nodes()[b].id));
        let mut id_rank = vec![0; by_id.len()];
        for (rank, i) in by_id.into_iter().enumerate() {
            id_rank[i] = rank;
        }
        Ok(Search {
            graph,
            id_rank,
            source,
            target,
        })
    }

    fn start(&self) -> Label {
        Label {
            cost: 0.0,
            objective: 0.0,
            node: self.source,
            ranks: vec![self.id_rank[self.source]],
            nodes: vec![self.source],
        }
    }

    fn extend(&self, label: &Label, edge: usize) -> Label {
        let e = &self.graph.edges()[edge];
        let to = self.graph.endpoints(edge).1;
        let mut ranks = label.ranks.clone();
        ranks.push(self.id_rank[to]);
        let mut nodes = label.nodes.clone();
        nodes.push(to);
        Label {
            cost: label.cost + e.weight,
            objective: label.objective + e.objective_cost,
            node: to,
            ranks,
            nodes,
        }
    }

    fn to_path(&self, label: Label) -> Path {
        Path {
            nodes: label
                .nodes
                .iter()
                .map(|&i| self.graph.nodes()[i].id.clone())
                .collect(),
            cost: label.cost,
            objective: label.objective,
        }
    }

    fn infeasible(&self) -> PathError {
        PathError::NoFeasiblePath {
            from: self.graph.nodes()[self.source].id.clone(),
            to: self.graph.nodes()[self.target].id.clone(),
        }
    }

    fn dijkstra(&self) -> Result<Path, PathError> {
        let mut settled = vec![false; self.graph.node_count()];
        let mut heap = BinaryHeap::from([self.start()]);
        while let Some(label) = heap.pop() {
            if settled[label.node] {
                continue;
            }
            settled[label.node] = true;
            if label.node == self.target {
                return Ok(self.to_path(label));
            }
            for &k in self.graph.out_edge_indices(label.node) {
                if !settled[self.graph.endpoints(k).1] {
                    heap.push(self.extend(&label, k));
                }
            }
        }
        Err(self.infeasible())
    }

    /// Labels pop in (cost, id sequence) order, so any settled label at a node
    /// already precedes a new one there. The new label is dominated as soon
    /// as a settled label has no larger objective.
    fn label_setting(&self, threshold: f64) -> Result<Path, PathError> {
        let mut settled_objectives: Vec<Vec<f64>> = vec![Vec::new(); self.graph.node_count()];
        let mut heap = BinaryHeap::from([self.start()]);
        while let Some(label) = heap.pop() {
            let front = &mut settled_objectives[label.node];
            if front.iter().any(|&o| o <= label.objective) {
                continue;
            }
            front.push(label.objective);
            if label.node == self.target {
                return Ok(self.to_path(label));
            }
            for &k in self.graph.out_edge_indices(label.node) {
                let next = self.extend(&label, k);
                if next.objective <= threshold
                    && !label.nodes.contains(&next.node)
                    && !settled_objectives[next.node]
                        .iter()
                        .any(|&o| o <= next.objective)
                {
                    heap.push(next);
                }
            }
        }
        Err(self.infeasible())
    }
}

/// Cheapest path with objective at most the query threshold.
pub fn find_optimal_path(graph: &SkillsGraph, query: &PathQuery) -> Result<Path, PathError> {
    let search = Search::prepare(graph, query)?;
    match query.threshold {
        None => search.dijkstra(),
        Some(t) => search.label_setting(t),
    }
}

/// Single-criterion shortest path, ignoring objective costs.
pub fn shortest_path(graph: &SkillsGraph, source: &str, target: &str) -> Result<Path, PathError> {
    Search::prepare(graph, &PathQuery::new(source, target, None))?.dijkstra()
}

/// Every simple `source -> target` path, depth first, following out-edges in
/// insertion order.
pub fn enumerate_paths(graph: &SkillsGraph, source: &str, target: &str) -> Result<Vec<Path>, PathError> {
    let lookup = |id: &str| {
        graph
            .node_index(id)
            .ok_or_else(|| PathError::UnknownNode(id.to_string()))
    };
    let source = lookup(source)?;
    let target = lookup(target)?;

    fn walk(
        graph: &SkillsGraph,
        at: usize,
        target: usize,
        stack: &mut Vec<usize>,
        on_stack: &mut [bool],
        cost: f64,
        objective: f64,
        out: &mut Vec<Path>,
    ) {
        if at == target {
            out.push(Path {
                nodes: stack.iter().map(|&i| graph.nodes()[i].id.clone()).collect(),
                cost,
                objective,
            });
            return;
        }
        for &k in graph.out_edge_indices(at) {
            let to = graph.endpoints(k).1;
            if on_stack[to] {
                continue;
            }
            let e = &graph.edges()[k];
            stack.push(to);
            on_stack[to] = true;
            walk(
                graph,
                to,
                target,
                stack,
                on_stack,
                cost + e.weight,
                objective + e.objective_cost,
                out,
            );
            on_stack[to] = false;
            stack.pop();
        }
    }

    let mut out = Vec::new();
    let mut stack = vec![source];
    let mut on_stack = vec![false; graph.node_count()];
    on_stack[source] = true;
    walk(graph, source, target, &mut stack, &mut on_stack, 0.0, 0.0, &mut out);
    Ok(out)
}

/// Recomputes a path's cost and objective from the graph, or `None` when a
/// consecutive pair is not an edge.
pub fn path_sums(graph: &SkillsGraph, nodes: &[String]) -> Option<(f64, f64)> {
    nodes.windows(2).try_fold((0.0, 0.0), |(c, o), pair| {
        let e = graph.edge(&pair[0], &pair[1])?;
        Some((c + e.weight, o + e.objective_cost))
    })
}
