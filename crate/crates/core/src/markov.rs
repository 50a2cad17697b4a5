//! Discrete-time Markov model over graph states.

use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::SkillsGraph;

const ROW_TOL: f64 = 1e-12;
const STEP_TOL: f64 = 1e-12;
const RESIDUAL_TOL: f64 = 1e-9;
const MAX_ITERATIONS: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MarkovError {
    #[error("negative count {value} at row {row}, column {column}")]
    NegativeCount { row: usize, column: usize, value: i64 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("distribution states do not match the matrix states")]
    StateMismatch,
    #[error("invalid probability: {0}")]
    InvalidProbability(String),
    #[error("no stationary distribution after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("counts file: {0}")]
    Parse(String),
}

/// Row-stochastic matrix; row `i` is the next-state distribution from state `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    states: Vec<String>,
    rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDistribution {
    states: Vec<String>,
    probabilities: Vec<f64>,
}

fn check_distribution(values: &[f64], what: &str) -> Result<(), MarkovError> {
    if values.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
        return Err(MarkovError::InvalidProbability(format!("{what}: entry outside [0, 1]")));
    }
    let sum: f64 = values.iter().sum();
    if (sum - 1.0).abs() > ROW_TOL {
        return Err(MarkovError::InvalidProbability(format!("{what}: sums to {sum}")));
    }
    Ok(())
}

impl TransitionMatrix {
    pub fn new(states: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self, MarkovError> {
        if rows.len() != states.len() || rows.iter().any(|r| r.len() != states.len()) {
            return Err(MarkovError::ShapeMismatch(format!(
                "expected {0}x{0} matrix",
                states.len()
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            check_distribution(row, &format!("row {i}"))?;
        }
        Ok(TransitionMatrix { states, rows })
    }

    /// Row-normalized out-weights of the graph; nodes without outgoing edges
    /// become absorbing.
    pub fn from_graph(graph: &SkillsGraph) -> Self {
        let n = graph.node_count();
        let mut rows = vec![vec![0.0; n]; n];
        for (k, edge) in graph.edges().iter().enumerate() {
            let (from, to) = graph.endpoints(k);
            rows[from][to] += edge.weight;
        }
        for (i, row) in rows.iter_mut().enumerate() {
            normalize_row(row, i);
        }
        TransitionMatrix {
            states: graph.nodes().iter().map(|n| n.id.clone()).collect(),
            rows,
        }
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// `v * P`.
    fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for (p_i, row) in v.iter().zip(&self.rows) {
            if *p_i == 0.0 {
                continue;
            }
            for (o, p_ij) in out.iter_mut().zip(row) {
                *o += p_i * p_ij;
            }
        }
        out
    }

    /// `P * Q` for two matrices over the same states.
    pub fn compose(&self, other: &TransitionMatrix) -> Result<TransitionMatrix, MarkovError> {
        if self.states != other.states {
            return Err(MarkovError::StateMismatch);
        }
        Ok(TransitionMatrix {
            states: self.states.clone(),
            rows: self.rows.iter().map(|r| other.apply(r)).collect(),
        })
    }
}

fn normalize_row(row: &mut [f64], i: usize) {
    let total: f64 = row.iter().sum();
    if total > 0.0 {
        row.iter_mut().for_each(|x| *x /= total);
    } else {
        row[i] = 1.0;
    }
}

impl StateDistribution {
    pub fn new(states: Vec<String>, probabilities: Vec<f64>) -> Result<Self, MarkovError> {
        if states.len() != probabilities.len() {
            return Err(MarkovError::ShapeMismatch(
                "one probability per state".to_string(),
            ));
        }
        check_distribution(&probabilities, "distribution")?;
        Ok(StateDistribution {
            states,
            probabilities,
        })
    }

    pub fn uniform(states: Vec<String>) -> Self {
        let p = 1.0 / states.len() as f64;
        let probabilities = vec![p; states.len()];
        StateDistribution {
            states,
            probabilities,
        }
    }

    /// All mass on one state.
    pub fn point(states: Vec<String>, at: usize) -> Self {
        let mut probabilities = vec![0.0; states.len()];
        probabilities[at] = 1.0;
        StateDistribution {
            states,
            probabilities,
        }
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn get(&self, state: &str) -> Option<f64> {
        self.states
            .iter()
            .position(|s| s == state)
            .map(|i| self.probabilities[i])
    }

    pub fn to_map(&self) -> IndexMap<String, f64> {
        self.states
            .iter()
            .cloned()
            .zip(self.probabilities.iter().copied())
            .collect()
    }
}

/// Row-normalizes observed transition counts. Rows with no observations
/// become self-loops.
pub fn build_transition_matrix(
    states: Vec<String>,
    counts: &[Vec<i64>],
) -> Result<TransitionMatrix, MarkovError> {
    let n = states.len();
    if counts.len() != n || counts.iter().any(|r| r.len() != n) {
        return Err(MarkovError::ShapeMismatch(format!(
            "{n} states need a {n}x{n} count matrix"
        )));
    }
    let mut rows = Vec::with_capacity(n);
    for (i, row) in counts.iter().enumerate() {
        if let Some((j, &v)) = row.iter().enumerate().find(|(_, &v)| v < 0) {
            return Err(MarkovError::NegativeCount {
                row: i,
                column: j,
                value: v,
            });
        }
        let mut probs: Vec<f64> = row.iter().map(|&c| c as f64).collect();
        normalize_row(&mut probs, i);
        rows.push(probs);
    }
    Ok(TransitionMatrix { states, rows })
}

/// Reads a counts CSV: a header of state ids, then one row of integer counts
/// per source state, in header order.
pub fn read_counts_csv<R: std::io::Read>(reader: R) -> Result<TransitionMatrix, MarkovError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let states: Vec<String> = rdr
        .headers()
        .map_err(|e| MarkovError::Parse(e.to_string()))?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    let mut counts = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| MarkovError::Parse(e.to_string()))?;
        let row = record
            .iter()
            .enumerate()
            .map(|(c, field)| {
                field.trim().parse::<i64>().map_err(|_| {
                    MarkovError::Parse(format!(
                        "row {}, column {}: `{field}` is not an integer",
                        r + 1,
                        c + 1
                    ))
                })
            })
            .collect::<Result<Vec<i64>, _>>()?;
        counts.push(row);
    }
    build_transition_matrix(states, &counts)
}

pub fn load_counts_csv(path: &Path) -> Result<TransitionMatrix, MarkovError> {
    let file = std::fs::File::open(path)
        .map_err(|e| MarkovError::Parse(format!("{}: {e}", path.display())))?;
    read_counts_csv(file)
}

/// `d * P^k`.
pub fn step_distribution(
    matrix: &TransitionMatrix,
    start: &StateDistribution,
    k: usize,
) -> Result<StateDistribution, MarkovError> {
    if start.states != matrix.states {
        return Err(MarkovError::StateMismatch);
    }
    let mut v = start.probabilities.clone();
    for _ in 0..k {
        v = matrix.apply(&v);
    }
    Ok(StateDistribution {
        states: start.states.clone(),
        probabilities: v,
    })
}

/// `max_j |(pi P)_j - pi_j|`.
pub fn stationary_residual(matrix: &TransitionMatrix, pi: &StateDistribution) -> f64 {
    matrix
        .apply(&pi.probabilities)
        .iter()
        .zip(&pi.probabilities)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// A stationary distribution reached from the uniform start.
///
/// Iterates the lazy chain `(I + P) / 2`, which has the same stationary
/// distributions as `P` but no periodicity, so periodic chains converge too.
/// Reducible chains yield one valid stationary distribution; which one
/// depends on the uniform start.
pub fn stationary_distribution(matrix: &TransitionMatrix) -> Result<StateDistribution, MarkovError> {
    if matrix.is_empty() {
        return Err(MarkovError::ShapeMismatch("no states".to_string()));
    }
    let mut v = vec![1.0 / matrix.len() as f64; matrix.len()];
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let pv = matrix.apply(&v);
        let next: Vec<f64> = v.iter().zip(&pv).map(|(a, b)| 0.5 * (a + b)).collect();
        let delta = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        v = next;
        if delta < STEP_TOL {
            break;
        }
    }
    let total: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= total);
    let pi = StateDistribution {
        states: matrix.states.clone(),
        probabilities: v,
    };
    let residual = stationary_residual(matrix, &pi);
    if residual > RESIDUAL_TOL {
        return Err(MarkovError::NotConverged {
            iterations,
            residual,
        });
    }
    Ok(pi)
}
