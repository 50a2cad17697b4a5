//! Plan execution scoring and metric-driven edge-weight updates.
//!
//! Each observed edge metric `m` pulls the edge weight toward itself:
//! `w' = clamp(w + eta * (m - w), w_min, w_max)`. Under a constant metric the
//! gap `|w - m|` shrinks by a factor `1 - eta` per iteration, with `w = m` as
//! the fixed point.

use std::io::Write;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::allocator::{allocate_fractional, AllocError, AllocationPlan};
use crate::graph::{weighted_centrality, GraphError, NodeScores, SkillsGraph};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeedbackError {
    #[error("plan has no actions")]
    EmptyPlan,
    #[error("no outcome recorded for action `{0}`")]
    MissingOutcome(String),
    #[error("metrics reference unknown edge {0}->{1}")]
    UnknownEdge(String, String),
    #[error("{what} = {value} is outside [{low}, {high}]")]
    OutOfRange {
        what: String,
        value: f64,
        low: f64,
        high: f64,
    },
    #[error("invalid feedback config: {0}")]
    InvalidConfig(String),
    #[error("malformed edge key `{0}`, expected `from->to`")]
    BadEdgeKey(String),
    #[error("metrics stream ran out at iteration {0}")]
    MetricsExhausted(usize),
    #[error("metrics file: {0}")]
    Parse(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Alloc(#[from] AllocError),
}

/// Directed edge identifier, written `from->to` in files.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeKey {
    pub from: String,
    pub to: String,
}

impl EdgeKey {
    pub fn new(from: impl Into<String>, to: impl Into<String>) -> Self {
        EdgeKey {
            from: from.into(),
            to: to.into(),
        }
    }
}

impl std::fmt::Display for EdgeKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}->{}", self.from, self.to)
    }
}

impl std::str::FromStr for EdgeKey {
    type Err = FeedbackError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once("->") {
            Some((a, b)) if !a.is_empty() && !b.is_empty() => Ok(EdgeKey::new(a, b)),
            _ => Err(FeedbackError::BadEdgeKey(s.to_string())),
        }
    }
}

impl Serialize for EdgeKey {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EdgeKey {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Observations for one iteration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsReport {
    #[serde(default)]
    pub edge_metrics: IndexMap<EdgeKey, f64>,
    #[serde(default)]
    pub action_outcomes: IndexMap<String, f64>,
}

impl MetricsReport {
    /// Checks that every referenced edge exists and values are in range.
    pub fn validate(&self, graph: &SkillsGraph, w_max: f64) -> Result<(), FeedbackError> {
        for (key, &m) in &self.edge_metrics {
            if graph.edge(&key.from, &key.to).is_none() {
                return Err(FeedbackError::UnknownEdge(key.from.clone(), key.to.clone()));
            }
            if !(0.0..=w_max).contains(&m) {
                return Err(FeedbackError::OutOfRange {
                    what: format!("metric {key}"),
                    value: m,
                    low: 0.0,
                    high: w_max,
                });
            }
        }
        for (action, &v) in &self.action_outcomes {
            if !(0.0..=1.0).contains(&v) {
                return Err(FeedbackError::OutOfRange {
                    what: format!("outcome {action}"),
                    value: v,
                    low: 0.0,
                    high: 1.0,
                });
            }
        }
        Ok(())
    }
}

/// Metrics file: one report per iteration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsFile {
    pub iterations: Vec<MetricsReport>,
}

impl MetricsFile {
    pub fn from_json_str(text: &str) -> Result<Self, FeedbackError> {
        serde_json::from_str(text).map_err(|e| FeedbackError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, FeedbackError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| FeedbackError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeedbackConfig {
    pub learning_rate: f64,
    pub w_min: f64,
    pub w_max: f64,
    pub iterations: usize,
    pub success_threshold: f64,
}

impl Default for FeedbackConfig {
    fn default() -> Self {
        FeedbackConfig {
            learning_rate: 0.5,
            w_min: 0.01,
            w_max: 10.0,
            iterations: 0,
            success_threshold: 0.5,
        }
    }
}

impl FeedbackConfig {
    pub fn validate(&self) -> Result<(), FeedbackError> {
        let bad = |msg: String| Err(FeedbackError::InvalidConfig(msg));
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad(format!("learning rate {} not in (0, 1]", self.learning_rate));
        }
        if !(self.w_min > 0.0 && self.w_min < self.w_max && self.w_max.is_finite()) {
            return bad(format!(
                "weight bounds [{}, {}] must satisfy 0 < w_min < w_max",
                self.w_min, self.w_max
            ));
        }
        if !(0.0..=1.0).contains(&self.success_threshold) {
            return bad(format!(
                "success threshold {} not in [0, 1]",
                self.success_threshold
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionOutcome {
    pub action: String,
    pub outcome: f64,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionReport {
    pub success_rate: f64,
    pub per_action: Vec<ActionOutcome>,
}

/// Scores an executed plan: the fraction of actions whose outcome reaches
/// `success_threshold`.
pub fn execute_plan(
    actions: &[String],
    metrics: &MetricsReport,
    success_threshold: f64,
) -> Result<ExecutionReport, FeedbackError> {
    if actions.is_empty() {
        return Err(FeedbackError::EmptyPlan);
    }
    if !(0.0..=1.0).contains(&success_threshold) {
        return Err(FeedbackError::InvalidConfig(format!(
            "success threshold {success_threshold} not in [0, 1]"
        )));
    }
    let per_action = actions
        .iter()
        .map(|a| {
            let outcome = *metrics
                .action_outcomes
                .get(a)
                .ok_or_else(|| FeedbackError::MissingOutcome(a.clone()))?;
            Ok(ActionOutcome {
                action: a.clone(),
                outcome,
                success: outcome >= success_threshold,
            })
        })
        .collect::<Result<Vec<_>, FeedbackError>>()?;
    let hits = per_action.iter().filter(|o| o.success).count();
    Ok(ExecutionReport {
        success_rate: hits as f64 / per_action.len() as f64,
        per_action,
    })
}

/// Applies one round of the tracking update and returns the new graph.
pub fn update_weights(
    graph: &SkillsGraph,
    metrics: &MetricsReport,
    config: &FeedbackConfig,
) -> Result<SkillsGraph, FeedbackError> {
    config.validate()?;
    metrics.validate(graph, config.w_max)?;
    let mut weights: Vec<f64> = graph.edges().iter().map(|e| e.weight).collect();
    for (key, &m) in &metrics.edge_metrics {
        let k = graph
            .edge_position(&key.from, &key.to)
            .expect("validated edge");
        let w = weights[k];
        weights[k] = (w + config.learning_rate * (m - w)).clamp(config.w_min, config.w_max);
    }
    Ok(graph.with_edge_weights(&weights)?)
}

/// Supplies the metrics observed after each iteration.
pub trait MetricsSource {
    fn report(&mut self, iteration: usize) -> Option<MetricsReport>;
}

impl<F: FnMut(usize) -> Option<MetricsReport>> MetricsSource for F {
    fn report(&mut self, iteration: usize) -> Option<MetricsReport> {
        self(iteration)
    }
}

/// Replays recorded reports in order.
#[derive(Debug, Clone)]
pub struct RecordedMetrics {
    reports: Vec<MetricsReport>,
}

impl RecordedMetrics {
    pub fn new(reports: Vec<MetricsReport>) -> Self {
        RecordedMetrics { reports }
    }
}

impl From<MetricsFile> for RecordedMetrics {
    fn from(file: MetricsFile) -> Self {
        RecordedMetrics::new(file.iterations)
    }
}

impl MetricsSource for RecordedMetrics {
    fn report(&mut self, iteration: usize) -> Option<MetricsReport> {
        self.reports.get(iteration).cloned()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeWeight {
    pub from: String,
    pub to: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub iteration: usize,
    pub weights: Vec<EdgeWeight>,
    pub centrality: NodeScores,
    pub allocation: AllocationPlan,
    /// Success rate of the actions reported for the iteration that produced
    /// this snapshot, when any were reported.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub success_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleHistory {
    pub snapshots: Vec<Snapshot>,
    pub final_graph: SkillsGraph,
}

impl CycleHistory {
    /// One JSON object per line, one line per snapshot.
    pub fn write_json_lines<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for snap in &self.snapshots {
            serde_json::to_writer(&mut out, snap)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_json_lines(&self) -> String {
        let mut buf = Vec::new();
        self.write_json_lines(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("json is utf-8")
    }
}

fn snapshot(
    iteration: usize,
    graph: &SkillsGraph,
    budget: f64,
    success_rate: Option<f64>,
) -> Result<Snapshot, FeedbackError> {
    Ok(Snapshot {
        iteration,
        weights: graph
            .edges()
            .iter()
            .map(|e| EdgeWeight {
                from: e.from.clone(),
                to: e.to.clone(),
                weight: e.weight,
            })
            .collect(),
        centrality: weighted_centrality(graph)?,
        allocation: allocate_fractional(graph, budget)?,
        success_rate,
    })
}

/// Runs `config.iterations` rounds of update, then re-scores centrality and
/// re-allocates the budget. The history starts with the untouched graph.
pub fn run_feedback_cycle<S: MetricsSource + ?Sized>(
    graph: &SkillsGraph,
    metrics: &mut S,
    config: &FeedbackConfig,
    budget: f64,
) -> Result<CycleHistory, FeedbackError> {
    config.validate()?;
    let mut current = graph.clone();
    let mut snapshots = vec![snapshot(0, &current, budget, None)?];
    for it in 0..config.iterations {
        let report = metrics
            .report(it)
            .ok_or(FeedbackError::MetricsExhausted(it))?;
        let success_rate = if report.action_outcomes.is_empty() {
            None
        } else {
            let actions: Vec<String> = report.action_outcomes.keys().cloned().collect();
            Some(execute_plan(&actions, &report, config.success_threshold)?.success_rate)
        };
        current = update_weights(&current, &report, config)?;
        snapshots.push(snapshot(it + 1, &current, budget, success_rate)?);
    }
    Ok(CycleHistory {
        snapshots,
        final_graph: current,
    })
}
