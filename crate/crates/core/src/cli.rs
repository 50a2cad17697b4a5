//! Command-line front end.
//!
//! [`execute`] runs one invocation and returns the exit code together with
//! everything destined for standard out and standard error, so the binary is
//! a thin wrapper and tests can drive the CLI in-process.
//!
//! Exit codes: 0 success, 1 domain error (valid input, no answer), 2 usage or
//! input error. Every failure prints one JSON error object on standard out.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::allocator::{allocate, AllocError, AllocationMode, AllocationRequest};
use crate::cohort::{self, CohortError, CohortProfile};
use crate::feedback::{run_feedback_cycle, FeedbackConfig, FeedbackError, MetricsFile, RecordedMetrics};
use crate::graph::{validate_dag, weighted_centrality, GraphError, SkillsGraph};
use crate::learner::{run_pipeline, Criterion, LearnError, ParamGrid, PipelineOptions, TrainedModel};
use crate::markov::{
    load_counts_csv, stationary_distribution, stationary_residual, step_distribution, MarkovError,
    StateDistribution, TransitionMatrix,
};
use crate::pathfinder::{find_optimal_path, PathError, PathQuery};

/// Result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliError {
    pub kind: String,
    pub message: String,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stage: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<usize>,
}

const DOMAIN: i32 = 1;
const INPUT: i32 = 2;

impl CliError {
    fn new(kind: &str, exit_code: i32, message: impl ToString) -> Self {
        CliError {
            kind: kind.to_string(),
            message: message.to_string(),
            exit_code,
            stage: None,
            line: None,
            column: None,
        }
    }

    fn usage(message: impl ToString) -> Self {
        Self::new("Usage", INPUT, message)
    }

    fn io(path: &Path, err: std::io::Error) -> Self {
        Self::new("Io", INPUT, format!("{}: {err}", path.display()))
    }

    fn at_stage(mut self, stage: &str) -> Self {
        self.stage.get_or_insert_with(|| stage.to_string());
        self
    }

    pub fn to_json_line(&self) -> String {
        json!({ "error": self }).to_string()
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        let (kind, code) = match &e {
            GraphError::DuplicateNodeId(_) => ("DuplicateNodeId", INPUT),
            GraphError::UnknownEndpoint { .. } => ("UnknownEndpoint", INPUT),
            GraphError::DuplicateEdge(..) => ("DuplicateEdge", INPUT),
            GraphError::SelfLoop(_) => ("SelfLoop", INPUT),
            GraphError::NonPositiveWeight { .. } => ("NonPositiveWeight", INPUT),
            GraphError::InvalidAttribute { .. } => ("InvalidAttribute", INPUT),
            GraphError::CycleDetected(_) => ("CycleDetected", INPUT),
            GraphError::EmptyGraph => ("EmptyGraph", DOMAIN),
            GraphError::UnknownNode(_) => ("UnknownNode", INPUT),
            GraphError::UnknownEdge(..) => ("UnknownEdge", INPUT),
            GraphError::Parse { .. } => ("ParseError", INPUT),
            GraphError::Io { .. } => ("Io", INPUT),
        };
        let mut out = CliError::new(kind, code, &e);
        if let GraphError::Parse { line, column, .. } = e {
            out.line = Some(line);
            out.column = Some(column);
        }
        out
    }
}

impl From<AllocError> for CliError {
    fn from(e: AllocError) -> Self {
        let (kind, code) = match &e {
            AllocError::InvalidBudget(_) => ("InvalidBudget", INPUT),
            AllocError::CostPrecision { .. } => ("CostPrecision", INPUT),
            AllocError::CostResolutionExceeded { .. } => ("CostResolutionExceeded", DOMAIN),
            AllocError::UnknownNode(_) => ("UnknownNode", INPUT),
        };
        CliError::new(kind, code, e)
    }
}

impl From<PathError> for CliError {
    fn from(e: PathError) -> Self {
        let (kind, code) = match &e {
            PathError::UnknownNode(_) => ("UnknownNode", INPUT),
            PathError::NoFeasiblePath { .. } => ("NoFeasiblePath", DOMAIN),
            PathError::InvalidThreshold(_) => ("InvalidThreshold", INPUT),
        };
        CliError::new(kind, code, e)
    }
}

impl From<FeedbackError> for CliError {
    fn from(e: FeedbackError) -> Self {
        let (kind, code) = match e {
            FeedbackError::Graph(g) => return g.into(),
            FeedbackError::Alloc(a) => return a.into(),
            FeedbackError::EmptyPlan => ("EmptyPlan", INPUT),
            FeedbackError::MissingOutcome(_) => ("MissingOutcome", INPUT),
            FeedbackError::UnknownEdge(..) => ("UnknownEdge", INPUT),
            FeedbackError::OutOfRange { .. } => ("OutOfRange", INPUT),
            FeedbackError::InvalidConfig(_) => ("InvalidConfig", INPUT),
            FeedbackError::BadEdgeKey(_) => ("BadEdgeKey", INPUT),
            FeedbackError::MetricsExhausted(_) => ("MetricsExhausted", INPUT),
            FeedbackError::Parse(_) => ("ParseError", INPUT),
        };
        CliError::new(kind, code, e)
    }
}

impl From<MarkovError> for CliError {
    fn from(e: MarkovError) -> Self {
        let (kind, code) = match &e {
            MarkovError::NegativeCount { .. } => ("NegativeCount", INPUT),
            MarkovError::ShapeMismatch(_) => ("ShapeMismatch", INPUT),
            MarkovError::StateMismatch => ("StateMismatch", INPUT),
            MarkovError::InvalidProbability(_) => ("InvalidProbability", INPUT),
            MarkovError::NotConverged { .. } => ("NotConverged", DOMAIN),
            MarkovError::Parse(_) => ("ParseError", INPUT),
        };
        CliError::new(kind, code, e)
    }
}

impl From<CohortError> for CliError {
    fn from(e: CohortError) -> Self {
        let mut out = CliError::new(e.kind(), INPUT, &e);
        if let CohortError::SchemaViolation { row, .. } | CohortError::DuplicateStudentId { row, .. } = e {
            out.line = Some(row as usize);
        }
        out
    }
}

impl From<LearnError> for CliError {
    fn from(e: LearnError) -> Self {
        let code = match &e {
            LearnError::ShapeMismatch(_)
            | LearnError::InvalidFraction(_)
            | LearnError::InvalidParams(_)
            | LearnError::MissingFeature(_)
            | LearnError::Io(_) => INPUT,
            _ => DOMAIN,
        };
        CliError::new(e.kind(), code, e)
    }
}

#[derive(Parser, Debug)]
#[command(name = "skillgraph", version, about = "Capacity-building skills graph toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check that a graph file is a valid DAG and print its topological order.
    Validate(GraphArg),
    /// Weighted out-degree centrality of every node.
    Centrality(GraphArg),
    /// Spend a budget over the nodes.
    Allocate {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long)]
        budget: f64,
        #[arg(long, default_value = "fractional")]
        mode: AllocationMode,
    },
    /// Cheapest path whose accumulated objective stays within `--tau`.
    Path {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long)]
        tau: Option<f64>,
    },
    /// Replay recorded metrics through the weight-update loop (JSON lines).
    Feedback {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long)]
        metrics: PathBuf,
        #[arg(long)]
        budget: f64,
        #[arg(long, default_value_t = FeedbackConfig::default().learning_rate)]
        eta: f64,
        /// Defaults to the number of recorded iterations.
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long, default_value_t = FeedbackConfig::default().w_min)]
        w_min: f64,
        #[arg(long, default_value_t = FeedbackConfig::default().w_max)]
        w_max: f64,
        #[arg(long, default_value_t = FeedbackConfig::default().success_threshold)]
        success_threshold: f64,
    },
    /// Transition matrix and stationary distribution from counts or a graph.
    Markov {
        #[arg(long, conflicts_with = "graph", required_unless_present = "graph")]
        counts: Option<PathBuf>,
        #[arg(long)]
        graph: Option<PathBuf>,
        /// Also report the distribution after this many steps.
        #[arg(long, requires = "start")]
        steps: Option<usize>,
        #[arg(long)]
        start: Option<String>,
    },
    /// Synthetic cohort generation and summaries.
    #[command(subcommand)]
    Cohort(CohortCommand),
    /// Grid-searched decision tree on a cohort CSV.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value = "3:15")]
        grid_depth: String,
        #[arg(long, default_value = "1:10")]
        grid_leaf: String,
        #[arg(long, default_value = "gini,entropy")]
        criteria: String,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long, default_value_t = 0.7)]
        train_fraction: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply a trained model to a cohort CSV.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Run every stage of a scenario file.
    Run {
        scenario: PathBuf,
        /// Overrides the scenario's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct GraphArg {
    #[arg(long)]
    graph: PathBuf,
}

#[derive(Subcommand, Debug)]
enum CohortCommand {
    /// Generate a synthetic cohort CSV.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        /// Use the planted employment rule instead of engagement rates.
        #[arg(long, conflicts_with = "profile")]
        planted: bool,
        /// Profile JSON; defaults to the calibrated profile.
        #[arg(long)]
        profile: Option<PathBuf>,
        /// Write the CSV here instead of standard out.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Marginal counts and employment rates of a cohort CSV.
    Summarize {
        #[arg(long)]
        data: PathBuf,
    },
}

/// Parses `argv` (program name first) and runs the command.
pub fn execute<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return if e.use_stderr() {
                let err = CliError::usage(rendered.lines().next().unwrap_or("invalid arguments"));
                Outcome {
                    code: INPUT,
                    stdout: err.to_json_line() + "\n",
                    stderr: rendered,
                }
            } else {
                Outcome {
                    code: 0,
                    stdout: rendered,
                    stderr: String::new(),
                }
            };
        }
    };
    match run_command(cli.command) {
        Ok(stdout) => Outcome {
            code: 0,
            stdout,
            stderr: String::new(),
        },
        Err(err) => {
            let stage = err.stage.as_deref().map(|s| format!(" [{s}]")).unwrap_or_default();
            Outcome {
                code: err.exit_code,
                stdout: err.to_json_line() + "\n",
                stderr: format!("error{stage}: {}: {}\n", err.kind, err.message),
            }
        }
    }
}

fn line(value: impl Serialize) -> String {
    serde_json::to_string(&value).expect("serializable output") + "\n"
}

fn run_command(command: Command) -> Result<String, CliError> {
    match command {
        Command::Validate(g) => {
            let graph = SkillsGraph::load(&g.graph)?;
            let order = validate_dag(&graph)?;
            Ok(line(json!({
                "valid": true,
                "nodes": graph.node_count(),
                "edges": graph.edge_count(),
                "topological_order": order,
            })))
        }
        Command::Centrality(g) => {
            let graph = SkillsGraph::load(&g.graph)?;
            Ok(line(json!({ "centrality": weighted_centrality(&graph)? })))
        }
        Command::Allocate { graph, budget, mode } => {
            let graph = SkillsGraph::load(&graph.graph)?;
            Ok(line(allocate(&graph, &AllocationRequest { budget, mode })?))
        }
        Command::Path { graph, from, to, tau } => {
            let graph = SkillsGraph::load(&graph.graph)?;
            let query = PathQuery::new(from, to, tau);
            let path = find_optimal_path(&graph, &query)?;
            Ok(line(json!({ "query": query, "path": path })))
        }
        Command::Feedback {
            graph,
            metrics,
            budget,
            eta,
            iters,
            w_min,
            w_max,
            success_threshold,
        } => {
            let graph = SkillsGraph::load(&graph.graph)?;
            let file = MetricsFile::load(&metrics)?;
            let config = FeedbackConfig {
                learning_rate: eta,
                w_min,
                w_max,
                iterations: iters.unwrap_or(file.iterations.len()),
                success_threshold,
            };
            let history = run_feedback_cycle(&graph, &mut RecordedMetrics::from(file), &config, budget)?;
            Ok(history.to_json_lines())
        }
        Command::Markov {
            counts,
            graph,
            steps,
            start,
        } => {
            let matrix = match (counts, graph) {
                (Some(path), _) => load_counts_csv(&path)?,
                (None, Some(path)) => TransitionMatrix::from_graph(&SkillsGraph::load(&path)?),
                (None, None) => return Err(CliError::usage("one of --counts or --graph is required")),
            };
            let mut out = markov_summary(&matrix)?;
            if let (Some(k), Some(start)) = (steps, start) {
                let at = matrix
                    .states()
                    .iter()
                    .position(|s| *s == start)
                    .ok_or_else(|| CliError::new("UnknownState", INPUT, format!("unknown state `{start}`")))?;
                let d = step_distribution(&matrix, &StateDistribution::point(matrix.states().to_vec(), at), k)?;
                out.insert("steps".into(), json!(k));
                out.insert("distribution".into(), json!(d.to_map()));
            }
            Ok(line(out))
        }
        Command::Cohort(CohortCommand::Gen {
            n,
            seed,
            planted,
            profile,
            out,
        }) => {
            let profile = match (profile, planted) {
                (Some(path), _) => CohortProfile::load(&path)?,
                (None, true) => CohortProfile::planted(),
                (None, false) => CohortProfile::calibrated(),
            };
            let records = cohort::generate_cohort(n, seed, &profile)?;
            match out {
                None => Ok(cohort::to_csv_string(&records)),
                Some(path) => {
                    cohort::write_cohort_csv(&records, &path)?;
                    Ok(line(json!({ "written": path, "n": n, "seed": seed })))
                }
            }
        }
        Command::Cohort(CohortCommand::Summarize { data }) => {
            let records = cohort::load_cohort_csv(&data)?;
            Ok(line(cohort::summarize(&records)))
        }
        Command::Train {
            data,
            seed,
            grid_depth,
            grid_leaf,
            criteria,
            folds,
            train_fraction,
            out,
        } => {
            let grid = ParamGrid {
                max_depth: parse_range("--grid-depth", &grid_depth)?,
                min_samples_leaf: parse_range("--grid-leaf", &grid_leaf)?,
                criteria: criteria
                    .split(',')
                    .map(|c| c.parse::<Criterion>().map_err(CliError::usage))
                    .collect::<Result<_, _>>()?,
            };
            let records = cohort::load_cohort_csv(&data)?;
            let options = PipelineOptions {
                train_fraction,
                folds,
                seed,
                grid,
            };
            let result = run_pipeline(&cohort::to_raw_table(&records), &options)?;
            fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
            let model_path = out.join("model.json");
            let cv_path = out.join("cv_report.csv");
            write(&model_path, &(serde_json::to_string_pretty(&result.model).expect("model json") + "\n"))?;
            write(&cv_path, &result.search.cv_csv()?)?;
            let best = &result.search.cv_table[result.search.best_config_id];
            Ok(line(json!({
                "best_params": result.search.best_params,
                "best_config_id": result.search.best_config_id,
                "cv_mean_acc": best.mean_acc,
                "cv_std_acc": best.std_acc,
                "test_accuracy": result.search.test_accuracy,
                "n_train": result.train_rows.len(),
                "n_test": result.test_rows.len(),
                "tree_depth": result.model.tree.depth,
                "tree_nodes": result.model.tree.nodes.len(),
                "importance": result.importance,
                "grouped_importance": result.grouped_importance,
                "model": model_path,
                "cv_report": cv_path,
            })))
        }
        Command::Predict { model, data } => {
            let text = fs::read_to_string(&model).map_err(|e| CliError::io(&model, e))?;
            let model: TrainedModel = serde_json::from_str(&text).map_err(|e| {
                let mut err = CliError::new("ParseError", INPUT, format!("model file: {e}"));
                err.line = Some(e.line());
                err.column = Some(e.column());
                err
            })?;
            let records = cohort::load_cohort_csv(&data)?;
            let (predictions, warnings) = model.predict_raw(&cohort::to_raw_table(&records))?;
            let hits = records
                .iter()
                .zip(&predictions)
                .filter(|(r, &p)| usize::from(r.employed) == p)
                .count();
            let rows: Vec<Value> = records
                .iter()
                .zip(&predictions)
                .map(|(r, p)| json!({ "student_id": r.student_id, "predicted": p }))
                .collect();
            let accuracy = (!records.is_empty()).then(|| hits as f64 / records.len() as f64);
            Ok(line(json!({
                "predictions": rows,
                "accuracy": accuracy,
                "warnings": warnings,
            })))
        }
        Command::Run { scenario, out } => {
            let report = run_scenario_file(&scenario, out.as_deref())?;
            Ok(line(report))
        }
    }
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// `a:b` (inclusive) or a single value.
fn parse_range(flag: &str, text: &str) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::usage(format!("{flag} expects `lo:hi` or a single integer, got `{text}`"));
    let (lo, hi) = match text.split_once(':') {
        Some((a, b)) => (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?),
        None => {
            let v = text.trim().parse().map_err(|_| bad())?;
            (v, v)
        }
    };
    if lo > hi {
        return Err(bad());
    }
    Ok((lo..=hi).collect())
}

fn markov_summary(matrix: &TransitionMatrix) -> Result<IndexMap<String, Value>, CliError> {
    let pi = stationary_distribution(matrix)?;
    let mut out = IndexMap::new();
    out.insert("states".into(), json!(matrix.states()));
    out.insert("matrix".into(), json!(matrix.rows()));
    out.insert("stationary".into(), json!(pi.to_map()));
    out.insert("residual".into(), json!(stationary_residual(matrix, &pi)));
    Ok(out)
}

/// Feedback settings of a scenario; omitted fields take the
/// [`FeedbackConfig`] defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioFeedback {
    pub learning_rate: f64,
    pub w_min: f64,
    pub w_max: f64,
    pub iterations: usize,
    pub success_threshold: f64,
    pub metrics: Option<PathBuf>,
}

impl Default for ScenarioFeedback {
    fn default() -> Self {
        let c = FeedbackConfig::default();
        ScenarioFeedback {
            learning_rate: c.learning_rate,
            w_min: c.w_min,
            w_max: c.w_max,
            iterations: c.iterations,
            success_threshold: c.success_threshold,
            metrics: None,
        }
    }
}

impl ScenarioFeedback {
    pub fn config(&self) -> FeedbackConfig {
        FeedbackConfig {
            learning_rate: self.learning_rate,
            w_min: self.w_min,
            w_max: self.w_max,
            iterations: self.iterations,
            success_threshold: self.success_threshold,
        }
    }
}

/// A full run description. Relative paths are resolved against the
/// scenario file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub graph: PathBuf,
    #[serde(default)]
    pub seed: u64,
    pub allocation: AllocationRequest,
    #[serde(default)]
    pub paths: Vec<PathQuery>,
    #[serde(default)]
    pub feedback: Option<ScenarioFeedback>,
    #[serde(default)]
    pub markov_counts: Option<PathBuf>,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeedbackSummary {
    pub iterations: usize,
    pub learning_rate: f64,
    pub final_weights: Vec<crate::feedback::EdgeWeight>,
    pub final_centrality: crate::graph::NodeScores,
    pub final_allocation: crate::allocator::AllocationPlan,
    pub success_rates: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub topological_order: Vec<String>,
    pub centrality: crate::graph::NodeScores,
    pub allocation: crate::allocator::PlanReport,
    pub paths: Vec<Value>,
    pub feedback: Option<FeedbackSummary>,
    pub paths_after_feedback: Vec<Value>,
    pub markov: IndexMap<String, Value>,
    /// Wall-clock milliseconds per stage; the only non-deterministic field.
    pub timings_ms: IndexMap<String, f64>,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

struct Stages {
    timings: IndexMap<String, f64>,
}

impl Stages {
    fn run<T>(&mut self, name: &str, f: impl FnOnce() -> Result<T, CliError>) -> Result<T, CliError> {
        let start = Instant::now();
        let out = f().map_err(|e| e.at_stage(name))?;
        self.timings.insert(name.to_string(), start.elapsed().as_secs_f64() * 1e3);
        Ok(out)
    }
}

fn solve_paths(graph: &SkillsGraph, queries: &[PathQuery]) -> Result<Vec<Value>, CliError> {
    queries
        .iter()
        .map(|q| Ok(json!({ "query": q, "path": find_optimal_path(graph, q)? })))
        .collect()
}

/// Loads a scenario file and runs it; `out` overrides its output directory.
pub fn run_scenario_file(path: &Path, out: Option<&Path>) -> Result<RunReport, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e).at_stage("scenario"))?;
    let scenario: Scenario = serde_json::from_str(&text).map_err(|e| {
        let mut err = CliError::new("ParseError", INPUT, format!("scenario file: {e}")).at_stage("scenario");
        err.line = Some(e.line());
        err.column = Some(e.column());
        err
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    let output_dir = out.map_or_else(|| resolve(base, &scenario.output_dir), Path::to_path_buf);
    run_scenario(&scenario, base, &output_dir)
}

/// Validate, centrality, allocation, paths, feedback with re-optimization,
/// then the Markov model; every stage writes an artifact into `output_dir`.
pub fn run_scenario(scenario: &Scenario, base: &Path, output_dir: &Path) -> Result<RunReport, CliError> {
    let mut stages = Stages {
        timings: IndexMap::new(),
    };
    fs::create_dir_all(output_dir).map_err(|e| CliError::io(output_dir, e).at_stage("output"))?;
    let artifact = |name: &str, text: String| write(&output_dir.join(name), &text);

    let (graph, topological_order) = stages.run("validate", || {
        let graph = SkillsGraph::load(&resolve(base, &scenario.graph))?;
        let order = validate_dag(&graph)?;
        Ok((graph, order))
    })?;
    let centrality = stages.run("centrality", || {
        let c = weighted_centrality(&graph)?;
        artifact("centrality.json", line(&c))?;
        Ok(c)
    })?;
    let allocation = stages.run("allocation", || {
        let plan = allocate(&graph, &scenario.allocation)?;
        artifact("allocation.json", line(&plan))?;
        Ok(plan)
    })?;
    let paths = stages.run("paths", || {
        let p = solve_paths(&graph, &scenario.paths)?;
        artifact("paths.json", line(&p))?;
        Ok(p)
    })?;
    let mut final_graph = graph.clone();
    let feedback = match &scenario.feedback {
        None => None,
        Some(fb) => Some(stages.run("feedback", || {
            let reports = match &fb.metrics {
                Some(p) => MetricsFile::load(&resolve(base, p))?.iterations,
                None => Vec::new(),
            };
            let history = run_feedback_cycle(
                &graph,
                &mut RecordedMetrics::new(reports),
                &fb.config(),
                scenario.allocation.budget,
            )?;
            artifact("feedback.jsonl", history.to_json_lines())?;
            artifact("final_graph.json", history.final_graph.to_json_string() + "\n")?;
            final_graph = history.final_graph.clone();
            let last = history.snapshots.last().expect("history holds the initial snapshot");
            Ok(FeedbackSummary {
                iterations: fb.iterations,
                learning_rate: fb.learning_rate,
                final_weights: last.weights.clone(),
                final_centrality: last.centrality.clone(),
                final_allocation: last.allocation.clone(),
                success_rates: history.snapshots.iter().skip(1).map(|s| s.success_rate).collect(),
            })
        })?),
    };
    let paths_after_feedback = stages.run("paths_after_feedback", || {
        if feedback.is_none() {
            return Ok(Vec::new());
        }
        let p = solve_paths(&final_graph, &scenario.paths)?;
        artifact("paths_after_feedback.json", line(&p))?;
        Ok(p)
    })?;
    let markov = stages.run("markov", || {
        let matrix = match &scenario.markov_counts {
            Some(p) => load_counts_csv(&resolve(base, p))?,
            None => TransitionMatrix::from_graph(&final_graph),
        };
        let summary = markov_summary(&matrix)?;
        artifact("markov.json", line(&summary))?;
        Ok(summary)
    })?;

    let report = RunReport {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: scenario.seed,
        topological_order,
        centrality,
        allocation,
        paths,
        feedback,
        paths_after_feedback,
        markov,
        timings_ms: stages.timings,
    };
    write(
        &output_dir.join("report.json"),
        &(serde_json::to_string_pretty(&report).expect("report json") + "\n"),
    )?;
    Ok(report)
}
