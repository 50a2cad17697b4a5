//! Decision-tree outcome prediction: impurity measures, preprocessing,
//! stratified splitting, tree induction, grid-search cross-validation and
//! feature importance.

mod impurity;
mod preprocess;
mod search;
mod split;
mod tree;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::NodeScores;

pub use impurity::{entropy, entropy_with_base, gini, information_gain, ClassCounts, Criterion};
pub use preprocess::{preprocess, ColumnTransform, PreparedDataset, Preprocessor, RawColumn, RawDataset};
pub use search::{grid_search_cv, CvRow, GridSearchResult, ParamGrid};
pub use split::{apportion, stratified_folds, stratified_split, stratified_split_indices};
pub use tree::{feature_importance, fit_tree, fit_tree_rows, predict, DecisionTree, TreeNode, TreeParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnError {
    #[error("class counts are empty")]
    EmptyCounts,
    #[error("children do not partition the parent counts")]
    PartitionMismatch,
    #[error("column `{0}` has no values on the fitting rows")]
    AllMissingColumn(String),
    #[error("no rows to fit preprocessing on")]
    EmptyFitSet,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("train fraction {0} is outside (0, 1)")]
    InvalidFraction(f64),
    #[error("split leaves {train} training and {test} test rows")]
    DegenerateSplit { train: usize, test: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("{folds} folds need every class to have at least {folds} rows; smallest has {smallest}")]
    InsufficientSamples { folds: usize, smallest: usize },
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("evaluation set is empty")]
    EmptyEvaluationSet,
    #[error("row has no feature {0}")]
    MissingFeature(usize),
    #[error("{0}")]
    Io(String),
}

impl LearnError {
    pub fn kind(&self) -> &'static str {
        match self {
            LearnError::EmptyCounts => "EmptyCounts",
            LearnError::PartitionMismatch => "PartitionMismatch",
            LearnError::AllMissingColumn(_) => "AllMissingColumn",
            LearnError::EmptyFitSet => "EmptyFitSet",
            LearnError::ShapeMismatch(_) => "ShapeMismatch",
            LearnError::InvalidFraction(_) => "InvalidFraction",
            LearnError::DegenerateSplit { .. } => "DegenerateSplit",
            LearnError::InvalidParams(_) => "InvalidParams",
            LearnError::InsufficientSamples { .. } => "InsufficientSamples",
            LearnError::EmptyTrainingSet => "EmptyTrainingSet",
            LearnError::EmptyEvaluationSet => "EmptyEvaluationSet",
            LearnError::MissingFeature(_) => "MissingFeature",
            LearnError::Io(_) => "Io",
        }
    }
}

/// Sums importances of one-hot columns (`name=value`) back onto `name`.
pub fn group_importance(scores: &NodeScores) -> NodeScores {
    let mut grouped: IndexMap<String, f64> = IndexMap::new();
    for (name, v) in scores.iter() {
        let base = name.split_once('=').map_or(name, |(b, _)| b);
        *grouped.entry(base.to_string()).or_insert(0.0) += v;
    }
    grouped.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOptions {
    pub train_fraction: f64,
    pub folds: usize,
    pub seed: u64,
    pub grid: ParamGrid,
}

impl PipelineOptions {
    pub fn new(seed: u64) -> Self {
        PipelineOptions {
            train_fraction: 0.7,
            folds: 5,
            seed,
            grid: ParamGrid::standard(),
        }
    }
}

/// Fitted model plus everything needed to reproduce and apply it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub preprocessor: Preprocessor,
    pub tree: DecisionTree,
}

impl TrainedModel {
    /// Predicted class of every row of a raw table.
    pub fn predict_raw(&self, raw: &RawDataset) -> Result<(Vec<usize>, Vec<String>), LearnError> {
        let prepared = self.preprocessor.transform(raw)?;
        let predictions = prepared
            .features
            .iter()
            .map(|row| self.tree.predict(row))
            .collect::<Result<_, _>>()?;
        Ok((predictions, prepared.warnings))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineResult {
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
    pub search: GridSearchResult,
    pub importance: NodeScores,
    pub grouped_importance: NodeScores,
    pub model: TrainedModel,
}

/// Stratified split, preprocessing fitted on the training rows, grid search
/// with cross-validation on the training rows, and a final test score.
pub fn run_pipeline(raw: &RawDataset, options: &PipelineOptions) -> Result<PipelineResult, LearnError> {
    let (train_rows, test_rows) = stratified_split_indices(&raw.labels, options.train_fraction, options.seed)?;
    let prepared = preprocess(raw, &train_rows)?;
    let train = prepared.subset(&train_rows);
    let test = prepared.subset(&test_rows);
    let search = grid_search_cv(&train, &test, &options.grid, options.folds, options.seed)?;
    let importance = feature_importance(&search.model);
    let grouped_importance = group_importance(&importance);
    let model = TrainedModel {
        preprocessor: prepared.preprocessor.clone(),
        tree: search.model.clone(),
    };
    Ok(PipelineResult {
        train_rows,
        test_rows,
        search,
        importance,
        grouped_importance,
        model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grouping_folds_one_hot_columns() {
        let scores: NodeScores = [("a", 0.25), ("edu=phd", 0.25), ("edu=masters", 0.5)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        let g = group_importance(&scores);
        assert_eq!(g.get("a"), Some(0.25));
        assert_eq!(g.get("edu"), Some(0.75));
        assert_eq!(g.len(), 2);
    }

    #[test]
    fn pipeline_on_a_separable_table() {
        let n = 60;
        let x: Vec<Option<f64>> = (0..n).map(|i| Some(i as f64 + 100.0 * f64::from(i >= 30))).collect();
        let c: Vec<Option<String>> = (0..n).map(|i| Some(["a", "b", "c"][i % 3].to_string())).collect();
        let labels: Vec<usize> = (0..n).map(|i| usize::from(i >= 30)).collect();
        let raw = RawDataset::new(
            (0..n).map(|i| format!("r{i}")).collect(),
            vec![
                RawColumn::Numeric { name: "x".into(), values: x },
                RawColumn::Categorical { name: "c".into(), values: c },
            ],
            labels,
        )
        .unwrap();
        let mut opts = PipelineOptions::new(7);
        opts.grid = ParamGrid::single(TreeParams::new(3, 1, Criterion::Entropy));
        let r = run_pipeline(&raw, &opts).unwrap();
        assert_eq!(r.train_rows.len(), 42);
        assert_eq!(r.search.test_accuracy, 1.0);
        assert_eq!(r.grouped_importance.get("x"), Some(1.0));
        let (pred, warnings) = r.model.predict_raw(&raw).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(pred, raw.labels);
    }
}
