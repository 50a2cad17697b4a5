//! Grid search over tree hyperparameters with stratified k-fold CV.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::impurity::Criterion;
use super::split::stratified_folds;
use super::tree::{fit_tree, fit_tree_rows, DecisionTree, TreeParams};
use super::{LearnError, PreparedDataset};

/// Means within this distance are considered tied.
const MEAN_TIE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamGrid {
    pub max_depth: Vec<usize>,
    pub min_samples_leaf: Vec<usize>,
    pub criteria: Vec<Criterion>,
}

impl ParamGrid {
    /// Depths 3..=15, leaf sizes 1..=10, gini and entropy.
    pub fn standard() -> Self {
        ParamGrid {
            max_depth: (3..=15).collect(),
            min_samples_leaf: (1..=10).collect(),
            criteria: vec![Criterion::Gini, Criterion::Entropy],
        }
    }

    pub fn single(params: TreeParams) -> Self {
        ParamGrid {
            max_depth: vec![params.max_depth],
            min_samples_leaf: vec![params.min_samples_leaf],
            criteria: vec![params.criterion],
        }
    }

    /// Configurations ordered by depth, then leaf size, then criterion.
    pub fn configs(&self) -> Vec<TreeParams> {
        let mut out = Vec::new();
        for &d in &self.max_depth {
            for &l in &self.min_samples_leaf {
                for &c in &self.criteria {
                    out.push(TreeParams::new(d, l, c));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvRow {
    pub config_id: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub criterion: Criterion,
    pub mean_acc: f64,
    pub std_acc: f64,
}

impl CvRow {
    pub fn params(&self) -> TreeParams {
        TreeParams::new(self.max_depth, self.min_samples_leaf, self.criterion)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub best_params: TreeParams,
    pub best_config_id: usize,
    pub cv_table: Vec<CvRow>,
    pub test_accuracy: f64,
    pub model: DecisionTree,
}

impl GridSearchResult {
    pub fn cv_csv(&self) -> Result<String, LearnError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.cv_table {
            w.serialize(row).map_err(|e| LearnError::Io(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| LearnError::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| LearnError::Io(e.to_string()))
    }
}

/// `true` if `a` should replace `b` as the best configuration.
fn better(a: &CvRow, b: &CvRow) -> bool {
    if a.mean_acc > b.mean_acc + MEAN_TIE {
        return true;
    }
    if (a.mean_acc - b.mean_acc).abs() > MEAN_TIE {
        return false;
    }
    (a.max_depth, std::cmp::Reverse(a.min_samples_leaf), a.criterion.name())
        < (b.max_depth, std::cmp::Reverse(b.min_samples_leaf), b.criterion.name())
}

fn evaluate(
    train: &PreparedDataset,
    fold_of: &[usize],
    folds: usize,
    params: TreeParams,
) -> Result<(f64, f64), LearnError> {
    let mut accs = Vec::with_capacity(folds);
    for k in 0..folds {
        let fit_rows: Vec<usize> = (0..train.len()).filter(|&i| fold_of[i] != k).collect();
        let tree = fit_tree_rows(&train.features, &train.labels, &fit_rows, &train.feature_names, params)?;
        let mut hits = 0usize;
        let mut total = 0usize;
        for i in (0..train.len()).filter(|&i| fold_of[i] == k) {
            total += 1;
            if tree.predict(&train.features[i])? == train.labels[i] {
                hits += 1;
            }
        }
        accs.push(hits as f64 / total as f64);
    }
    let mean = accs.iter().sum::<f64>() / folds as f64;
    let var = accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / folds as f64;
    Ok((mean, var.sqrt()))
}

/// Scores every configuration by k-fold CV on `train`, refits the best one
/// on all of `train` and reports its accuracy on `test`.
///
/// Folds are fixed before configurations are evaluated in parallel, and the
/// table keeps configuration order, so the result does not depend on the
/// thread count.
pub fn grid_search_cv(
    train: &PreparedDataset,
    test: &PreparedDataset,
    grid: &ParamGrid,
    folds: usize,
    seed: u64,
) -> Result<GridSearchResult, LearnError> {
    let configs = grid.configs();
    if configs.is_empty() {
        return Err(LearnError::InvalidParams("empty parameter grid".into()));
    }
    let fold_of = stratified_folds(&train.labels, folds, seed)?;
    let scores: Vec<Result<(f64, f64), LearnError>> = configs
        .par_iter()
        .map(|&p| evaluate(train, &fold_of, folds, p))
        .collect();

    let mut cv_table = Vec::with_capacity(configs.len());
    for (config_id, (params, score)) in configs.iter().zip(scores).enumerate() {
        let (mean_acc, std_acc) = score?;
        cv_table.push(CvRow {
            config_id,
            max_depth: params.max_depth,
            min_samples_leaf: params.min_samples_leaf,
            criterion: params.criterion,
            mean_acc,
            std_acc,
        });
    }
    let mut best = 0;
    for i in 1..cv_table.len() {
        if better(&cv_table[i], &cv_table[best]) {
            best = i;
        }
    }
    let best_params = cv_table[best].params();
    let model = fit_tree(train, best_params)?;
    let test_accuracy = model.accuracy(&test.features, &test.labels)?;
    Ok(GridSearchResult {
        best_params,
        best_config_id: best,
        cv_table,
        test_accuracy,
        model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learner::Preprocessor;

    fn dataset(features: Vec<Vec<f64>>, labels: Vec<usize>) -> PreparedDataset {
        let n = labels.len();
        PreparedDataset {
            row_ids: (0..n).map(|i| i.to_string()).collect(),
            feature_names: (0..features[0].len()).map(|i| format!("x{i}")).collect(),
            features,
            labels,
            preprocessor: Preprocessor { columns: Vec::new() },
            warnings: Vec::new(),
        }
    }

    fn threshold_data(n: usize) -> PreparedDataset {
        // Classes separated by a wide gap so every fold learns a usable threshold.
        let labels: Vec<usize> = (0..n).map(|i| usize::from(i * 2 >= n)).collect();
        let features = (0..n)
            .map(|i| vec![i as f64 / n as f64 + labels[i] as f64, ((i * 7) % 5) as f64])
            .collect();
        dataset(features, labels)
    }

    #[test]
    fn standard_grid_shape() {
        let configs = ParamGrid::standard().configs();
        assert_eq!(configs.len(), 13 * 10 * 2);
        assert_eq!(configs[0], TreeParams::new(3, 1, Criterion::Gini));
        assert_eq!(configs[1], TreeParams::new(3, 1, Criterion::Entropy));
        assert_eq!(configs[2], TreeParams::new(3, 2, Criterion::Gini));
    }

    #[test]
    fn single_config_grid() {
        let data = threshold_data(40);
        let p = TreeParams::new(3, 2, Criterion::Entropy);
        let r = grid_search_cv(&data, &data, &ParamGrid::single(p), 5, 1).unwrap();
        assert_eq!(r.best_params, p);
        assert_eq!(r.cv_table.len(), 1);
        assert_eq!(r.cv_table[0].mean_acc, 1.0);
        assert_eq!(r.test_accuracy, 1.0);
    }

    #[test]
    fn ties_prefer_shallow_then_large_leaves_then_entropy() {
        let data = threshold_data(40);
        let grid = ParamGrid {
            max_depth: vec![5, 2],
            min_samples_leaf: vec![1, 3],
            criteria: vec![Criterion::Gini, Criterion::Entropy],
        };
        let r = grid_search_cv(&data, &data, &grid, 4, 9).unwrap();
        assert!(r.cv_table.iter().all(|row| row.mean_acc == 1.0));
        assert_eq!(r.best_params, TreeParams::new(2, 3, Criterion::Entropy));
        assert!(r.cv_table.iter().any(|row| row.params() == r.best_params));
    }

    #[test]
    fn too_many_folds() {
        let data = threshold_data(8);
        let grid = ParamGrid::single(TreeParams::new(2, 1, Criterion::Gini));
        assert_eq!(
            grid_search_cv(&data, &data, &grid, 5, 0).unwrap_err(),
            LearnError::InsufficientSamples { folds: 5, smallest: 4 }
        );
    }

    #[test]
    fn thread_count_does_not_matter() {
        let data = threshold_data(60);
        let grid = ParamGrid {
            max_depth: vec![1, 2, 3],
            min_samples_leaf: vec![1, 5],
            criteria: vec![Criterion::Gini, Criterion::Entropy],
        };
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| serde_json::to_string(&grid_search_cv(&data, &data, &grid, 5, 4).unwrap()).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn cv_csv_header() {
        let data = threshold_data(20);
        let r = grid_search_cv(&data, &data, &ParamGrid::single(TreeParams::new(1, 1, Criterion::Gini)), 2, 0).unwrap();
        let csv = r.cv_csv().unwrap();
        assert!(csv.starts_with("config_id,max_depth,min_samples_leaf,criterion,mean_acc,std_acc\n0,1,1,gini,"));
    }
}
