//! Greedy binary decision tree over real-valued features.

use serde::{Deserialize, Serialize};

use super::impurity::{ClassCounts, Criterion};
use super::{LearnError, PreparedDataset};
use crate::graph::NodeScores;

/// Gains closer than this are treated as equal, so ties resolve by feature
/// index and threshold rather than by rounding noise.
const GAIN_TIE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub criterion: Criterion,
}

impl TreeParams {
    pub fn new(max_depth: usize, min_samples_leaf: usize, criterion: Criterion) -> Self {
        TreeParams {
            max_depth,
            min_samples_leaf,
            criterion,
        }
    }

    fn validate(&self) -> Result<(), LearnError> {
        if self.min_samples_leaf == 0 {
            return Err(LearnError::InvalidParams(
                "min_samples_leaf must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TreeNode {
    /// Rows with `value <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        class_counts: ClassCounts,
    },
    Leaf {
        class_counts: ClassCounts,
        prediction: usize,
    },
}

impl TreeNode {
    pub fn class_counts(&self) -> &ClassCounts {
        match self {
            TreeNode::Split { class_counts, .. } | TreeNode::Leaf { class_counts, .. } => class_counts,
        }
    }
}

/// Fitted tree; `nodes[0]` is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
    pub params: TreeParams,
    pub feature_names: Vec<String>,
    pub depth: usize,
}

struct Builder<'a> {
    features: &'a [Vec<f64>],
    labels: &'a [usize],
    n_features: usize,
    classes: usize,
    params: TreeParams,
    nodes: Vec<TreeNode>,
    depth: usize,
}

struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

impl Builder<'_> {
    fn counts(&self, rows: &[usize]) -> ClassCounts {
        ClassCounts::from_labels(rows.iter().map(|&r| self.labels[r]), self.classes)
    }

    fn best_split(&self, rows: &[usize], parent: &ClassCounts) -> Option<Candidate> {
        let crit = self.params.criterion;
        let n = rows.len();
        let min_leaf = self.params.min_samples_leaf;
        if n < 2 * min_leaf {
            return None;
        }
        let parent_impurity = crit.impurity_unchecked(parent.counts(), n);
        let mut best: Option<Candidate> = None;
        let mut sorted: Vec<(f64, usize)> = Vec::with_capacity(n);
        for feature in 0..self.n_features {
            sorted.clear();
            sorted.extend(rows.iter().map(|&r| (self.features[r][feature], self.labels[r])));
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left = ClassCounts::zeros(self.classes);
            let mut right = parent.clone();
            for i in 0..n - 1 {
                left.add(sorted[i].1);
                right.remove(sorted[i].1);
                let (a, b) = (sorted[i].0, sorted[i + 1].0);
                let n_left = i + 1;
                if a == b || n_left < min_leaf || n - n_left < min_leaf {
                    continue;
                }
                let mut threshold = a + (b - a) / 2.0;
                if threshold >= b {
                    threshold = a;
                }
                let gain = parent_impurity
                    - n_left as f64 / n as f64 * crit.impurity_unchecked(left.counts(), n_left)
                    - (n - n_left) as f64 / n as f64
                        * crit.impurity_unchecked(right.counts(), n - n_left);
                if best.as_ref().is_none_or(|c| gain > c.gain + GAIN_TIE) {
                    best = Some(Candidate {
                        gain,
                        feature,
                        threshold,
                    });
                }
            }
        }
        best
    }

    /// Builds the subtree over `rows` and returns its node index.
    ///
    /// A node that is impure, above the depth limit and has an admissible
    /// split is always split, even when the best gain is zero. Without that,
    /// XOR-like targets where no single split helps could never be learned.
    fn grow(&mut self, rows: &mut [usize], depth: usize) -> usize {
        self.depth = self.depth.max(depth);
        let counts = self.counts(rows);
        let id = self.nodes.len();
        self.nodes.push(TreeNode::Leaf {
            prediction: counts.majority(),
            class_counts: counts.clone(),
        });
        if counts.is_pure() || depth >= self.params.max_depth {
            return id;
        }
        let Some(split) = self.best_split(rows, &counts) else {
            return id;
        };
        let (feature, threshold) = (split.feature, split.threshold);
        let mut cut = 0;
        for i in 0..rows.len() {
            if self.features[rows[i]][feature] <= threshold {
                rows.swap(i, cut);
                cut += 1;
            }
        }
        let (left_rows, right_rows) = rows.split_at_mut(cut);
        let left = self.grow(left_rows, depth + 1);
        let right = self.grow(right_rows, depth + 1);
        self.nodes[id] = TreeNode::Split {
            feature,
            threshold,
            left,
            right,
            class_counts: counts,
        };
        id
    }
}

/// Fits on the given rows of a feature matrix. Labels must be `0..classes`.
pub fn fit_tree_rows(
    features: &[Vec<f64>],
    labels: &[usize],
    rows: &[usize],
    feature_names: &[String],
    params: TreeParams,
) -> Result<DecisionTree, LearnError> {
    params.validate()?;
    if rows.is_empty() {
        return Err(LearnError::EmptyTrainingSet);
    }
    let classes = labels.iter().copied().max().unwrap_or(0).max(1) + 1;
    let mut builder = Builder {
        features,
        labels,
        n_features: feature_names.len(),
        classes,
        params,
        nodes: Vec::new(),
        depth: 0,
    };
    let mut rows = rows.to_vec();
    builder.grow(&mut rows, 0);
    Ok(DecisionTree {
        nodes: builder.nodes,
        params,
        feature_names: feature_names.to_vec(),
        depth: builder.depth,
    })
}

pub fn fit_tree(train: &PreparedDataset, params: TreeParams) -> Result<DecisionTree, LearnError> {
    let rows: Vec<usize> = (0..train.len()).collect();
    fit_tree_rows(&train.features, &train.labels, &rows, &train.feature_names, params)
}

impl DecisionTree {
    pub fn predict(&self, row: &[f64]) -> Result<usize, LearnError> {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                TreeNode::Leaf { prediction, .. } => return Ok(*prediction),
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    let value = *row.get(*feature).ok_or(LearnError::MissingFeature(*feature))?;
                    at = if value <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn accuracy(&self, features: &[Vec<f64>], labels: &[usize]) -> Result<f64, LearnError> {
        if labels.is_empty() {
            return Err(LearnError::EmptyEvaluationSet);
        }
        let mut hits = 0;
        for (row, &label) in features.iter().zip(labels) {
            if self.predict(row)? == label {
                hits += 1;
            }
        }
        Ok(hits as f64 / labels.len() as f64)
    }

    pub fn leaves(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes.iter().filter(|n| matches!(n, TreeNode::Leaf { .. }))
    }

    /// Depth of every node, computed from the structure.
    pub fn node_depths(&self) -> Vec<usize> {
        let mut depth = vec![0; self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            if let TreeNode::Split { left, right, .. } = node {
                depth[*left] = depth[i] + 1;
                depth[*right] = depth[i] + 1;
            }
        }
        depth
    }
}

pub fn predict(tree: &DecisionTree, row: &[f64]) -> Result<usize, LearnError> {
    tree.predict(row)
}

/// Impurity-decrease importance per feature, weighted by the share of
/// training rows reaching each split and normalized to sum to one. Uses the
/// tree's own criterion. A tree without informative splits scores all zeros.
pub fn feature_importance(tree: &DecisionTree) -> NodeScores {
    let crit = tree.params.criterion;
    let root_total = tree.nodes[0].class_counts().total() as f64;
    let mut raw = vec![0.0; tree.feature_names.len()];
    for node in &tree.nodes {
        if let TreeNode::Split {
            feature,
            left,
            right,
            class_counts,
            ..
        } = node
        {
            let weighted = |c: &ClassCounts| {
                let t = c.total();
                t as f64 * crit.impurity_unchecked(c.counts(), t)
            };
            let decrease = weighted(class_counts)
                - weighted(tree.nodes[*left].class_counts())
                - weighted(tree.nodes[*right].class_counts());
            raw[*feature] += decrease.max(0.0) / root_total;
        }
    }
    let total: f64 = raw.iter().sum();
    tree.feature_names
        .iter()
        .cloned()
        .zip(raw)
        .map(|(name, v)| (name, if total > 0.0 { v / total } else { 0.0 }))
        .collect()
}
