//! Node impurity and information gain.

use serde::{Deserialize, Serialize};

use super::LearnError;

/// Per-class row counts at a tree node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassCounts(Vec<usize>);

impl ClassCounts {
    pub fn new(counts: Vec<usize>) -> Self {
        ClassCounts(counts)
    }

    pub fn zeros(classes: usize) -> Self {
        ClassCounts(vec![0; classes])
    }

    pub fn from_labels(labels: impl IntoIterator<Item = usize>, classes: usize) -> Self {
        let mut c = Self::zeros(classes);
        for l in labels {
            c.0[l] += 1;
        }
        c
    }

    pub fn counts(&self) -> &[usize] {
        &self.0
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn add(&mut self, class: usize) {
        self.0[class] += 1;
    }

    pub fn remove(&mut self, class: usize) {
        self.0[class] -= 1;
    }

    pub fn is_pure(&self) -> bool {
        self.0.iter().filter(|&&c| c > 0).count() <= 1
    }

    /// Most frequent class, lowest index on ties.
    pub fn majority(&self) -> usize {
        let mut best = 0;
        for (k, &c) in self.0.iter().enumerate() {
            if c > self.0[best] {
                best = k;
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Entropy,
    Gini,
}

impl Criterion {
    pub fn name(self) -> &'static str {
        match self {
            Criterion::Entropy => "entropy",
            Criterion::Gini => "gini",
        }
    }

    pub fn impurity(self, counts: &ClassCounts) -> Result<f64, LearnError> {
        match self {
            Criterion::Entropy => entropy(counts),
            Criterion::Gini => gini(counts),
        }
    }

    /// Impurity without the empty check; empty nodes score zero.
    pub(crate) fn impurity_unchecked(self, counts: &[usize], total: usize) -> f64 {
        if total == 0 {
            return 0.0;
        }
        let n = total as f64;
        match self {
            Criterion::Entropy => counts
                .iter()
                .filter(|&&c| c > 0)
                .map(|&c| {
                    let p = c as f64 / n;
                    -p * p.log2()
                })
                .sum(),
            Criterion::Gini => {
                1.0 - counts
                    .iter()
                    .map(|&c| {
                        let p = c as f64 / n;
                        p * p
                    })
                    .sum::<f64>()
            }
        }
    }
}

impl std::fmt::Display for Criterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Criterion {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "entropy" => Ok(Criterion::Entropy),
            "gini" => Ok(Criterion::Gini),
            other => Err(format!("unknown criterion `{other}`")),
        }
    }
}

/// Shannon entropy in bits, with `0 log 0 = 0`.
pub fn entropy(counts: &ClassCounts) -> Result<f64, LearnError> {
    let total = counts.total();
    if total == 0 {
        return Err(LearnError::EmptyCounts);
    }
    Ok(Criterion::Entropy.impurity_unchecked(counts.counts(), total))
}

/// Entropy in an arbitrary logarithm base.
pub fn entropy_with_base(counts: &ClassCounts, base: f64) -> Result<f64, LearnError> {
    Ok(entropy(counts)? / base.log2())
}

pub fn gini(counts: &ClassCounts) -> Result<f64, LearnError> {
    let total = counts.total();
    if total == 0 {
        return Err(LearnError::EmptyCounts);
    }
    Ok(Criterion::Gini.impurity_unchecked(counts.counts(), total))
}

/// Parent impurity minus the size-weighted impurity of the children.
pub fn information_gain(
    parent: &ClassCounts,
    children: &[ClassCounts],
    criterion: Criterion,
) -> Result<f64, LearnError> {
    let total = parent.total();
    let child_sum: usize = children.iter().map(ClassCounts::total).sum();
    let per_class_ok = children.iter().all(|c| c.counts().len() == parent.counts().len())
        && (0..parent.counts().len())
            .all(|k| children.iter().map(|c| c.counts()[k]).sum::<usize>() == parent.counts()[k]);
    if child_sum != total || !per_class_ok {
        return Err(LearnError::PartitionMismatch);
    }
    let parent_impurity = criterion.impurity(parent)?;
    let weighted: f64 = children
        .iter()
        .map(|c| {
            let t = c.total();
            t as f64 / total as f64 * criterion.impurity_unchecked(c.counts(), t)
        })
        .sum();
    Ok(parent_impurity - weighted)
}
