//! Imputation, winsorizing, scaling and one-hot encoding.
//!
//! Every statistic is fitted on a chosen subset of rows (normally the
//! training split) and then applied to all rows.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::LearnError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RawColumn {
    Numeric {
        name: String,
        values: Vec<Option<f64>>,
    },
    Categorical {
        name: String,
        values: Vec<Option<String>>,
    },
}

impl RawColumn {
    pub fn name(&self) -> &str {
        match self {
            RawColumn::Numeric { name, .. } | RawColumn::Categorical { name, .. } => name,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            RawColumn::Numeric { values, .. } => values.len(),
            RawColumn::Categorical { values, .. } => values.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Untransformed table with integer class labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawDataset {
    pub row_ids: Vec<String>,
    pub columns: Vec<RawColumn>,
    pub labels: Vec<usize>,
}

impl RawDataset {
    pub fn new(row_ids: Vec<String>, columns: Vec<RawColumn>, labels: Vec<usize>) -> Result<Self, LearnError> {
        let n = labels.len();
        if row_ids.len() != n || columns.iter().any(|c| c.len() != n) {
            return Err(LearnError::ShapeMismatch(format!(
                "{n} labels but columns of other lengths"
            )));
        }
        Ok(RawDataset {
            row_ids,
            columns,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Fitted transform of one raw column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ColumnTransform {
    Numeric {
        name: String,
        median: f64,
        lower_fence: f64,
        upper_fence: f64,
        min: f64,
        max: f64,
    },
    Categorical {
        name: String,
        mode: String,
        categories: Vec<String>,
    },
}

impl ColumnTransform {
    fn feature_names(&self) -> Vec<String> {
        match self {
            ColumnTransform::Numeric { name, .. } => vec![name.clone()],
            ColumnTransform::Categorical {
                name, categories, ..
            } => categories.iter().map(|c| format!("{name}={c}")).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocessor {
    pub columns: Vec<ColumnTransform>,
}

/// Model-ready features: numeric columns in `[0, 1]`, categoricals one-hot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedDataset {
    pub row_ids: Vec<String>,
    pub feature_names: Vec<String>,
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub preprocessor: Preprocessor,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl PreparedDataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> PreparedDataset {
        PreparedDataset {
            row_ids: indices.iter().map(|&i| self.row_ids[i].clone()).collect(),
            feature_names: self.feature_names.clone(),
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            preprocessor: self.preprocessor.clone(),
            warnings: Vec::new(),
        }
    }
}

/// Nearest-rank quantile of sorted data. Always a data value, so clipping
/// at fences outside `[q1, q3]` leaves the quartiles where they were.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn fit_numeric(name: &str, values: &[Option<f64>], fit_rows: &[usize]) -> Result<ColumnTransform, LearnError> {
    let mut present: Vec<f64> = fit_rows.iter().filter_map(|&i| values[i]).collect();
    if present.is_empty() {
        return Err(LearnError::AllMissingColumn(name.to_string()));
    }
    present.sort_by(f64::total_cmp);
    let med = median(&present);

    let mut imputed: Vec<f64> = fit_rows.iter().map(|&i| values[i].unwrap_or(med)).collect();
    imputed.sort_by(f64::total_cmp);
    let q1 = quantile(&imputed, 0.25);
    let q3 = quantile(&imputed, 0.75);
    let iqr = q3 - q1;
    let lower_fence = q1 - 1.5 * iqr;
    let upper_fence = q3 + 1.5 * iqr;

    let clipped = imputed.iter().map(|v| v.clamp(lower_fence, upper_fence));
    let (min, max) = clipped.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    Ok(ColumnTransform::Numeric {
        name: name.to_string(),
        median: med,
        lower_fence,
        upper_fence,
        min,
        max,
    })
}

fn fit_categorical(
    name: &str,
    values: &[Option<String>],
    fit_rows: &[usize],
) -> Result<ColumnTransform, LearnError> {
    let mut freq: BTreeMap<&str, usize> = BTreeMap::new();
    for &i in fit_rows {
        if let Some(v) = &values[i] {
            *freq.entry(v.as_str()).or_default() += 1;
        }
    }
    // BTreeMap iterates in ascending order, so the first maximum is the
    // lexicographically smallest.
    let mode = freq
        .iter()
        .fold(None::<(&str, usize)>, |best, (&k, &c)| match best {
            Some((_, bc)) if bc >= c => best,
            _ => Some((k, c)),
        })
        .map(|(k, _)| k.to_string())
        .ok_or_else(|| LearnError::AllMissingColumn(name.to_string()))?;
    let categories: BTreeSet<String> = freq.keys().map(|k| k.to_string()).collect();
    Ok(ColumnTransform::Categorical {
        name: name.to_string(),
        mode,
        categories: categories.into_iter().collect(),
    })
}

impl Preprocessor {
    pub fn fit(raw: &RawDataset, fit_rows: &[usize]) -> Result<Self, LearnError> {
        if fit_rows.is_empty() {
            return Err(LearnError::EmptyFitSet);
        }
        let columns = raw
            .columns
            .iter()
            .map(|col| match col {
                RawColumn::Numeric { name, values } => fit_numeric(name, values, fit_rows),
                RawColumn::Categorical { name, values } => fit_categorical(name, values, fit_rows),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Preprocessor { columns })
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.columns.iter().flat_map(|c| c.feature_names()).collect()
    }

    /// Applies the fitted transform to every row of `raw`. Columns are
    /// matched by name.
    pub fn transform(&self, raw: &RawDataset) -> Result<PreparedDataset, LearnError> {
        let n = raw.len();
        let mut features = vec![Vec::with_capacity(self.feature_names().len()); n];
        let mut warnings = Vec::new();
        for transform in &self.columns {
            let (tname, col) = match transform {
                ColumnTransform::Numeric { name, .. } | ColumnTransform::Categorical { name, .. } => {
                    let col = raw
                        .columns
                        .iter()
                        .find(|c| c.name() == name)
                        .ok_or_else(|| LearnError::ShapeMismatch(format!("missing column `{name}`")))?;
                    (name, col)
                }
            };
            match (transform, col) {
                (
                    ColumnTransform::Numeric {
                        median,
                        lower_fence,
                        upper_fence,
                        min,
                        max,
                        ..
                    },
                    RawColumn::Numeric { values, .. },
                ) => {
                    for (row, v) in features.iter_mut().zip(values) {
                        let x = v.unwrap_or(*median).clamp(*lower_fence, *upper_fence);
                        let scaled = if max > min { (x - min) / (max - min) } else { 0.0 };
                        row.push(scaled.clamp(0.0, 1.0));
                    }
                }
                (ColumnTransform::Categorical { mode, categories, .. }, RawColumn::Categorical { values, .. }) => {
                    for (i, (row, v)) in features.iter_mut().zip(values).enumerate() {
                        let value = v.as_deref().unwrap_or(mode);
                        let hit = categories.iter().position(|c| c == value);
                        if hit.is_none() {
                            let msg = format!("row {i}: unseen {tname} category `{value}` encoded as all zeros");
                            log::warn!("{msg}");
                            warnings.push(msg);
                        }
                        row.extend((0..categories.len()).map(|k| if Some(k) == hit { 1.0 } else { 0.0 }));
                    }
                }
                _ => {
                    return Err(LearnError::ShapeMismatch(format!(
                        "column `{tname}` changed kind since fitting"
                    )))
                }
            }
        }
        Ok(PreparedDataset {
            row_ids: raw.row_ids.clone(),
            feature_names: self.feature_names(),
            features,
            labels: raw.labels.clone(),
            preprocessor: self.clone(),
            warnings,
        })
    }
}

/// Fits on `fit_rows` and transforms every row.
pub fn preprocess(raw: &RawDataset, fit_rows: &[usize]) -> Result<PreparedDataset, LearnError> {
    Preprocessor::fit(raw, fit_rows)?.transform(raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn numeric(values: Vec<Option<f64>>) -> RawDataset {
        let n = values.len();
        RawDataset::new(
            (0..n).map(|i| i.to_string()).collect(),
            vec![RawColumn::Numeric { name: "x".into(), values }],
            vec![0; n],
        )
        .unwrap()
    }

    fn all(n: usize) -> Vec<usize> {
        (0..n).collect()
    }

    fn column(p: &PreparedDataset, j: usize) -> Vec<f64> {
        p.features.iter().map(|r| r[j]).collect()
    }

    #[test]
    fn min_max_scaling() {
        let p = preprocess(&numeric(vec![Some(0.0), Some(5.0), Some(10.0)]), &all(3)).unwrap();
        assert_eq!(column(&p, 0), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn median_imputation() {
        let p = preprocess(&numeric(vec![Some(1.0), Some(2.0), Some(3.0), None]), &all(4)).unwrap();
        match &p.preprocessor.columns[0] {
            ColumnTransform::Numeric { median, .. } => assert_eq!(*median, 2.0),
            _ => unreachable!(),
        }
        assert_eq!(column(&p, 0)[3], 0.5);
    }

    #[test]
    fn outliers_are_winsorized() {
        let mut values: Vec<Option<f64>> = (1..=8).map(|v| Some(v as f64)).collect();
        values.push(Some(1000.0));
        let p = preprocess(&numeric(values), &all(9)).unwrap();
        let col = column(&p, 0);
        // Q1 = 3, Q3 = 7, upper fence 13: the outlier becomes the scale max.
        assert_eq!(col[8], 1.0);
        assert!((col[7] - 7.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn fit_rows_drive_statistics() {
        let p = preprocess(&numeric(vec![Some(0.0), Some(10.0), Some(20.0)]), &[0, 1]).unwrap();
        assert_eq!(column(&p, 0), vec![0.0, 1.0, 1.0]);
    }

    #[test]
    fn one_hot_encoding() {
        let eth = ["asian", "hispanic", "other", "african_american", "asian"];
        let raw = RawDataset::new(
            (0..5).map(|i| i.to_string()).collect(),
            vec![RawColumn::Categorical {
                name: "ethnicity".into(),
                values: eth.iter().map(|s| Some(s.to_string())).collect(),
            }],
            vec![0; 5],
        )
        .unwrap();
        let p = preprocess(&raw, &all(5)).unwrap();
        assert_eq!(p.n_features(), 4);
        assert_eq!(p.feature_names[0], "ethnicity=african_american");
        for row in &p.features {
            assert_eq!(row.iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn categorical_mode_and_unseen_values() {
        let values = vec![Some("b".to_string()), Some("a".to_string()), None, Some("z".to_string())];
        let raw = RawDataset::new(
            (0..4).map(|i| i.to_string()).collect(),
            vec![RawColumn::Categorical { name: "c".into(), values }],
            vec![0; 4],
        )
        .unwrap();
        // Fit on rows 0..3: a and b tie, a wins; z is unseen.
        let p = preprocess(&raw, &[0, 1, 2]).unwrap();
        assert_eq!(p.feature_names, vec!["c=a", "c=b"]);
        assert_eq!(p.features[2], vec![1.0, 0.0]);
        assert_eq!(p.features[3], vec![0.0, 0.0]);
        assert_eq!(p.warnings.len(), 1);
    }

    #[test]
    fn errors() {
        assert_eq!(
            preprocess(&numeric(vec![None, None]), &all(2)).unwrap_err(),
            LearnError::AllMissingColumn("x".into())
        );
        assert_eq!(
            preprocess(&numeric(vec![Some(1.0)]), &[]).unwrap_err(),
            LearnError::EmptyFitSet
        );
    }

    #[test]
    fn constant_column_scales_to_zero() {
        let p = preprocess(&numeric(vec![Some(4.0); 3]), &all(3)).unwrap();
        assert_eq!(column(&p, 0), vec![0.0; 3]);
    }

    proptest! {
        #[test]
        fn reprocessing_prepared_columns_is_identity(
            values in proptest::collection::vec(-100.0f64..100.0, 2..40),
        ) {
            let first = preprocess(&numeric(values.iter().map(|&v| Some(v)).collect()), &all(values.len())).unwrap();
            let again = preprocess(&numeric(column(&first, 0).into_iter().map(Some).collect()), &all(values.len())).unwrap();
            for (a, b) in column(&first, 0).iter().zip(column(&again, 0)) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }
}
