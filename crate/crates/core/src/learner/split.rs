//! Stratified train/test split and stratified k-fold assignment.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{LearnError, PreparedDataset};

/// Row indices of each class, classes in ascending label order.
fn rows_by_class(labels: &[usize]) -> Vec<Vec<usize>> {
    let classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut by_class = vec![Vec::new(); classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    by_class.retain(|rows| !rows.is_empty());
    by_class
}

/// Largest-remainder apportionment of `fraction * size` per class, with the
/// total set to `round(fraction * sum)`. Equal remainders go to the earlier
/// class.
pub fn apportion(sizes: &[usize], fraction: f64) -> Vec<usize> {
    let total: usize = sizes.iter().sum();
    let target = (fraction * total as f64).round() as usize;
    let exact: Vec<f64> = sizes.iter().map(|&s| fraction * s as f64).collect();
    let mut quotas: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra)
    });
    let mut left = target.saturating_sub(quotas.iter().sum());
    for &c in order.iter().cycle().take(sizes.len() * 2) {
        if left == 0 {
            break;
        }
        if quotas[c] < sizes[c] {
            quotas[c] += 1;
            left -= 1;
        }
    }
    quotas
}

/// Train and test row indices (each ascending). Rows of each class are
/// shuffled by the seeded generator before the class quota is cut; a class
/// with a single row always lands in train.
pub fn stratified_split_indices(
    labels: &[usize],
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>), LearnError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(LearnError::InvalidFraction(train_fraction));
    }
    let by_class = rows_by_class(labels);
    let sizes: Vec<usize> = by_class.iter().map(Vec::len).collect();
    let mut quotas = apportion(&sizes, train_fraction);
    for (q, &s) in quotas.iter_mut().zip(&sizes) {
        if s == 1 {
            *q = 1;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (mut rows, quota) in by_class.into_iter().zip(quotas) {
        rows.shuffle(&mut rng);
        train.extend_from_slice(&rows[..quota]);
        test.extend_from_slice(&rows[quota..]);
    }
    if train.is_empty() || test.is_empty() {
        return Err(LearnError::DegenerateSplit {
            train: train.len(),
            test: test.len(),
        });
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn stratified_split(
    data: &PreparedDataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(PreparedDataset, PreparedDataset), LearnError> {
    let (train, test) = stratified_split_indices(&data.labels, train_fraction, seed)?;
    Ok((data.subset(&train), data.subset(&test)))
}

/// Fold number of every row. Each class is shuffled and dealt so fold sizes
/// within a class differ by at most one; the folds that receive a class's
/// leftover rows rotate from class to class.
pub fn stratified_folds(labels: &[usize], folds: usize, seed: u64) -> Result<Vec<usize>, LearnError> {
    if folds < 2 {
        return Err(LearnError::InvalidParams(format!("need at least 2 folds, got {folds}")));
    }
    let by_class = rows_by_class(labels);
    if let Some(smallest) = by_class.iter().map(Vec::len).min() {
        if smallest < folds {
            return Err(LearnError::InsufficientSamples { folds, smallest });
        }
    } else {
        return Err(LearnError::InsufficientSamples { folds, smallest: 0 });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; labels.len()];
    let mut offset = 0;
    for mut rows in by_class {
        rows.shuffle(&mut rng);
        let base = rows.len() / folds;
        let extra = rows.len() % folds;
        let mut sizes = vec![base; folds];
        for j in 0..extra {
            sizes[(offset + j) % folds] += 1;
        }
        offset = (offset + extra) % folds;
        let mut it = rows.into_iter();
        for (fold, size) in sizes.into_iter().enumerate() {
            for row in it.by_ref().take(size) {
                assignment[row] = fold;
            }
        }
    }
    Ok(assignment)
}
