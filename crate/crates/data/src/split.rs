use rand::seq::SliceRandom;
use rand::Rng;

use crate::dataset::Dataset;
use crate::error::{DataError, Result};

/// Draws `n` indices whose per-class counts are the largest-remainder
/// apportionment of `n` over the class frequencies, in shuffled order.
fn stratified<R: Rng + ?Sized>(labels: &[usize], classes: usize, n: usize, rng: &mut R) -> Vec<usize> {
    let total = labels.len();
    let mut by_class = vec![Vec::new(); classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let mut quota: Vec<usize> = by_class.iter().map(|c| n * c.len() / total).collect();
    let mut order: Vec<usize> = (0..classes).collect();
    // Stable sort: equal remainders go to the lower class index.
    order.sort_by_key(|&c| std::cmp::Reverse(n * by_class[c].len() % total));
    let short = n - quota.iter().sum::<usize>();
    for &c in order.iter().take(short) {
        quota[c] += 1;
    }
    let mut picked = Vec::with_capacity(n);
    for (members, q) in by_class.iter_mut().zip(quota) {
        members.shuffle(rng);
        picked.extend_from_slice(&members[..q]);
    }
    picked.shuffle(rng);
    picked
}

/// Stratified `(train, rest)` split; both sides keep the original sample order.
pub fn split<R: Rng + ?Sized>(dataset: &Dataset, train_fraction: f64, rng: &mut R) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DataError::InvalidFraction(train_fraction));
    }
    let n = (train_fraction * dataset.len() as f64).round() as usize;
    if n == 0 {
        return Err(DataError::EmptySplit("train"));
    }
    if n == dataset.len() {
        return Err(DataError::EmptySplit("held-out"));
    }
    let mut train = stratified(dataset.labels(), dataset.classes(), n, rng);
    train.sort_unstable();
    let mut in_train = vec![false; dataset.len()];
    for &i in &train {
        in_train[i] = true;
    }
    let rest: Vec<usize> = (0..dataset.len()).filter(|&i| !in_train[i]).collect();
    Ok((dataset.select(&train), dataset.select(&rest)))
}

/// A stratified random sample of `n` items in random order.
pub fn subset<R: Rng + ?Sized>(dataset: &Dataset, n: usize, rng: &mut R) -> Result<Dataset> {
    if n > dataset.len() {
        return Err(DataError::SubsetTooLarge {
            requested: n,
            available: dataset.len(),
        });
    }
    Ok(dataset.select(&stratified(dataset.labels(), dataset.classes(), n, rng)))
}
