use pogd_nn::Tensor4;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::dataset::Dataset;
use crate::error::{DataError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub images: Tensor4<f64>,
    pub labels: Vec<usize>,
}

/// Seeded mini-batch iteration. Each epoch walks a fresh permutation drawn
/// from `rng`; the final batch may be short.
#[derive(Debug)]
pub struct BatchIterator<'a, R> {
    dataset: &'a Dataset,
    batch_size: usize,
    permutation: Vec<usize>,
    cursor: usize,
    epoch: usize,
    rng: R,
}

impl<'a, R: Rng> BatchIterator<'a, R> {
    pub fn new(dataset: &'a Dataset, batch_size: usize, mut rng: R) -> Result<Self> {
        if batch_size == 0 {
            return Err(DataError::ZeroBatchSize);
        }
        let mut permutation: Vec<usize> = (0..dataset.len()).collect();
        permutation.shuffle(&mut rng);
        Ok(BatchIterator {
            dataset,
            batch_size,
            permutation,
            cursor: 0,
            epoch: 0,
            rng,
        })
    }

    /// Zero-based index of the epoch being iterated.
    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn batches_per_epoch(&self) -> usize {
        self.dataset.len().div_ceil(self.batch_size)
    }

    /// Indices of the next batch, or `None` at the end of an epoch, after
    /// which the iterator has reshuffled for the next one.
    pub fn next_indices(&mut self) -> Option<&[usize]> {
        if self.cursor >= self.permutation.len() {
            self.permutation.shuffle(&mut self.rng);
            self.cursor = 0;
            self.epoch += 1;
            return None;
        }
        let start = self.cursor;
        self.cursor = (start + self.batch_size).min(self.permutation.len());
        Some(&self.permutation[start..self.cursor])
    }

    pub fn next_batch(&mut self) -> Option<Batch> {
        let dataset = self.dataset;
        self.next_indices().map(|idx| Batch {
            images: dataset.images().gather(idx),
            labels: idx.iter().map(|&i| dataset.labels()[i]).collect(),
        })
    }
}
