use pogd_nn::Tensor4;

use crate::error::{DataError, Result};

/// Per-channel mean and (population) standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl ChannelStats {
    pub fn of(images: &Tensor4<f64>) -> Self {
        let [n, c, h, w] = images.shape();
        let plane = h * w;
        let count = (n * plane) as f64;
        let channel = |ch: usize| {
            (0..n).flat_map(move |s| {
                let start = (s * c + ch) * plane;
                images.data()[start..start + plane].iter().copied()
            })
        };
        let mut mean = Vec::with_capacity(c);
        let mut std = Vec::with_capacity(c);
        for ch in 0..c {
            let mu = channel(ch).sum::<f64>() / count;
            let var = channel(ch).map(|x| (x - mu) * (x - mu)).sum::<f64>() / count;
            mean.push(mu);
            std.push(var.sqrt());
        }
        ChannelStats { mean, std }
    }
}

/// Images with labels. Loaders produce pixels in [0, 1]; [`Dataset::standardize`]
/// returns a copy in standard units.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    images: Tensor4<f64>,
    labels: Vec<usize>,
    classes: usize,
    stats: Option<ChannelStats>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, images: Tensor4<f64>, labels: Vec<usize>, classes: usize) -> Result<Self> {
        if classes == 0 {
            return Err(DataError::Invalid("no classes".into()));
        }
        if images.batch() != labels.len() {
            return Err(DataError::CountMismatch {
                images: images.batch(),
                labels: labels.len(),
            });
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= classes) {
            return Err(DataError::LabelOutOfRange { label, classes });
        }
        Ok(Dataset {
            name: name.into(),
            images,
            labels,
            classes,
            stats: None,
        })
    }

    pub fn with_stats(mut self, stats: ChannelStats) -> Self {
        self.stats = Some(stats);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn images(&self) -> &Tensor4<f64> {
        &self.images
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Channel statistics recorded at load time, if any.
    pub fn stats(&self) -> Option<&ChannelStats> {
        self.stats.as_ref()
    }

    /// The listed samples, in the given order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            images: self.images.gather(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            classes: self.classes,
            stats: self.stats.clone(),
        }
    }

    /// `(x - mean) / std` per channel. A zero deviation leaves the channel
    /// centred but unscaled.
    pub fn standardize(&self, stats: &ChannelStats) -> Result<Dataset> {
        let [_, c, h, w] = self.images.shape();
        if stats.mean.len() != c || stats.std.len() != c {
            return Err(DataError::Invalid(format!(
                "stats for {} channels applied to {c}-channel images",
                stats.mean.len()
            )));
        }
        let plane = h * w;
        let mut images = self.images.clone();
        for (k, x) in images.data_mut().iter_mut().enumerate() {
            let ch = (k / plane) % c;
            let sd = if stats.std[ch] > 1e-12 { stats.std[ch] } else { 1.0 };
            *x = (*x - stats.mean[ch]) / sd;
        }
        Ok(Dataset {
            images,
            ..self.clone()
        })
    }
}
