//! Dataset ingestion for the MNIST and CIFAR-10 experiments.

pub mod batch;
pub mod cifar;
pub mod dataset;
pub mod error;
pub mod idx;
pub mod split;

pub use batch::{Batch, BatchIterator};
pub use cifar::{load_cifar10, write_cifar10};
pub use dataset::{ChannelStats, Dataset};
pub use error::{DataError, Result};
pub use idx::{load_mnist_idx, write_mnist_idx};
pub use split::{split, subset};
