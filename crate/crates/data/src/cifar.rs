//! CIFAR-10 binary batches: 3073-byte records, a label byte followed by the
//! 1024 red, 1024 green and 1024 blue bytes of a 32x32 image.

use std::fs;
use std::path::Path;

use pogd_nn::Tensor4;

use crate::dataset::{ChannelStats, Dataset};
use crate::error::{io_error, DataError, Result};
use crate::idx::to_byte;

pub const RECORD_LEN: usize = 1 + 3 * 32 * 32;
pub const CLASSES: usize = 10;

/// Loads and concatenates the given batch files. The returned dataset carries
/// its own channel statistics; pixels are left unstandardized.
pub fn load_cifar10<P: AsRef<Path>>(batch_paths: &[P]) -> Result<Dataset> {
    let mut labels = Vec::new();
    let mut pixels = Vec::new();
    for path in batch_paths {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(io_error(path))?;
        if bytes.len() % RECORD_LEN != 0 {
            return Err(DataError::RecordSize {
                path: path.to_path_buf(),
                len: bytes.len(),
                record: RECORD_LEN,
            });
        }
        pixels.reserve(bytes.len());
        for record in bytes.chunks_exact(RECORD_LEN) {
            let label = usize::from(record[0]);
            if label >= CLASSES {
                return Err(DataError::LabelOutOfRange { label, classes: CLASSES });
            }
            labels.push(label);
            pixels.extend(record[1..].iter().map(|&b| f64::from(b) / 255.0));
        }
    }
    let images = Tensor4::new(pixels, [labels.len(), 3, 32, 32]).map_err(|e| DataError::Invalid(e.to_string()))?;
    let stats = ChannelStats::of(&images);
    Ok(Dataset::new("cifar10", images, labels, CLASSES)?.with_stats(stats))
}

pub fn write_cifar10(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    if dataset.images().shape()[1..] != [3, 32, 32] {
        return Err(DataError::Invalid(format!(
            "CIFAR-10 records need 3x32x32 images, found {:?}",
            &dataset.images().shape()[1..]
        )));
    }
    let mut bytes = Vec::with_capacity(dataset.len() * RECORD_LEN);
    for (label, image) in dataset.labels().iter().zip(dataset.images().data().chunks_exact(RECORD_LEN - 1)) {
        bytes.push(*label as u8);
        bytes.extend(image.iter().map(|&x| to_byte(x)));
    }
    let path = path.as_ref();
    fs::write(path, bytes).map_err(io_error(path))
}
