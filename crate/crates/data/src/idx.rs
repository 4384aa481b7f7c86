//! MNIST in the IDX format: big-endian magic, big-endian dimension sizes,
//! then raw unsigned bytes.

use std::fs;
use std::path::Path;

use pogd_nn::Tensor4;

use crate::dataset::Dataset;
use crate::error::{io_error, DataError, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

fn be_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_be_bytes(bytes[at..at + 4].try_into().unwrap())
}

/// Validates header and length; returns the dimension sizes and the payload.
fn parse<'a>(path: &Path, bytes: &'a [u8], magic: u32) -> Result<(Vec<usize>, &'a [u8])> {
    let truncated = |expected| DataError::Truncated {
        path: path.to_path_buf(),
        expected,
        found: bytes.len(),
    };
    if bytes.len() < 4 {
        return Err(truncated(4));
    }
    let found = be_u32(bytes, 0);
    if found != magic {
        return Err(DataError::BadMagic {
            path: path.to_path_buf(),
            expected: magic,
            found,
        });
    }
    let ndim = (magic & 0xff) as usize;
    let header = 4 + 4 * ndim;
    if bytes.len() < header {
        return Err(truncated(header));
    }
    let dims: Vec<usize> = (0..ndim).map(|i| be_u32(bytes, 4 + 4 * i) as usize).collect();
    let expected = header + dims.iter().product::<usize>();
    if bytes.len() < expected {
        return Err(truncated(expected));
    }
    if bytes.len() > expected {
        return Err(DataError::TrailingBytes {
            path: path.to_path_buf(),
            extra: bytes.len() - expected,
        });
    }
    Ok((dims, &bytes[header..]))
}

pub fn load_mnist_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Dataset> {
    let (ipath, lpath) = (images_path.as_ref(), labels_path.as_ref());
    let ibytes = fs::read(ipath).map_err(io_error(ipath))?;
    let lbytes = fs::read(lpath).map_err(io_error(lpath))?;
    let (idims, pixels) = parse(ipath, &ibytes, IMAGES_MAGIC)?;
    let (ldims, labels) = parse(lpath, &lbytes, LABELS_MAGIC)?;
    if idims[0] != ldims[0] {
        return Err(DataError::CountMismatch {
            images: idims[0],
            labels: ldims[0],
        });
    }
    let data = pixels.iter().map(|&b| f64::from(b) / 255.0).collect();
    let images = Tensor4::new(data, [idims[0], 1, idims[1], idims[2]])
        .map_err(|e| DataError::Invalid(e.to_string()))?;
    let labels = labels.iter().map(|&b| usize::from(b)).collect();
    let name = ipath.file_name().map_or_else(|| "mnist".into(), |n| n.to_string_lossy().into_owned());
    Dataset::new(name, images, labels, 10)
}

/// Inverse of [`load_mnist_idx`] for single-channel datasets whose pixels are
/// multiples of 1/255.
pub fn write_mnist_idx(dataset: &Dataset, images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<()> {
    let [n, c, h, w] = dataset.images().shape();
    if c != 1 {
        return Err(DataError::Invalid(format!("IDX images need 1 channel, found {c}")));
    }
    let mut ibytes = Vec::with_capacity(16 + n * h * w);
    for v in [IMAGES_MAGIC, n as u32, h as u32, w as u32] {
        ibytes.extend_from_slice(&v.to_be_bytes());
    }
    ibytes.extend(dataset.images().data().iter().map(|&x| to_byte(x)));
    let mut lbytes = Vec::with_capacity(8 + n);
    for v in [LABELS_MAGIC, n as u32] {
        lbytes.extend_from_slice(&v.to_be_bytes());
    }
    for &l in dataset.labels() {
        lbytes.push(u8::try_from(l).map_err(|_| DataError::LabelOutOfRange { label: l, classes: 256 })?);
    }
    let (ipath, lpath) = (images_path.as_ref(), labels_path.as_ref());
    fs::write(ipath, ibytes).map_err(io_error(ipath))?;
    fs::write(lpath, lbytes).map_err(io_error(lpath))
}

pub(crate) fn to_byte(x: f64) -> u8 {
    (x * 255.0).round().clamp(0.0, 255.0) as u8
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(magic: u32, dims: &[u32]) -> Vec<u8> {
        std::iter::once(magic).chain(dims.iter().copied()).flat_map(u32::to_be_bytes).collect()
    }

    #[test]
    fn parse_rejects_short_and_long_payloads() {
        let p = Path::new("x");
        let mut bytes = header(LABELS_MAGIC, &[3]);
        bytes.extend([1, 2]);
        assert!(matches!(parse(p, &bytes, LABELS_MAGIC), Err(DataError::Truncated { expected: 11, .. })));
        bytes.extend([3, 4]);
        assert!(matches!(parse(p, &bytes, LABELS_MAGIC), Err(DataError::TrailingBytes { extra: 1, .. })));
        assert!(matches!(parse(p, &[0, 0], LABELS_MAGIC), Err(DataError::Truncated { .. })));
    }

    #[test]
    fn parse_reads_dims() {
        let mut bytes = header(IMAGES_MAGIC, &[1, 2, 3]);
        bytes.extend([0; 6]);
        let (dims, payload) = parse(Path::new("x"), &bytes, IMAGES_MAGIC).unwrap();
        assert_eq!(dims, vec![1, 2, 3]);
        assert_eq!(payload.len(), 6);
    }

    #[test]
    fn byte_conversion_round_trips() {
        for b in 0..=255u8 {
            assert_eq!(to_byte(f64::from(b) / 255.0), b);
        }
    }
}
