#![allow(dead_code)]

use std::path::{Path, PathBuf};

use pogd_data::{write_mnist_idx, Dataset};
use pogd_nn::Tensor4;

/// Writes a tiny learnable MNIST-format dataset: class k lights up a 6x6
/// patch whose position depends on k, plus a little deterministic texture.
pub fn write_tiny_mnist(dir: &Path, train: usize, val: usize) -> [PathBuf; 4] {
    let make = |n: usize, offset: usize| {
        let mut pixels = vec![0.0; n * 28 * 28];
        let labels: Vec<usize> = (0..n).map(|i| (i + offset) % 10).collect();
        for (i, &k) in labels.iter().enumerate() {
            let (r0, c0) = (2 + (k / 5) * 12, 1 + (k % 5) * 5);
            let img = &mut pixels[i * 784..(i + 1) * 784];
            for r in r0..r0 + 6 {
                for c in c0..c0 + 6 {
                    img[r * 28 + c] = 1.0;
                }
            }
            img[(i * 37 + offset) % 784] = 0.5;
        }
        Dataset::new("tiny", Tensor4::new(pixels, [n, 1, 28, 28]).unwrap(), labels, 10).unwrap()
    };
    let paths = ["train-images", "train-labels", "val-images", "val-labels"].map(|p| dir.join(p));
    write_mnist_idx(&make(train, 0), &paths[0], &paths[1]).unwrap();
    write_mnist_idx(&make(val, 3), &paths[2], &paths[3]).unwrap();
    paths
}

/// TOML for a small MNIST-CNN training run over [`write_tiny_mnist`] files.
pub fn tiny_mnist_toml(paths: &[PathBuf; 4], output: &Path, optimizer: &str, extra: &str) -> String {
    format!(
        r#"seed = 7
epochs = 2
batch_size = 8
output = {output:?}
{extra}

[dataset]
name = "mnist"
train_images = {:?}
train_labels = {:?}
val_images = {:?}
val_labels = {:?}

[model]
name = "mnist-cnn"

[optimizer]
{optimizer}
"#,
        paths[0], paths[1], paths[2], paths[3]
    )
}

pub fn testfn_toml(function: &str, start: &[f64], iterations: usize, optimizer: &str, schedule: &str) -> String {
    format!(
        "seed = 1\noutput = \"unused.csv\"\n\n[model]\nname = \"testfn\"\nfunction = \"{function}\"\nstart = {start:?}\niterations = {iterations}\n\n[optimizer]\n{optimizer}\n\n{schedule}\n"
    )
}
