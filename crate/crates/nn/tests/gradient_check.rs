//! Every layer and both reference models against central finite differences.

use pogd_nn::gradcheck::*;
use pogd_nn::ModelSpec;

const POINTS: usize = 50;

fn assert_passes(report: CheckReport, tol: f64) {
    assert!(
        report.passed(tol),
        "{}: max rel error {:e} ({}), {} checked, {} skipped",
        report.name,
        report.max_rel_error,
        report.worst,
        report.checked,
        report.skipped
    );
}

#[test]
fn conv2d() {
    assert_passes(check_conv(POINTS, 100).unwrap(), 1e-6);
}

#[test]
fn maxpool_away_from_ties() {
    assert_passes(check_maxpool(POINTS, 200).unwrap(), 1e-6);
}

#[test]
fn relu() {
    assert_passes(check_relu(POINTS, 300).unwrap(), 1e-5);
}

#[test]
fn dense() {
    assert_passes(check_dense(POINTS, 400).unwrap(), 1e-5);
}

#[test]
fn dropout_with_fixed_mask() {
    assert_passes(check_dropout(POINTS, 500).unwrap(), 1e-5);
}

#[test]
fn softmax_cross_entropy() {
    assert_passes(check_softmax_ce(POINTS, 600).unwrap(), 1e-5);
}

#[test]
fn mnist_cnn() {
    assert_passes(check_model("mnist-cnn", ModelSpec::mnist_cnn(), POINTS, 2, 3, 700).unwrap(), 1e-5);
}

#[test]
fn cifar_cnn() {
    assert_passes(check_model("cifar-cnn", ModelSpec::cifar_cnn(), POINTS, 1, 2, 800).unwrap(), 1e-5);
}
