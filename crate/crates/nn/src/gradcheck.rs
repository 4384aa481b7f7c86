//! Finite-difference verification of every layer and of whole models.
//!
//! Each check evaluates a scalar loss `Σ cᵢ·yᵢ` (random `c`) at random
//! points and compares the backward pass with central differences. Model
//! checks sample coordinates from every weight and bias block and skip
//! coordinates whose loss is not smooth within reach of the probe (a ReLU
//! or max-pool switch), which central differences cannot measure.

use pogd_core::gradcheck::{central_difference, relative_error};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::init::{init_params, InitScheme};
use crate::layers::*;
use crate::model::{Model, ModelSpec};
use crate::tensor::Tensor4;

/// Probe step.
pub const H: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub points: usize,
    /// Gradient entries compared.
    pub checked: usize,
    /// Entries skipped as non-smooth.
    pub skipped: usize,
    pub max_rel_error: f64,
    /// Description of the entry with the largest error.
    pub worst: String,
}

impl CheckReport {
    fn new(name: &str, points: usize) -> Self {
        CheckReport {
            name: name.into(),
            points,
            checked: 0,
            skipped: 0,
            max_rel_error: 0.0,
            worst: String::new(),
        }
    }

    fn compare(&mut self, what: &str, analytic: &[f64], numeric: &[f64]) {
        for (i, (a, n)) in analytic.iter().zip(numeric).enumerate() {
            self.record(|| format!("{what}[{i}]"), *a, *n);
        }
    }

    fn record(&mut self, what: impl FnOnce() -> String, analytic: f64, numeric: f64) {
        self.checked += 1;
        let err = relative_error(analytic, numeric);
        if !(err <= self.max_rel_error) {
            self.max_rel_error = err;
            self.worst = format!("{}: analytic {analytic:e}, numeric {numeric:e}", what());
        }
    }

    /// Every compared entry is within `tol`, and no more than a fifth as
    /// many entries were skipped as were compared.
    pub fn passed(&self, tol: f64) -> bool {
        self.checked > 0 && self.max_rel_error < tol && self.skipped * 5 <= self.checked
    }
}

fn uniform(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn conv_point(rng: &mut ChaCha8Rng, report: &mut CheckReport, x_shape: [usize; 4], geom: ConvGeometry) -> Result<()> {
    let x = uniform(rng, x_shape.iter().product(), 1.0);
    let w = uniform(rng, geom.weight_len(), 1.0);
    let b = uniform(rng, geom.out_ch, 1.0);
    let (oh, ow) = geom.output_size(x_shape[2], x_shape[3])?;
    let coef = uniform(rng, x_shape[0] * geom.out_ch * oh * ow, 1.0);
    let loss = |x: &[f64], w: &[f64], b: &[f64]| {
        let xt = Tensor4::new(x.to_vec(), x_shape).expect("shape fixed above");
        dot(conv2d_forward(&xt, w, b, &geom).expect("geometry checked").data(), &coef)
    };
    let xt = Tensor4::new(x.clone(), x_shape)?;
    let gout = Tensor4::new(coef.clone(), [x_shape[0], geom.out_ch, oh, ow])?;
    let g = conv2d_backward(&xt, &w, &geom, &gout, true)?;
    let dx = g.dx.expect("requested");
    report.compare("dx", dx.data(), &central_difference(|p| loss(p, &w, &b), &x, H));
    report.compare("dw", &g.dw, &central_difference(|p| loss(&x, p, &b), &w, H));
    report.compare("db", &g.db, &central_difference(|p| loss(&x, &w, p), &b, H));
    Ok(())
}

/// A 1×1×4×4 input with a 3×3 kernel, then a strided, padded multi-channel case.
pub fn check_conv(points: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = CheckReport::new("conv2d", points);
    for _ in 0..points {
        conv_point(&mut rng, &mut report, [1, 1, 4, 4], ConvGeometry { in_ch: 1, out_ch: 1, kernel: 3, stride: 1, pad: 0 })?;
        conv_point(&mut rng, &mut report, [2, 2, 5, 5], ConvGeometry { in_ch: 2, out_ch: 3, kernel: 3, stride: 2, pad: 1 })?;
    }
    Ok(report)
}

/// Random input whose pooling windows all have a winner ahead by more than
/// `1e-3`, so the probe cannot change which element wins.
fn tie_free_input(rng: &mut ChaCha8Rng, shape: [usize; 4], size: usize, stride: usize) -> Result<Vec<f64>> {
    let (oh, ow) = pool_output_size(shape[2], shape[3], size, stride)?;
    loop {
        let x = uniform(rng, shape.iter().product(), 1.0);
        let t = Tensor4::new(x.clone(), shape)?;
        let clear = (0..shape[0] * shape[1]).all(|plane| {
            let (n, c) = (plane / shape[1], plane % shape[1]);
            (0..oh * ow).all(|o| {
                let (oy, ox) = (o / ow, o % ow);
                let mut vals: Vec<f64> = (0..size * size)
                    .map(|k| t.get(n, c, oy * stride + k / size, ox * stride + k % size))
                    .collect();
                vals.sort_by(|a, b| b.total_cmp(a));
                vals[0] - vals[1] > 1e-3
            })
        });
        if clear {
            return Ok(x);
        }
    }
}

pub fn check_maxpool(points: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = CheckReport::new("maxpool", points);
    for (shape, size, stride) in [([1, 1, 4, 4], 2, 2), ([2, 3, 5, 5], 3, 2)] {
        for _ in 0..points {
            let x = tie_free_input(&mut rng, shape, size, stride)?;
            let (y, argmax) = maxpool_forward(&Tensor4::new(x.clone(), shape)?, size, stride)?;
            let coef = uniform(&mut rng, y.data().len(), 1.0);
            let dx = maxpool_backward(&Tensor4::new(coef.clone(), y.shape())?, &argmax, shape)?;
            let numeric = central_difference(
                |p| {
                    let t = Tensor4::new(p.to_vec(), shape).expect("shape fixed above");
                    dot(maxpool_forward(&t, size, stride).expect("window fits").0.data(), &coef)
                },
                &x,
                H,
            );
            report.compare("dx", dx.data(), &numeric);
        }
    }
    Ok(report)
}

/// Inputs are kept at least `1e-3` away from the kink at zero.
pub fn check_relu(points: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = CheckReport::new("relu", points);
    for _ in 0..points {
        let x: Vec<f64> = uniform(&mut rng, 12, 1.0)
            .into_iter()
            .map(|v| if v.abs() < 1e-3 { v + 0.01 } else { v })
            .collect();
        let coef = uniform(&mut rng, 12, 1.0);
        let dx = relu_backward(&relu_forward(&x), &coef)?;
        report.compare("dx", &dx, &central_difference(|p| dot(&relu_forward(p), &coef), &x, H));
    }
    Ok(report)
}

pub fn check_dense(points: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = CheckReport::new("dense", points);
    let (batch, inputs, outputs) = (3, 5, 4);
    for _ in 0..points {
        let x = uniform(&mut rng, batch * inputs, 1.0);
        let w = uniform(&mut rng, inputs * outputs, 1.0);
        let b = uniform(&mut rng, outputs, 1.0);
        let coef = uniform(&mut rng, batch * outputs, 1.0);
        let loss = |x: &[f64], w: &[f64], b: &[f64]| {
            dot(&dense_forward(x, w, b, inputs, outputs).expect("shapes fixed above"), &coef)
        };
        let g = dense_backward(&x, &w, &coef, inputs, outputs)?;
        report.compare("dx", &g.dx, &central_difference(|p| loss(p, &w, &b), &x, H));
        report.compare("dw", &g.dw, &central_difference(|p| loss(&x, p, &b), &w, H));
        report.compare("db", &g.db, &central_difference(|p| loss(&x, &w, p), &b, H));
    }
    Ok(report)
}

/// The mask is held fixed by re-seeding its generator for every evaluation.
pub fn check_dropout(points: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = CheckReport::new("dropout", points);
    for point in 0..points as u64 {
        let x = uniform(&mut rng, 16, 1.0);
        let coef = uniform(&mut rng, 16, 1.0);
        let forward = |p: &[f64]| {
            let mut mask_rng = ChaCha8Rng::seed_from_u64(seed ^ point);
            dropout_forward(p, 0.5, &mut mask_rng, true).expect("valid rate")
        };
        let (_, mask) = forward(&x);
        let dx = dropout_backward(&coef, mask.as_deref());
        report.compare("dx", &dx, &central_difference(|p| dot(&forward(p).0, &coef), &x, H));
    }
    Ok(report)
}

pub fn check_softmax_ce(points: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = CheckReport::new("softmax_ce", points);
    for _ in 0..points {
        let logits = uniform(&mut rng, 4 * 10, 3.0);
        let labels: Vec<usize> = (0..4).map(|_| rng.random_range(0..10)).collect();
        let out = softmax_cross_entropy(&logits, &labels, 10)?;
        let numeric = central_difference(
            |p| softmax_cross_entropy(p, &labels, 10).expect("shapes fixed above").loss,
            &logits,
            H,
        );
        report.compare("dlogits", &out.dlogits, &numeric);
    }
    Ok(report)
}

/// Central difference along `j`, or `None` when the loss is not smooth
/// within `2h`: second differences of a smooth function scale by four when
/// the step doubles, and a kink breaks that.
fn smooth_central_difference(f: &impl Fn(&[f64]) -> f64, x: &[f64], j: usize, f0: f64) -> Option<f64> {
    let mut probe = x.to_vec();
    let mut at = |dx: f64| {
        probe[j] = x[j] + dx;
        f(&probe)
    };
    let (ph, mh) = (at(H), at(-H));
    let small = at(H / 2.0) - 2.0 * f0 + at(-H / 2.0);
    let mid = ph - 2.0 * f0 + mh;
    let big = at(2.0 * H) - 2.0 * f0 + at(-2.0 * H);
    let off = |fine: f64, coarse: f64| (coarse - 4.0 * fine).abs() > 0.1 * coarse.abs() + 1e-13;
    if off(small, mid) || off(mid, big) {
        None
    } else {
        Some((ph - mh) / (2.0 * H))
    }
}

/// Checks `coords_per_block` random entries of each weight and bias block at
/// each of `points` random parameter vectors (He init plus jitter) with
/// random inputs and labels. Training mode, with the dropout mask held fixed.
pub fn check_model(
    name: &str,
    spec: ModelSpec,
    points: usize,
    batch: usize,
    coords_per_block: usize,
    seed: u64,
) -> Result<CheckReport> {
    let model = Model::new(spec)?;
    let (c, h, w) = model.spec().input;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = CheckReport::new(name, points);
    for point in 0..points as u64 {
        let params: Vec<f64> = init_params::<f64>(&model, &mut rng, InitScheme::He)
            .into_flat()
            .into_iter()
            .map(|p| p + rng.random_range(-0.05..0.05))
            .collect();
        let images = Tensor4::new(uniform(&mut rng, batch * c * h * w, 1.0), [batch, c, h, w])?;
        let labels: Vec<usize> = (0..batch).map(|_| rng.random_range(0..model.classes())).collect();
        let mask_seed = seed ^ point.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        let mask_rng = || ChaCha8Rng::seed_from_u64(mask_seed);
        let pass = model.forward_backward(&params, &images, &labels, &mut mask_rng(), true)?;
        let loss = |p: &[f64]| {
            model
                .forward(p, &images, &labels, &mut mask_rng(), true)
                .map_or(f64::NAN, |pass| pass.loss)
        };
        for (layer, slot) in model.slots() {
            for (block, range) in [("w", slot.weights.clone()), ("b", slot.bias.clone())] {
                for _ in 0..coords_per_block.min(range.len()) {
                    let j = rng.random_range(range.clone());
                    match smooth_central_difference(&loss, &params, j, pass.loss) {
                        Some(numeric) => report.record(
                            || format!("point {point} layer {layer} {block}[{}]", j - range.start),
                            pass.grads[j],
                            numeric,
                        ),
                        None => report.skipped += 1,
                    }
                }
            }
        }
    }
    Ok(report)
}

/// Every layer plus both reference models, `points` random points each.
pub fn check_all(points: usize, seed: u64) -> Result<Vec<CheckReport>> {
    Ok(vec![
        check_conv(points, seed)?,
        check_maxpool(points, seed + 1)?,
        check_relu(points, seed + 2)?,
        check_dense(points, seed + 3)?,
        check_dropout(points, seed + 4)?,
        check_softmax_ce(points, seed + 5)?,
        check_model("mnist-cnn", ModelSpec::mnist_cnn(), points, 2, 3, seed + 6)?,
        check_model("cifar-cnn", ModelSpec::cifar_cnn(), points, 1, 2, seed + 7)?,
    ])
}
