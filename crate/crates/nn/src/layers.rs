//! Forward and backward passes of the individual layers.
//!
//! Weights are laid out `[out_ch, in_ch, k, k]` for convolutions and
//! `[out, in]` for dense layers; dense activations are `[batch, features]`.

use pogd_core::Scalar;
use rand::{Rng, RngCore};

use crate::error::{mismatch, NnError, Result};
use crate::tensor::Tensor4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvGeometry {
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
}

impl ConvGeometry {
    pub fn weight_len(&self) -> usize {
        self.out_ch * self.in_ch * self.kernel * self.kernel
    }

    /// Output `(height, width)` for an input of the given size.
    pub fn output_size(&self, height: usize, width: usize) -> Result<(usize, usize)> {
        if self.stride == 0 || self.kernel == 0 {
            return Err(NnError::InvalidModel(format!(
                "convolution needs kernel and stride >= 1, got {self:?}"
            )));
        }
        let (ph, pw) = (height + 2 * self.pad, width + 2 * self.pad);
        if self.kernel > ph || self.kernel > pw {
            return Err(NnError::WindowTooLarge {
                context: "conv2d",
                window: self.kernel,
                height: ph,
                width: pw,
            });
        }
        Ok((
            (ph - self.kernel) / self.stride + 1,
            (pw - self.kernel) / self.stride + 1,
        ))
    }

    fn check(&self, x: &Tensor4<impl Scalar>, w_len: usize, b_len: usize) -> Result<(usize, usize)> {
        if x.shape()[1] != self.in_ch {
            return Err(mismatch("conv2d input channels", self.in_ch, x.shape()[1]));
        }
        if w_len != self.weight_len() {
            return Err(mismatch("conv2d weights", self.weight_len(), w_len));
        }
        if b_len != self.out_ch {
            return Err(mismatch("conv2d bias", self.out_ch, b_len));
        }
        self.output_size(x.shape()[2], x.shape()[3])
    }
}

/// Output positions `o` (half-open range) whose tap `o·stride + tap − pad`
/// lands inside an input of length `len`.
fn valid_range(out_len: usize, len: usize, stride: usize, tap: usize, pad: usize) -> (usize, usize) {
    let lo = if pad > tap { (pad - tap).div_ceil(stride) } else { 0 };
    let hi = if len + pad > tap { ((len + pad - tap - 1) / stride + 1).min(out_len) } else { 0 };
    (lo, hi.max(lo))
}

/// Cross-correlation of `x` with `w`, plus the per-channel bias.
pub fn conv2d_forward<T: Scalar>(
    x: &Tensor4<T>,
    w: &[T],
    b: &[T],
    geom: &ConvGeometry,
) -> Result<Tensor4<T>> {
    let (oh, ow) = geom.check(x, w.len(), b.len())?;
    let [n, ic, ih, iw] = x.shape();
    let (k, s, p) = (geom.kernel, geom.stride, geom.pad);
    let mut out = Tensor4::zeros([n, geom.out_ch, oh, ow]);
    let xd = x.data();
    let od = out.data_mut();
    for ni in 0..n {
        for oc in 0..geom.out_ch {
            let obase = (ni * geom.out_ch + oc) * oh * ow;
            od[obase..obase + oh * ow].fill(b[oc]);
            for c in 0..ic {
                let xbase = (ni * ic + c) * ih * iw;
                for ky in 0..k {
                    let (ylo, yhi) = valid_range(oh, ih, s, ky, p);
                    for kx in 0..k {
                        let wv = w[((oc * ic + c) * k + ky) * k + kx];
                        let (xlo, xhi) = valid_range(ow, iw, s, kx, p);
                        if xlo == xhi {
                            continue;
                        }
                        for oy in ylo..yhi {
                            let xrow = xbase + (oy * s + ky - p) * iw;
                            let orow = obase + oy * ow;
                            let xs = xd[xrow + xlo * s + kx - p..].iter().step_by(s);
                            for (o, &xv) in od[orow + xlo..orow + xhi].iter_mut().zip(xs) {
                                *o = *o + wv * xv;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvGrads<T> {
    /// Gradient w.r.t. the input; `None` when not requested.
    pub dx: Option<Tensor4<T>>,
    pub dw: Vec<T>,
    pub db: Vec<T>,
}

/// Exact gradients of [`conv2d_forward`] given the upstream gradient.
pub fn conv2d_backward<T: Scalar>(
    x: &Tensor4<T>,
    w: &[T],
    geom: &ConvGeometry,
    grad_out: &Tensor4<T>,
    need_dx: bool,
) -> Result<ConvGrads<T>> {
    let (oh, ow) = geom.check(x, w.len(), geom.out_ch)?;
    let [n, ic, ih, iw] = x.shape();
    let expected = [n, geom.out_ch, oh, ow];
    if grad_out.shape() != expected {
        return Err(mismatch("conv2d upstream gradient", expected, grad_out.shape()));
    }
    let (k, s, p) = (geom.kernel, geom.stride, geom.pad);
    let mut dw = vec![T::zero(); w.len()];
    let mut db = vec![T::zero(); geom.out_ch];
    let mut dx = need_dx.then(|| Tensor4::zeros(x.shape()));
    let xd = x.data();
    let gd = grad_out.data();
    for ni in 0..n {
        for oc in 0..geom.out_ch {
            let gbase = (ni * geom.out_ch + oc) * oh * ow;
            db[oc] = db[oc] + gd[gbase..gbase + oh * ow].iter().copied().sum::<T>();
            for c in 0..ic {
                let xbase = (ni * ic + c) * ih * iw;
                for ky in 0..k {
                    let (ylo, yhi) = valid_range(oh, ih, s, ky, p);
                    for kx in 0..k {
                        let widx = ((oc * ic + c) * k + ky) * k + kx;
                        let wv = w[widx];
                        let (xlo, xhi) = valid_range(ow, iw, s, kx, p);
                        if xlo == xhi {
                            continue;
                        }
                        let mut acc = T::zero();
                        for oy in ylo..yhi {
                            let xstart = xbase + (oy * s + ky - p) * iw + xlo * s + kx - p;
                            let grow = &gd[gbase + oy * ow + xlo..gbase + oy * ow + xhi];
                            for (&g, &xv) in grow.iter().zip(xd[xstart..].iter().step_by(s)) {
                                acc = acc + g * xv;
                            }
                            if let Some(dx) = dx.as_mut() {
                                let d = dx.data_mut()[xstart..].iter_mut().step_by(s);
                                for (&g, dv) in grow.iter().zip(d) {
                                    *dv = *dv + g * wv;
                                }
                            }
                        }
                        dw[widx] = dw[widx] + acc;
                    }
                }
            }
        }
    }
    Ok(ConvGrads { dx, dw, db })
}

/// Max over each `size × size` window. Returns the pooled tensor and, per
/// output element, the flat input index it came from. Ties go to the first
/// element in row-major window order.
pub fn maxpool_forward<T: Scalar>(
    x: &Tensor4<T>,
    size: usize,
    stride: usize,
) -> Result<(Tensor4<T>, Vec<usize>)> {
    let [n, c, ih, iw] = x.shape();
    let (oh, ow) = pool_output_size(ih, iw, size, stride)?;
    let mut out = Tensor4::zeros([n, c, oh, ow]);
    let mut argmax = vec![0usize; n * c * oh * ow];
    let xd = x.data();
    let mut o = 0;
    for plane in 0..n * c {
        let base = plane * ih * iw;
        for oy in 0..oh {
            for ox in 0..ow {
                let mut best = base + oy * stride * iw + ox * stride;
                for dy in 0..size {
                    let row = base + (oy * stride + dy) * iw + ox * stride;
                    for dx in 0..size {
                        if xd[row + dx] > xd[best] {
                            best = row + dx;
                        }
                    }
                }
                out.data_mut()[o] = xd[best];
                argmax[o] = best;
                o += 1;
            }
        }
    }
    Ok((out, argmax))
}

pub fn pool_output_size(
    height: usize,
    width: usize,
    size: usize,
    stride: usize,
) -> Result<(usize, usize)> {
    if size == 0 || stride == 0 {
        return Err(NnError::InvalidModel(
            "max-pool needs size and stride >= 1".into(),
        ));
    }
    if size > height || size > width {
        return Err(NnError::WindowTooLarge {
            context: "maxpool",
            window: size,
            height,
            width,
        });
    }
    Ok(((height - size) / stride + 1, (width - size) / stride + 1))
}

/// Routes each upstream gradient to the input element that won its window.
pub fn maxpool_backward<T: Scalar>(
    grad_out: &Tensor4<T>,
    argmax: &[usize],
    input_shape: [usize; 4],
) -> Result<Tensor4<T>> {
    if grad_out.data().len() != argmax.len() {
        return Err(mismatch("maxpool upstream gradient", argmax.len(), grad_out.data().len()));
    }
    let mut dx = Tensor4::zeros(input_shape);
    let d = dx.data_mut();
    for (&src, &g) in argmax.iter().zip(grad_out.data()) {
        d[src] = d[src] + g;
    }
    Ok(dx)
}

pub fn relu_forward<T: Scalar>(x: &[T]) -> Vec<T> {
    x.iter().map(|&v| v.max(T::zero())).collect()
}

/// Gradient of ReLU given its forward output; zero where the unit was off.
pub fn relu_backward<T: Scalar>(out: &[T], grad: &[T]) -> Result<Vec<T>> {
    if out.len() != grad.len() {
        return Err(mismatch("relu upstream gradient", out.len(), grad.len()));
    }
    Ok(out
        .iter()
        .zip(grad)
        .map(|(&o, &g)| if o > T::zero() { g } else { T::zero() })
        .collect())
}

/// `y = x·Wᵀ + b` for a `[batch, inputs]` activation.
pub fn dense_forward<T: Scalar>(
    x: &[T],
    w: &[T],
    b: &[T],
    inputs: usize,
    outputs: usize,
) -> Result<Vec<T>> {
    check_dense(x, w, b, inputs, outputs)?;
    let batch = x.len() / inputs;
    let mut y = Vec::with_capacity(batch * outputs);
    for row in x.chunks_exact(inputs) {
        for o in 0..outputs {
            let wr = &w[o * inputs..(o + 1) * inputs];
            let dot: T = row.iter().zip(wr).map(|(&a, &b)| a * b).sum();
            y.push(dot + b[o]);
        }
    }
    Ok(y)
}

fn check_dense<T>(x: &[T], w: &[T], b: &[T], inputs: usize, outputs: usize) -> Result<()> {
    if inputs == 0 || !x.len().is_multiple_of(inputs) {
        return Err(mismatch("dense input width", inputs, x.len()));
    }
    if w.len() != inputs * outputs {
        return Err(mismatch("dense weights", inputs * outputs, w.len()));
    }
    if b.len() != outputs {
        return Err(mismatch("dense bias", outputs, b.len()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrads<T> {
    pub dx: Vec<T>,
    pub dw: Vec<T>,
    pub db: Vec<T>,
}

pub fn dense_backward<T: Scalar>(
    x: &[T],
    w: &[T],
    grad_out: &[T],
    inputs: usize,
    outputs: usize,
) -> Result<DenseGrads<T>> {
    let zeros = vec![T::zero(); outputs];
    check_dense(x, w, &zeros, inputs, outputs)?;
    let batch = x.len() / inputs;
    if grad_out.len() != batch * outputs {
        return Err(mismatch("dense upstream gradient", batch * outputs, grad_out.len()));
    }
    let mut dx = vec![T::zero(); x.len()];
    let mut dw = vec![T::zero(); w.len()];
    let mut db = zeros;
    for n in 0..batch {
        let xr = &x[n * inputs..(n + 1) * inputs];
        let dxr = &mut dx[n * inputs..(n + 1) * inputs];
        for o in 0..outputs {
            let g = grad_out[n * outputs + o];
            db[o] = db[o] + g;
            let wr = &w[o * inputs..(o + 1) * inputs];
            let dwr = &mut dw[o * inputs..(o + 1) * inputs];
            for i in 0..inputs {
                dwr[i] = dwr[i] + g * xr[i];
                dxr[i] = dxr[i] + g * wr[i];
            }
        }
    }
    Ok(DenseGrads { dx, dw, db })
}

/// Inverted dropout. In training each element is zeroed with probability
/// `rate` and survivors are scaled by `1 / (1 − rate)`; the returned mask
/// holds those per-element factors. In evaluation it is the identity and no
/// mask is produced.
pub fn dropout_forward<T: Scalar>(
    x: &[T],
    rate: f64,
    rng: &mut dyn RngCore,
    train: bool,
) -> Result<(Vec<T>, Option<Vec<T>>)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(NnError::InvalidDropoutRate(rate));
    }
    if !train || rate == 0.0 {
        return Ok((x.to_vec(), None));
    }
    let keep = T::lit(1.0 / (1.0 - rate));
    let mask: Vec<T> = (0..x.len())
        .map(|_| {
            if rng.random::<f64>() < rate {
                T::zero()
            } else {
                keep
            }
        })
        .collect();
    let y = x.iter().zip(&mask).map(|(&a, &m)| a * m).collect();
    Ok((y, Some(mask)))
}

pub fn dropout_backward<T: Scalar>(grad: &[T], mask: Option<&[T]>) -> Vec<T> {
    match mask {
        Some(m) => grad.iter().zip(m).map(|(&g, &k)| g * k).collect(),
        None => grad.to_vec(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossOutput<T> {
    /// Mean cross-entropy over the batch.
    pub loss: T,
    /// Fraction of rows whose arg-max logit is the label (first index on ties).
    pub accuracy: T,
    /// Gradient of the mean loss w.r.t. the logits.
    pub dlogits: Vec<T>,
}

/// Softmax followed by mean cross-entropy against integer labels.
pub fn softmax_cross_entropy<T: Scalar>(
    logits: &[T],
    labels: &[usize],
    classes: usize,
) -> Result<LossOutput<T>> {
    if labels.is_empty() {
        return Err(NnError::EmptyBatch);
    }
    if logits.len() != labels.len() * classes {
        return Err(mismatch("softmax logits", labels.len() * classes, logits.len()));
    }
    let batch = T::lit(labels.len() as f64);
    let mut loss = T::zero();
    let mut correct = 0usize;
    let mut dlogits = Vec::with_capacity(logits.len());
    for (row, &label) in logits.chunks_exact(classes).zip(labels) {
        if label >= classes {
            return Err(NnError::LabelOutOfRange { label, classes });
        }
        let mut arg = 0;
        for (i, &z) in row.iter().enumerate() {
            if z > row[arg] {
                arg = i;
            }
        }
        if arg == label {
            correct += 1;
        }
        let max = row[arg];
        let denom: T = row.iter().map(|&z| (z - max).exp()).sum();
        let log_denom = denom.ln();
        loss = loss + log_denom - (row[label] - max);
        for (i, &z) in row.iter().enumerate() {
            let p = (z - max).exp() / denom;
            let target = if i == label { T::one() } else { T::zero() };
            dlogits.push((p - target) / batch);
        }
    }
    Ok(LossOutput {
        loss: loss / batch,
        accuracy: T::lit(correct as f64) / batch,
        dlogits,
    })
}
