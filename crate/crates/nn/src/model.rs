//! Sequential models: spec validation, parameter layout and the fused
//! forward/backward pass.

use std::ops::Range;

use pogd_core::Scalar;
use rand::RngCore;

use crate::error::{mismatch, NnError, Result};
use crate::layers::{
    conv2d_backward, conv2d_forward, dense_backward, dense_forward, dropout_backward,
    dropout_forward, maxpool_backward, maxpool_forward, pool_output_size, relu_backward,
    relu_forward, softmax_cross_entropy, ConvGeometry,
};
use crate::tensor::Tensor4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LayerSpec {
    Conv2d {
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
        pad: usize,
    },
    MaxPool {
        size: usize,
        stride: usize,
    },
    Relu,
    Flatten,
    Dense {
        inputs: usize,
        outputs: usize,
    },
    Dropout {
        rate: f64,
    },
    SoftmaxCrossEntropy {
        classes: usize,
    },
}

/// Input geometry `(channels, height, width)` plus the ordered layers.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub input: (usize, usize, usize),
    pub layers: Vec<LayerSpec>,
}

impl ModelSpec {
    /// Conv(1→8, 3×3, pad 1) → ReLU → MaxPool(2) → Flatten → Dropout(0.5) → Dense(1568→10).
    pub fn mnist_cnn() -> Self {
        ModelSpec {
            input: (1, 28, 28),
            layers: vec![
                LayerSpec::Conv2d { in_ch: 1, out_ch: 8, kernel: 3, stride: 1, pad: 1 },
                LayerSpec::Relu,
                LayerSpec::MaxPool { size: 2, stride: 2 },
                LayerSpec::Flatten,
                LayerSpec::Dropout { rate: 0.5 },
                LayerSpec::Dense { inputs: 8 * 14 * 14, outputs: 10 },
                LayerSpec::SoftmaxCrossEntropy { classes: 10 },
            ],
        }
    }

    /// Two conv/ReLU/pool stages (3→16→32 channels) → Dropout(0.5) → Dense(2048→10).
    pub fn cifar_cnn() -> Self {
        ModelSpec {
            input: (3, 32, 32),
            layers: vec![
                LayerSpec::Conv2d { in_ch: 3, out_ch: 16, kernel: 3, stride: 1, pad: 1 },
                LayerSpec::Relu,
                LayerSpec::MaxPool { size: 2, stride: 2 },
                LayerSpec::Conv2d { in_ch: 16, out_ch: 32, kernel: 3, stride: 1, pad: 1 },
                LayerSpec::Relu,
                LayerSpec::MaxPool { size: 2, stride: 2 },
                LayerSpec::Flatten,
                LayerSpec::Dropout { rate: 0.5 },
                LayerSpec::Dense { inputs: 32 * 8 * 8, outputs: 10 },
                LayerSpec::SoftmaxCrossEntropy { classes: 10 },
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Activation {
    Spatial(usize, usize, usize),
    Flat(usize),
}

impl Activation {
    fn len(self) -> usize {
        match self {
            Activation::Spatial(c, h, w) => c * h * w,
            Activation::Flat(n) => n,
        }
    }
}

/// Where one layer's weights and bias live inside the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamSlot {
    pub weights: Range<usize>,
    pub bias: Range<usize>,
    /// Inputs feeding each output unit.
    pub fan_in: usize,
}

/// A validated model: shapes are checked once here, never during a pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    spec: ModelSpec,
    shapes: Vec<Activation>,
    slots: Vec<Option<ParamSlot>>,
    num_params: usize,
    classes: usize,
}

impl Model {
    pub fn new(spec: ModelSpec) -> Result<Self> {
        let (c, h, w) = spec.input;
        if c == 0 || h == 0 || w == 0 {
            return Err(NnError::InvalidModel(format!("empty input shape {:?}", spec.input)));
        }
        let mut cur = Activation::Spatial(c, h, w);
        let mut shapes = vec![cur];
        let mut slots = Vec::with_capacity(spec.layers.len());
        let mut offset = 0;
        let mut classes = None;
        let last = spec.layers.len().saturating_sub(1);
        for (i, layer) in spec.layers.iter().enumerate() {
            if classes.is_some() {
                return Err(NnError::InvalidModel("the loss layer must be last".into()));
            }
            let invalid = |msg: String| NnError::InvalidModel(format!("layer {i} ({layer:?}): {msg}"));
            let mut slot = None;
            cur = match (*layer, cur) {
                (
                    LayerSpec::Conv2d { in_ch, out_ch, kernel, stride, pad },
                    Activation::Spatial(c, h, w),
                ) => {
                    if in_ch != c {
                        return Err(invalid(format!("expects {in_ch} channels, gets {c}")));
                    }
                    if out_ch == 0 {
                        return Err(invalid("no output channels".into()));
                    }
                    let geom = ConvGeometry { in_ch, out_ch, kernel, stride, pad };
                    let (oh, ow) = geom.output_size(h, w)?;
                    let wlen = geom.weight_len();
                    slot = Some(ParamSlot {
                        weights: offset..offset + wlen,
                        bias: offset + wlen..offset + wlen + out_ch,
                        fan_in: in_ch * kernel * kernel,
                    });
                    offset += wlen + out_ch;
                    Activation::Spatial(out_ch, oh, ow)
                }
                (LayerSpec::MaxPool { size, stride }, Activation::Spatial(c, h, w)) => {
                    let (oh, ow) = pool_output_size(h, w, size, stride)?;
                    Activation::Spatial(c, oh, ow)
                }
                (LayerSpec::Conv2d { .. } | LayerSpec::MaxPool { .. }, Activation::Flat(_)) => {
                    return Err(invalid("needs a spatial input".into()));
                }
                (LayerSpec::Relu, a) => a,
                (LayerSpec::Flatten, a) => Activation::Flat(a.len()),
                (LayerSpec::Dropout { rate }, a) => {
                    if !(0.0..1.0).contains(&rate) {
                        return Err(NnError::InvalidDropoutRate(rate));
                    }
                    a
                }
                (LayerSpec::Dense { inputs, outputs }, Activation::Flat(n)) => {
                    if inputs != n {
                        return Err(invalid(format!("expects {inputs} inputs, gets {n}")));
                    }
                    if outputs == 0 {
                        return Err(invalid("no outputs".into()));
                    }
                    slot = Some(ParamSlot {
                        weights: offset..offset + inputs * outputs,
                        bias: offset + inputs * outputs..offset + inputs * outputs + outputs,
                        fan_in: inputs,
                    });
                    offset += inputs * outputs + outputs;
                    Activation::Flat(outputs)
                }
                (LayerSpec::Dense { .. }, Activation::Spatial(..)) => {
                    return Err(invalid("needs a flattened input".into()));
                }
                (LayerSpec::SoftmaxCrossEntropy { classes: k }, Activation::Flat(n)) => {
                    if k != n || k < 2 {
                        return Err(invalid(format!("{k} classes over {n} logits")));
                    }
                    if i != last {
                        return Err(NnError::InvalidModel("the loss layer must be last".into()));
                    }
                    classes = Some(k);
                    Activation::Flat(n)
                }
                (LayerSpec::SoftmaxCrossEntropy { .. }, Activation::Spatial(..)) => {
                    return Err(invalid("needs flattened logits".into()));
                }
            };
            shapes.push(cur);
            slots.push(slot);
        }
        let classes =
            classes.ok_or_else(|| NnError::InvalidModel("missing softmax cross-entropy layer".into()))?;
        Ok(Model {
            spec,
            shapes,
            slots,
            num_params: offset,
            classes,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn num_params(&self) -> usize {
        self.num_params
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    /// Parameter slot of layer `i`, if it has parameters.
    pub fn slot(&self, i: usize) -> Option<&ParamSlot> {
        self.slots.get(i).and_then(Option::as_ref)
    }

    pub fn slots(&self) -> impl Iterator<Item = (usize, &ParamSlot)> {
        self.slots
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.as_ref().map(|s| (i, s)))
    }

    fn check_batch<T: Scalar>(&self, params: &[T], images: &Tensor4<T>, labels: &[usize]) -> Result<()> {
        if params.len() != self.num_params {
            return Err(mismatch("parameter vector", self.num_params, params.len()));
        }
        let [n, c, h, w] = images.shape();
        if (c, h, w) != self.spec.input {
            return Err(mismatch("batch image shape", self.spec.input, (c, h, w)));
        }
        if n == 0 {
            return Err(NnError::EmptyBatch);
        }
        if labels.len() != n {
            return Err(mismatch("label count", n, labels.len()));
        }
        Ok(())
    }

    /// Mean loss, accuracy and the flat gradient for one batch.
    ///
    /// In training mode dropout draws its masks from `rng`; in evaluation mode
    /// `rng` is never touched.
    pub fn forward_backward<T: Scalar>(
        &self,
        params: &[T],
        images: &Tensor4<T>,
        labels: &[usize],
        rng: &mut dyn RngCore,
        train: bool,
    ) -> Result<Pass<T>> {
        self.run(params, images, labels, rng, train, true)
    }

    /// Loss and accuracy without the backward pass; `grads` is empty.
    pub fn forward<T: Scalar>(
        &self,
        params: &[T],
        images: &Tensor4<T>,
        labels: &[usize],
        rng: &mut dyn RngCore,
        train: bool,
    ) -> Result<Pass<T>> {
        self.run(params, images, labels, rng, train, false)
    }

    /// Evaluation-mode loss and accuracy, without gradients.
    pub fn evaluate<T: Scalar>(
        &self,
        params: &[T],
        images: &Tensor4<T>,
        labels: &[usize],
    ) -> Result<Pass<T>> {
        self.run(params, images, labels, &mut NoRng, false, false)
    }

    fn run<T: Scalar>(
        &self,
        params: &[T],
        images: &Tensor4<T>,
        labels: &[usize],
        rng: &mut dyn RngCore,
        train: bool,
        backward: bool,
    ) -> Result<Pass<T>> {
        self.check_batch(params, images, labels)?;
        let n = images.batch();
        let mut caches = Vec::with_capacity(self.spec.layers.len());
        let mut act = images.clone();
        let mut loss = None;

        for (i, layer) in self.spec.layers.iter().enumerate() {
            let shape_out = self.shapes[i + 1];
            match *layer {
                LayerSpec::Conv2d { in_ch, out_ch, kernel, stride, pad } => {
                    let slot = self.slots[i].as_ref().expect("conv has parameters");
                    let geom = ConvGeometry { in_ch, out_ch, kernel, stride, pad };
                    let out = conv2d_forward(&act, &params[slot.weights.clone()], &params[slot.bias.clone()], &geom)?;
                    caches.push(Cache::Conv { input: act, geom });
                    act = out;
                }
                LayerSpec::MaxPool { size, stride } => {
                    let (out, argmax) = maxpool_forward(&act, size, stride)?;
                    caches.push(Cache::Pool { argmax, input_shape: act.shape() });
                    act = out;
                }
                LayerSpec::Relu => {
                    let out = Tensor4::new(relu_forward(act.data()), act.shape())?;
                    act = out;
                    caches.push(Cache::Relu { output: if backward { Some(act.data().to_vec()) } else { None } });
                }
                LayerSpec::Flatten => {
                    let shape = act.shape();
                    act = Tensor4::new(act.into_data(), [n, shape_out.len(), 1, 1])?;
                    caches.push(Cache::Reshape { shape });
                }
                LayerSpec::Dropout { rate } => {
                    let (out, mask) = dropout_forward(act.data(), rate, rng, train)?;
                    act = Tensor4::new(out, act.shape())?;
                    caches.push(Cache::Dropout { mask });
                }
                LayerSpec::Dense { inputs, outputs } => {
                    let slot = self.slots[i].as_ref().expect("dense has parameters");
                    let out = dense_forward(
                        act.data(),
                        &params[slot.weights.clone()],
                        &params[slot.bias.clone()],
                        inputs,
                        outputs,
                    )?;
                    let input = std::mem::replace(&mut act, Tensor4::new(out, [n, outputs, 1, 1])?);
                    caches.push(Cache::Dense { input, inputs, outputs });
                }
                LayerSpec::SoftmaxCrossEntropy { classes } => {
                    let out = softmax_cross_entropy(act.data(), labels, classes)?;
                    if !out.loss.is_finite() {
                        return Err(NnError::NonFiniteLoss);
                    }
                    loss = Some(out);
                    caches.push(Cache::Loss);
                }
            }
        }

        let out = loss.expect("validated model ends with a loss layer");
        let mut pass = Pass {
            loss: out.loss,
            accuracy: out.accuracy,
            grads: Vec::new(),
        };
        if !backward {
            return Ok(pass);
        }

        let mut grads = vec![T::zero(); self.num_params];
        let mut upstream: Option<Tensor4<T>> = None;
        for (i, cache) in caches.into_iter().enumerate().rev() {
            upstream = Some(match cache {
                Cache::Loss => Tensor4::new(out.dlogits.clone(), [n, self.classes, 1, 1])?,
                Cache::Dense { input, inputs, outputs } => {
                    let slot = self.slots[i].as_ref().expect("dense has parameters");
                    let g = upstream.take().expect("upstream gradient");
                    let dg = dense_backward(input.data(), &params[slot.weights.clone()], g.data(), inputs, outputs)?;
                    grads[slot.weights.clone()].copy_from_slice(&dg.dw);
                    grads[slot.bias.clone()].copy_from_slice(&dg.db);
                    Tensor4::new(dg.dx, input.shape())?
                }
                Cache::Dropout { mask } => {
                    let g = upstream.take().expect("upstream gradient");
                    Tensor4::new(dropout_backward(g.data(), mask.as_deref()), g.shape())?
                }
                Cache::Reshape { shape } => {
                    let g = upstream.take().expect("upstream gradient");
                    Tensor4::new(g.into_data(), shape)?
                }
                Cache::Relu { output } => {
                    let g = upstream.take().expect("upstream gradient");
                    let output = output.expect("kept for backward");
                    Tensor4::new(relu_backward(&output, g.data())?, g.shape())?
                }
                Cache::Pool { argmax, input_shape } => {
                    let g = upstream.take().expect("upstream gradient");
                    maxpool_backward(&g, &argmax, input_shape)?
                }
                Cache::Conv { input, geom } => {
                    let slot = self.slots[i].as_ref().expect("conv has parameters");
                    let g = upstream.take().expect("upstream gradient");
                    let cg = conv2d_backward(&input, &params[slot.weights.clone()], &geom, &g, i > 0)?;
                    grads[slot.weights.clone()].copy_from_slice(&cg.dw);
                    grads[slot.bias.clone()].copy_from_slice(&cg.db);
                    match cg.dx {
                        Some(dx) => dx,
                        None => break,
                    }
                }
            });
        }
        pass.grads = grads;
        Ok(pass)
    }
}

/// Result of one batch pass. `grads` is empty unless the pass ran backward.
#[derive(Debug, Clone, PartialEq)]
pub struct Pass<T> {
    pub loss: T,
    pub accuracy: T,
    pub grads: Vec<T>,
}

enum Cache<T> {
    Conv { input: Tensor4<T>, geom: ConvGeometry },
    Pool { argmax: Vec<usize>, input_shape: [usize; 4] },
    Relu { output: Option<Vec<T>> },
    Reshape { shape: [usize; 4] },
    Dropout { mask: Option<Vec<T>> },
    Dense { input: Tensor4<T>, inputs: usize, outputs: usize },
    Loss,
}

/// Stand-in random source for evaluation passes, which must not draw.
struct NoRng;

impl RngCore for NoRng {
    fn next_u32(&mut self) -> u32 {
        unreachable!("evaluation mode never draws")
    }
    fn next_u64(&mut self) -> u64 {
        unreachable!("evaluation mode never draws")
    }
    fn fill_bytes(&mut self, _: &mut [u8]) {
        unreachable!("evaluation mode never draws")
    }
}
