use pogd_core::Scalar;
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::model::{LayerSpec, Model};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitScheme {
    Zeros,
    /// Weights ~ N(0, 2/fan_in) for layers feeding a ReLU, N(0, 1/fan_in)
    /// otherwise; biases zero.
    #[default]
    He,
}

/// Flat parameter vector with per-layer views into it.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    flat: Vec<T>,
}

impl<T: Scalar> ModelParams<T> {
    pub fn from_flat(model: &Model, flat: Vec<T>) -> Option<Self> {
        (flat.len() == model.num_params()).then_some(ModelParams { flat })
    }

    pub fn flat(&self) -> &[T] {
        &self.flat
    }

    pub fn flat_mut(&mut self) -> &mut [T] {
        &mut self.flat
    }

    pub fn into_flat(self) -> Vec<T> {
        self.flat
    }

    /// Weight and bias slices of layer `layer`, if it has parameters.
    pub fn layer<'a>(&'a self, model: &Model, layer: usize) -> Option<(&'a [T], &'a [T])> {
        model
            .slot(layer)
            .map(|s| (&self.flat[s.weights.clone()], &self.flat[s.bias.clone()]))
    }
}

pub fn init_params<T: Scalar>(model: &Model, rng: &mut dyn RngCore, scheme: InitScheme) -> ModelParams<T> {
    let mut flat = vec![T::zero(); model.num_params()];
    if scheme == InitScheme::He {
        let layers = &model.spec().layers;
        for (i, slot) in model.slots() {
            let feeds_relu = matches!(layers.get(i + 1), Some(LayerSpec::Relu));
            let gain = if feeds_relu { 2.0 } else { 1.0 };
            let std = (gain / slot.fan_in as f64).sqrt();
            for w in &mut flat[slot.weights.clone()] {
                let z: f64 = StandardNormal.sample(rng);
                *w = T::lit(z * std);
            }
        }
    }
    ModelParams { flat }
}
