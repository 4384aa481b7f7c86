//! Stateful wrappers giving every optimizer the same in-place interface,
//! with the learning rate supplied per step by the caller's schedule.

use rand::RngCore;

use crate::baselines::{
    sgd_apply, AdagradHyper, AdagradState, AdamHyper, AdamState, MomentumHyper, MomentumState,
    SgdHyper,
};
use crate::error::Result;
use crate::pogd::{PogdHyper, PogdState};
use crate::scalar::Scalar;

/// Hyperparameters of any supported optimizer. The `eta` inside is only a
/// default; [`Optimizer::step`] takes the learning rate explicitly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerKind<T> {
    Sgd(SgdHyper<T>),
    Momentum(MomentumHyper<T>),
    Adagrad(AdagradHyper<T>),
    Adam(AdamHyper<T>),
    Pogd(PogdHyper<T>),
}

impl<T: Scalar> OptimizerKind<T> {
    pub fn name(&self) -> &'static str {
        match self {
            OptimizerKind::Sgd(_) => "sgd",
            OptimizerKind::Momentum(_) => "momentum",
            OptimizerKind::Adagrad(_) => "adagrad",
            OptimizerKind::Adam(_) => "adam",
            OptimizerKind::Pogd(_) => "pogd",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            OptimizerKind::Sgd(h) => h.validate(),
            OptimizerKind::Momentum(h) => h.validate(),
            OptimizerKind::Adagrad(h) => h.validate(),
            OptimizerKind::Adam(h) => h.validate(),
            OptimizerKind::Pogd(h) => h.validate(),
        }
    }

    /// Allocates zeroed state for `dim` parameters.
    pub fn build(self, dim: usize) -> Result<Optimizer<T>> {
        self.validate()?;
        let state = match self {
            OptimizerKind::Sgd(_) => {
                if dim == 0 {
                    return Err(crate::Error::InvalidDimension(0));
                }
                State::Sgd
            }
            OptimizerKind::Momentum(_) => State::Momentum(MomentumState::new(dim)?),
            OptimizerKind::Adagrad(_) => State::Adagrad(AdagradState::new(dim)?),
            OptimizerKind::Adam(_) => State::Adam(AdamState::new(dim)?),
            OptimizerKind::Pogd(_) => State::Pogd(PogdState::new(dim)?),
        };
        Ok(Optimizer { kind: self, state })
    }
}

#[derive(Debug, Clone, PartialEq)]
enum State<T> {
    Sgd,
    Momentum(MomentumState<T>),
    Adagrad(AdagradState<T>),
    Adam(AdamState<T>),
    Pogd(PogdState<T>),
}

/// An optimizer together with its per-parameter memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimizer<T> {
    kind: OptimizerKind<T>,
    state: State<T>,
}

impl<T: Scalar> Optimizer<T> {
    pub fn kind(&self) -> &OptimizerKind<T> {
        &self.kind
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn pogd_state(&self) -> Option<&PogdState<T>> {
        match &self.state {
            State::Pogd(s) => Some(s),
            _ => None,
        }
    }

    /// One update of `theta` with learning rate `eta`. Only POGD consumes `rng`.
    pub fn step(&mut self, theta: &mut [T], grad: &[T], eta: T, rng: &mut dyn RngCore) -> Result<()> {
        match (&self.kind, &mut self.state) {
            (OptimizerKind::Sgd(_), State::Sgd) => sgd_apply(theta, grad, &SgdHyper { eta }),
            (OptimizerKind::Momentum(h), State::Momentum(s)) => {
                s.apply(theta, grad, &MomentumHyper { eta, ..*h })
            }
            (OptimizerKind::Adagrad(h), State::Adagrad(s)) => {
                s.apply(theta, grad, &AdagradHyper { eta, ..*h })
            }
            (OptimizerKind::Adam(h), State::Adam(s)) => s.apply(theta, grad, &AdamHyper { eta, ..*h }),
            (OptimizerKind::Pogd(h), State::Pogd(s)) => {
                s.apply(theta, grad, &PogdHyper { eta, ..*h }, rng)
            }
            _ => unreachable!("optimizer state always matches its kind"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pogd::pogd_step;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn wrapper_matches_free_function() {
        let hyper = PogdHyper::<f64>::default();
        let mut opt = OptimizerKind::Pogd(hyper).build(3).unwrap();
        let mut theta = vec![0.5, -0.2, 1.0];
        let mut reference_state = PogdState::new(3).unwrap();
        let mut reference_theta = theta.clone();
        let mut rng_a = ChaCha8Rng::seed_from_u64(7);
        let mut rng_b = ChaCha8Rng::seed_from_u64(7);
        for k in 0..20 {
            let grad: Vec<f64> = theta.iter().map(|x| 2.0 * x + k as f64 * 0.01).collect();
            opt.step(&mut theta, &grad, 0.05, &mut rng_a).unwrap();
            let h = PogdHyper { eta: 0.05, ..hyper };
            let (s, t) = pogd_step(&reference_state, &reference_theta, &grad, &h, &mut rng_b).unwrap();
            reference_state = s;
            reference_theta = t.into_inner();
            assert_eq!(theta, reference_theta);
        }
        assert_eq!(opt.pogd_state().unwrap(), &reference_state);
    }

    #[test]
    fn names() {
        let kinds = [
            OptimizerKind::Sgd(SgdHyper { eta: 0.1 }),
            OptimizerKind::Momentum(MomentumHyper::with_eta(0.1)),
            OptimizerKind::Adagrad(AdagradHyper::with_eta(0.1)),
            OptimizerKind::Adam(AdamHyper::with_eta(0.1)),
            OptimizerKind::Pogd(PogdHyper::<f64>::default()),
        ];
        let names: Vec<_> = kinds.iter().map(|k| k.name()).collect();
        assert_eq!(names, ["sgd", "momentum", "adagrad", "adam", "pogd"]);
        for k in kinds {
            assert!(k.build(0).is_err());
        }
    }
}
