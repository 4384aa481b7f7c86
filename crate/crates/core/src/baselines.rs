//! The comparison optimizers: SGD, momentum, AdaGrad and Adam.
//!
//! Batch gradient descent is [`sgd_step`] fed a full-batch gradient.

use crate::error::{Error, Result};
use crate::params::{check_step, Params};
use crate::scalar::Scalar;

fn invalid<T: Scalar>(name: &'static str, value: T, reason: &'static str) -> Error {
    Error::InvalidHyper {
        name,
        value: value.as_f64(),
        reason,
    }
}

fn positive<T: Scalar>(name: &'static str, value: T) -> Result<()> {
    if value > T::zero() {
        Ok(())
    } else {
        Err(invalid(name, value, "must be positive"))
    }
}

fn unit_interval<T: Scalar>(name: &'static str, value: T) -> Result<()> {
    if value >= T::zero() && value < T::one() {
        Ok(())
    } else {
        Err(invalid(name, value, "must lie in [0, 1)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgdHyper<T> {
    pub eta: T,
}

impl<T: Scalar> SgdHyper<T> {
    pub fn validate(&self) -> Result<()> {
        positive("eta", self.eta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumHyper<T> {
    pub eta: T,
    /// Momentum coefficient.
    pub p: T,
}

impl<T: Scalar> MomentumHyper<T> {
    pub fn with_eta(eta: T) -> Self {
        MomentumHyper { eta, p: T::lit(0.9) }
    }

    pub fn validate(&self) -> Result<()> {
        positive("eta", self.eta)?;
        unit_interval("p", self.p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdagradHyper<T> {
    pub eta: T,
    pub epsilon: T,
}

impl<T: Scalar> AdagradHyper<T> {
    pub fn with_eta(eta: T) -> Self {
        AdagradHyper {
            eta,
            epsilon: T::lit(1e-8),
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("eta", self.eta)?;
        positive("epsilon", self.epsilon)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamHyper<T> {
    pub eta: T,
    pub beta1: T,
    pub beta2: T,
    pub epsilon: T,
    /// Divide the moments by `1 − βᵗ`. Off by default: the uncorrected form
    /// uses the raw moving averages.
    pub bias_correction: bool,
}

impl<T: Scalar> AdamHyper<T> {
    pub fn with_eta(eta: T) -> Self {
        AdamHyper {
            eta,
            beta1: T::lit(0.9),
            beta2: T::lit(0.999),
            epsilon: T::lit(1e-8),
            bias_correction: false,
        }
    }

    pub fn corrected(self) -> Self {
        AdamHyper {
            bias_correction: true,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("eta", self.eta)?;
        positive("epsilon", self.epsilon)?;
        unit_interval("beta1", self.beta1)?;
        unit_interval("beta2", self.beta2)
    }
}

/// `θ − η·g`, in place.
pub fn sgd_apply<T: Scalar>(theta: &mut [T], grad: &[T], hyper: &SgdHyper<T>) -> Result<()> {
    hyper.validate()?;
    check_step(theta.len(), theta, grad)?;
    for (x, &g) in theta.iter_mut().zip(grad) {
        *x = *x - hyper.eta * g;
    }
    Ok(())
}

pub fn sgd_step<T: Scalar>(theta: &[T], grad: &[T], hyper: &SgdHyper<T>) -> Result<Params<T>> {
    let mut out = Params::from(theta);
    sgd_apply(&mut out, grad, hyper)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentumState<T> {
    pub v_prev: Params<T>,
}

impl<T: Scalar> MomentumState<T> {
    pub fn new(dim: usize) -> Result<Self> {
        nonzero(dim)?;
        Ok(MomentumState {
            v_prev: Params::zeros(dim),
        })
    }

    /// `v = p·v + η·g`, `θ −= v`.
    pub fn apply(&mut self, theta: &mut [T], grad: &[T], hyper: &MomentumHyper<T>) -> Result<()> {
        hyper.validate()?;
        check_step(self.v_prev.len(), theta, grad)?;
        for ((x, v), &g) in theta.iter_mut().zip(self.v_prev.iter_mut()).zip(grad) {
            *v = hyper.p * *v + hyper.eta * g;
            *x = *x - *v;
        }
        Ok(())
    }
}

pub fn momentum_step<T: Scalar>(
    state: &MomentumState<T>,
    theta: &[T],
    grad: &[T],
    hyper: &MomentumHyper<T>,
) -> Result<(MomentumState<T>, Params<T>)> {
    let mut next = state.clone();
    let mut theta = Params::from(theta);
    next.apply(&mut theta, grad, hyper)?;
    Ok((next, theta))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdagradState<T> {
    /// Diagonal of the squared-gradient accumulator.
    pub g_sq: Params<T>,
}

impl<T: Scalar> AdagradState<T> {
    pub fn new(dim: usize) -> Result<Self> {
        nonzero(dim)?;
        Ok(AdagradState {
            g_sq: Params::zeros(dim),
        })
    }

    /// `G += g⊙g`, `θ −= η·g / (√G + ε)`.
    pub fn apply(&mut self, theta: &mut [T], grad: &[T], hyper: &AdagradHyper<T>) -> Result<()> {
        hyper.validate()?;
        check_step(self.g_sq.len(), theta, grad)?;
        for ((x, acc), &g) in theta.iter_mut().zip(self.g_sq.iter_mut()).zip(grad) {
            *acc = *acc + g * g;
            *x = *x - hyper.eta * g / (acc.sqrt() + hyper.epsilon);
        }
        Ok(())
    }
}

pub fn adagrad_step<T: Scalar>(
    state: &AdagradState<T>,
    theta: &[T],
    grad: &[T],
    hyper: &AdagradHyper<T>,
) -> Result<(AdagradState<T>, Params<T>)> {
    let mut next = state.clone();
    let mut theta = Params::from(theta);
    next.apply(&mut theta, grad, hyper)?;
    Ok((next, theta))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub m: Params<T>,
    pub v: Params<T>,
    pub t: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(dim: usize) -> Result<Self> {
        nonzero(dim)?;
        Ok(AdamState {
            m: Params::zeros(dim),
            v: Params::zeros(dim),
            t: 0,
        })
    }

    pub fn apply(&mut self, theta: &mut [T], grad: &[T], hyper: &AdamHyper<T>) -> Result<()> {
        hyper.validate()?;
        check_step(self.m.len(), theta, grad)?;
        let t = self.t + 1;
        let (m_scale, v_scale) = if hyper.bias_correction {
            let t = i32::try_from(t).unwrap_or(i32::MAX);
            (
                T::one() / (T::one() - hyper.beta1.powi(t)),
                T::one() / (T::one() - hyper.beta2.powi(t)),
            )
        } else {
            (T::one(), T::one())
        };
        let one = T::one();
        for i in 0..grad.len() {
            let g = grad[i];
            let m = hyper.beta1 * self.m[i] + (one - hyper.beta1) * g;
            let v = hyper.beta2 * self.v[i] + (one - hyper.beta2) * g * g;
            self.m[i] = m;
            self.v[i] = v;
            let (m_hat, v_hat) = if hyper.bias_correction {
                (m * m_scale, v * v_scale)
            } else {
                (m, v)
            };
            theta[i] = theta[i] - hyper.eta * m_hat / (v_hat.sqrt() + hyper.epsilon);
        }
        self.t = t;
        Ok(())
    }
}

pub fn adam_step<T: Scalar>(
    state: &AdamState<T>,
    theta: &[T],
    grad: &[T],
    hyper: &AdamHyper<T>,
) -> Result<(AdamState<T>, Params<T>)> {
    let mut next = state.clone();
    let mut theta = Params::from(theta);
    next.apply(&mut theta, grad, hyper)?;
    Ok((next, theta))
}

fn nonzero(dim: usize) -> Result<()> {
    if dim == 0 {
        Err(Error::InvalidDimension(0))
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn sgd_examples() {
        let h = SgdHyper { eta: 0.1 };
        assert_eq!(sgd_step(&[1.0], &[0.0], &h).unwrap().as_slice(), &[1.0]);
        assert_eq!(sgd_step(&[1.0], &[2.0], &h).unwrap().as_slice(), &[0.8]);
        let h = SgdHyper { eta: 0.5 };
        assert_eq!(
            sgd_step(&[0.0, 0.0], &[1.0, -1.0], &h).unwrap().as_slice(),
            &[-0.5, 0.5]
        );
    }

    #[test]
    fn sgd_errors() {
        let h = SgdHyper { eta: 0.1 };
        assert!(matches!(
            sgd_step(&[1.0, 2.0], &[1.0], &h),
            Err(Error::DimensionMismatch { .. })
        ));
        assert_eq!(
            sgd_step(&[1.0], &[f64::NAN], &h),
            Err(Error::NonFinite { index: 0 })
        );
        assert!(sgd_step(&[1.0], &[1.0], &SgdHyper { eta: -1.0 }).is_err());
    }

    #[test]
    fn momentum_two_steps() {
        let h = MomentumHyper::with_eta(0.1);
        let s = MomentumState::new(1).unwrap();
        let (s, theta) = momentum_step(&s, &[0.0], &[0.0], &h).unwrap();
        assert_eq!((s.v_prev[0], theta[0]), (0.0, 0.0));

        let (s, theta) = momentum_step(&s, &[0.0], &[1.0], &h).unwrap();
        assert!(rel_close(s.v_prev[0], 0.1, 1e-12));
        assert!(rel_close(theta[0], -0.1, 1e-12));
        let (s, theta) = momentum_step(&s, &theta, &[1.0], &h).unwrap();
        assert!(rel_close(s.v_prev[0], 0.19, 1e-12));
        assert!(rel_close(theta[0], -0.29, 1e-12));
    }

    #[test]
    fn adagrad_examples() {
        let h = AdagradHyper::with_eta(0.1);
        let s = AdagradState::new(1).unwrap();
        let (_, theta) = adagrad_step(&s, &[0.5], &[0.0], &h).unwrap();
        assert_eq!(theta[0], 0.5);

        let (s1, theta1) = adagrad_step(&s, &[0.0], &[3.0], &h).unwrap();
        assert_eq!(s1.g_sq[0], 9.0);
        assert!(rel_close(theta1[0], -0.3 / (3.0 + 1e-8), 1e-12));

        let (_, theta2) = adagrad_step(&s1, &theta1, &[3.0], &h).unwrap();
        assert!((theta2[0] - theta1[0]).abs() < theta1[0].abs());
    }

    #[test]
    fn adam_examples() {
        let h = AdamHyper::with_eta(0.001);
        let s = AdamState::new(1).unwrap();
        let (_, theta) = adam_step(&s, &[0.25], &[0.0], &h).unwrap();
        assert_eq!(theta[0], 0.25);

        let (s1, theta) = adam_step(&s, &[0.0], &[1.0], &h).unwrap();
        assert!(rel_close(s1.m[0], 0.1, 1e-12));
        assert!(rel_close(s1.v[0], 0.001, 1e-12));
        assert!(rel_close(theta[0], -0.0001 / (0.001f64.sqrt() + 1e-8), 1e-12));
        assert!((theta[0] + 0.0031622).abs() < 1e-7);
        assert_eq!(s1.t, 1);

        let (_, theta) = adam_step(&s, &[0.0], &[1.0], &h.corrected()).unwrap();
        assert!(rel_close(theta[0], -0.001 / (1.0 + 1e-8), 1e-12));
    }

    #[test]
    fn hyper_defaults() {
        assert_eq!(MomentumHyper::<f64>::with_eta(0.1).p, 0.9);
        let a = AdamHyper::<f64>::with_eta(0.1);
        assert_eq!((a.beta1, a.beta2, a.epsilon), (0.9, 0.999, 1e-8));
        assert!(!a.bias_correction);
        assert!(AdamHyper { beta1: 1.0, ..a }.validate().is_err());
        assert!(MomentumHyper { eta: 0.1, p: 1.0 }.validate().is_err());
        assert!(AdagradHyper { eta: 0.1, epsilon: 0.0 }.validate().is_err());
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(MomentumState::<f64>::new(0).is_err());
        assert!(AdagradState::<f64>::new(0).is_err());
        assert!(AdamState::<f64>::new(0).is_err());
    }
}
