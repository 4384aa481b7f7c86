//! Particle optimized gradient descent.
//!
//! A single "particle" whose swarm-best position is replaced by the
//! AdaGrad-normalized gradient and whose own best is the previous gradient.
//! One step, in order:
//!
//! ```text
//! a_t  = a_{t-1} + g ⊙ g
//! gb_t = g / (√a_t + ε)
//! v_t  = ω·m_{t-1} + c1·r1·(gb_{t-1} − g) + c2·r2·(pb_{t-1} − g)
//! m_t  = −v_t
//! pb_t = g
//! θ_t  = θ_{t-1} − η·(g + v_t)
//! ```
//!
//! [`PogdUpdate::MomentRatio`] swaps the last line for
//! `θ_t = θ_{t-1} − η·m_t / (√|v_t| + ε)`.

use crate::draw::UnitSource;
use crate::error::{Error, Result};
use crate::params::{check_step, Params};
use crate::scalar::Scalar;

/// How the two PSO coefficients `r1`, `r2` are drawn each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RandMode {
    /// Two scalar draws per step (`r1` then `r2`) shared by every element.
    #[default]
    PerStepScalar,
    /// A fresh `(r1, r2)` pair per element, drawn in element order.
    PerElement,
}

/// Which parameter update closes the step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PogdUpdate {
    /// `θ − η·(g + v)`.
    #[default]
    GradientPlusVelocity,
    /// `θ − η·m / (√|v| + ε)`; kept for comparison runs only.
    MomentRatio,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PogdHyper<T> {
    /// Learning rate η.
    pub eta: T,
    /// Inertia ω on the previous (negated) velocity.
    pub omega: T,
    /// Trust in the global best.
    pub c1: T,
    /// Trust in the particle best.
    pub c2: T,
    pub epsilon: T,
    pub rand_mode: RandMode,
    pub update: PogdUpdate,
}

impl<T: Scalar> Default for PogdHyper<T> {
    fn default() -> Self {
        PogdHyper {
            eta: T::lit(0.01),
            omega: T::lit(0.9),
            c1: T::lit(2.0),
            c2: T::lit(1.0),
            epsilon: T::lit(1e-8),
            rand_mode: RandMode::PerStepScalar,
            update: PogdUpdate::GradientPlusVelocity,
        }
    }
}

impl<T: Scalar> PogdHyper<T> {
    /// Default coefficients with the given learning rate.
    pub fn with_eta(eta: T) -> Self {
        PogdHyper {
            eta,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name, value: T, reason| {
            Err(Error::InvalidHyper {
                name,
                value: value.as_f64(),
                reason,
            })
        };
        if !(self.eta > T::zero()) {
            return bad("eta", self.eta, "must be positive");
        }
        if !(self.epsilon > T::zero()) {
            return bad("epsilon", self.epsilon, "must be positive");
        }
        if !(self.omega >= T::zero() && self.omega <= T::one()) {
            return bad("omega", self.omega, "must lie in [0, 1]");
        }
        if !(self.c1 >= T::zero()) {
            return bad("c1", self.c1, "must be nonnegative");
        }
        if !(self.c2 >= T::zero()) {
            return bad("c2", self.c2, "must be nonnegative");
        }
        Ok(())
    }
}

/// Per-parameter optimizer memory.
#[derive(Debug, Clone, PartialEq)]
pub struct PogdState<T> {
    /// Running sum of squared gradients.
    pub a: Params<T>,
    /// Velocity.
    pub v: Params<T>,
    /// Negated velocity carried into the next step.
    pub m: Params<T>,
    /// Global best: the AdaGrad-normalized gradient of the last step.
    pub gb: Params<T>,
    /// Particle best: the gradient of the last step.
    pub pb: Params<T>,
    /// Number of steps taken.
    pub t: u64,
}

impl<T: Scalar> PogdState<T> {
    /// Zero-initialized state for `dim` parameters.
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(dim));
        }
        Ok(PogdState {
            a: Params::zeros(dim),
            v: Params::zeros(dim),
            m: Params::zeros(dim),
            gb: Params::zeros(dim),
            pb: Params::zeros(dim),
            t: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    /// Advances the state and updates `theta` in place.
    ///
    /// Inputs are validated before anything is touched, so on error both the
    /// state and `theta` are unchanged.
    pub fn apply<R: UnitSource + ?Sized>(
        &mut self,
        theta: &mut [T],
        grad: &[T],
        hyper: &PogdHyper<T>,
        rng: &mut R,
    ) -> Result<()> {
        hyper.validate()?;
        check_step(self.dim(), theta, grad)?;

        let (r1, r2) = match hyper.rand_mode {
            RandMode::PerStepScalar => {
                let r1: T = rng.unit();
                let r2: T = rng.unit();
                (r1, r2)
            }
            // drawn per element below
            RandMode::PerElement => (T::zero(), T::zero()),
        };

        for i in 0..grad.len() {
            let g = grad[i];
            let a = self.a[i] + g * g;
            let gb = g / (a.sqrt() + hyper.epsilon);

            let (r1, r2) = match hyper.rand_mode {
                RandMode::PerStepScalar => (r1, r2),
                RandMode::PerElement => {
                    let r1: T = rng.unit();
                    let r2: T = rng.unit();
                    (r1, r2)
                }
            };
            // gb and pb still hold the previous step's values here.
            let v = hyper.omega * self.m[i]
                + hyper.c1 * r1 * (self.gb[i] - g)
                + hyper.c2 * r2 * (self.pb[i] - g);
            let m = -v;

            self.a[i] = a;
            self.gb[i] = gb;
            self.v[i] = v;
            self.m[i] = m;
            self.pb[i] = g;

            theta[i] = match hyper.update {
                PogdUpdate::GradientPlusVelocity => theta[i] - hyper.eta * (g + v),
                PogdUpdate::MomentRatio => {
                    theta[i] - hyper.eta * m / (v.abs().sqrt() + hyper.epsilon)
                }
            };
        }
        self.t += 1;
        Ok(())
    }
}

/// Zero-initialized state; `dim = 0` is rejected.
pub fn pogd_init<T: Scalar>(dim: usize) -> Result<PogdState<T>> {
    PogdState::new(dim)
}

/// One step with value semantics: returns the new state and parameters.
///
/// The closing update is whatever `hyper.update` selects.
pub fn pogd_step<T: Scalar, R: UnitSource + ?Sized>(
    state: &PogdState<T>,
    theta: &[T],
    grad: &[T],
    hyper: &PogdHyper<T>,
    rng: &mut R,
) -> Result<(PogdState<T>, Params<T>)> {
    let mut next = state.clone();
    let mut theta = Params::from(theta);
    next.apply(&mut theta, grad, hyper, rng)?;
    Ok((next, theta))
}

/// [`pogd_step`] forced onto the [`PogdUpdate::MomentRatio`] update.
pub fn pogd_step_moment_ratio<T: Scalar, R: UnitSource + ?Sized>(
    state: &PogdState<T>,
    theta: &[T],
    grad: &[T],
    hyper: &PogdHyper<T>,
    rng: &mut R,
) -> Result<(PogdState<T>, Params<T>)> {
    let hyper = PogdHyper {
        update: PogdUpdate::MomentRatio,
        ..*hyper
    };
    pogd_step(state, theta, grad, &hyper, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::draw::FixedDraws;

    fn forced() -> FixedDraws {
        FixedDraws::constant(0.5)
    }

    #[test]
    fn init_is_all_zero() {
        for dim in [1usize, 3] {
            let s = pogd_init::<f64>(dim).unwrap();
            for arr in [&s.a, &s.v, &s.m, &s.gb, &s.pb] {
                assert_eq!(arr.as_slice(), vec![0.0; dim].as_slice());
            }
            assert_eq!(s.t, 0);
        }
        assert_eq!(pogd_init::<f64>(0), Err(Error::InvalidDimension(0)));
    }

    #[test]
    fn zero_gradient_is_fixed_point() {
        let s = pogd_init::<f64>(1).unwrap();
        let (next, theta) =
            pogd_step(&s, &[0.7], &[0.0], &PogdHyper::default(), &mut forced()).unwrap();
        assert_eq!(theta.as_slice(), &[0.7]);
        assert_eq!(next.a.as_slice(), &[0.0]);
        assert_eq!(next.v[0], 0.0);
        assert_eq!(next.t, 1);
    }

    #[test]
    fn vanishing_pso_terms_give_sgd() {
        let hyper = PogdHyper {
            eta: 0.1,
            omega: 0.0,
            c1: 0.0,
            c2: 0.0,
            ..PogdHyper::default()
        };
        let s = pogd_init::<f64>(1).unwrap();
        let (next, theta) = pogd_step(&s, &[1.0], &[2.0], &hyper, &mut forced()).unwrap();
        assert_eq!(next.v[0], 0.0);
        assert_eq!(theta[0], 1.0 - 0.1 * 2.0);
    }

    #[test]
    fn first_step_trace() {
        let hyper = PogdHyper::with_eta(0.1);
        let s = pogd_init::<f64>(1).unwrap();
        let (next, theta) = pogd_step(&s, &[0.0], &[1.0], &hyper, &mut forced()).unwrap();
        assert_eq!(next.a[0], 1.0);
        assert_eq!(next.gb[0], 1.0 / (1.0 + 1e-8));
        assert_eq!(next.v[0], -1.5);
        assert_eq!(next.m[0], 1.5);
        assert_eq!(next.pb[0], 1.0);
        assert!((theta[0] - 0.05).abs() <= 1e-12 * 0.05);
    }

    #[test]
    fn first_step_can_ascend() {
        // gb_0 = pb_0 = 0, so v_1 = -(c1 r1 + c2 r2) g; with r1 = r2 = 1 that is -3g
        // and the update moves against the descent direction.
        let hyper = PogdHyper::with_eta(0.1);
        let s = pogd_init::<f64>(1).unwrap();
        let (_, theta) =
            pogd_step(&s, &[0.0], &[1.0], &hyper, &mut FixedDraws::constant(1.0)).unwrap();
        assert!(theta[0] > 0.0);
        assert!((theta[0] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn moment_ratio_trace() {
        let hyper = PogdHyper::with_eta(0.1);
        let s = pogd_init::<f64>(1).unwrap();
        let (next, theta) =
            pogd_step_moment_ratio(&s, &[0.0], &[1.0], &hyper, &mut forced()).unwrap();
        assert_eq!(next.m[0], 1.5);
        let expected = -0.1 * 1.5 / (1.5f64.sqrt() + 1e-8);
        assert!((theta[0] - expected).abs() <= 1e-12 * expected.abs());
        assert!((theta[0] + 0.12247).abs() < 1e-5);

        let (_, theta) =
            pogd_step_moment_ratio(&s, &[0.4], &[0.0], &hyper, &mut forced()).unwrap();
        assert_eq!(theta[0], 0.4);
    }

    #[test]
    fn per_element_draws_consume_two_per_entry() {
        let hyper = PogdHyper {
            rand_mode: RandMode::PerElement,
            ..PogdHyper::default()
        };
        let s = pogd_init::<f64>(4).unwrap();
        let mut draws = FixedDraws::new(vec![0.1, 0.2, 0.3]);
        pogd_step(&s, &[0.0; 4], &[1.0; 4], &hyper, &mut draws).unwrap();
        assert_eq!(draws.consumed(), 8);

        let mut draws = FixedDraws::new(vec![0.1, 0.2, 0.3]);
        pogd_step(&s, &[0.0; 4], &[1.0; 4], &PogdHyper::default(), &mut draws).unwrap();
        assert_eq!(draws.consumed(), 2);
    }

    #[test]
    fn rejects_bad_inputs_without_mutation() {
        let mut s = pogd_init::<f64>(2).unwrap();
        let mut theta = vec![1.0, 2.0];
        let hyper = PogdHyper::default();
        let err = s
            .apply(&mut theta, &[1.0], &hyper, &mut forced())
            .unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 2, found: 1 });

        let err = s
            .apply(&mut theta, &[1.0, f64::NAN], &hyper, &mut forced())
            .unwrap_err();
        assert_eq!(err, Error::NonFinite { index: 1 });
        let err = s
            .apply(&mut theta, &[f64::INFINITY, 0.0], &hyper, &mut forced())
            .unwrap_err();
        assert_eq!(err, Error::NonFinite { index: 0 });

        assert_eq!(theta, vec![1.0, 2.0]);
        assert_eq!(s, pogd_init(2).unwrap());
    }

    #[test]
    fn hyper_validation() {
        let ok = PogdHyper::<f64>::default();
        assert!(ok.validate().is_ok());
        assert_eq!(ok.omega, 0.9);
        assert_eq!(ok.c1, 2.0);
        assert_eq!(ok.c2, 1.0);
        assert_eq!(ok.epsilon, 1e-8);
        for bad in [
            PogdHyper { eta: 0.0, ..ok },
            PogdHyper { epsilon: 0.0, ..ok },
            PogdHyper { omega: 1.5, ..ok },
            PogdHyper { omega: -0.1, ..ok },
            PogdHyper { c1: -1.0, ..ok },
            PogdHyper { eta: f64::NAN, ..ok },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn works_in_single_precision() {
        let s = pogd_init::<f32>(1).unwrap();
        let (next, theta) =
            pogd_step(&s, &[0.0f32], &[1.0f32], &PogdHyper::with_eta(0.1), &mut forced()).unwrap();
        assert_eq!(next.m[0], 1.5f32);
        assert!((theta[0] - 0.05).abs() < 1e-6);
    }
}
