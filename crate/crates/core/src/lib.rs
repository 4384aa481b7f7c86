//! Particle optimized gradient descent (POGD) and the optimizers it is
//! compared against, plus a reference particle swarm and analytic test
//! functions.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! fix the 64-bit instantiation used by the training harness.

pub mod baselines;
pub mod draw;
pub mod error;
pub mod gradcheck;
pub mod optimizer;
pub mod params;
pub mod pogd;
pub mod pso;
pub mod scalar;
pub mod testfns;

pub use baselines::{
    adagrad_step, adam_step, momentum_step, sgd_apply, sgd_step, AdagradHyper, AdagradState,
    AdamHyper, AdamState, MomentumHyper, MomentumState, SgdHyper,
};
pub use draw::{FixedDraws, UnitSource};
pub use error::{Error, Result};
pub use optimizer::{Optimizer, OptimizerKind};
pub use params::Params;
pub use pogd::{
    pogd_init, pogd_step, pogd_step_moment_ratio, PogdHyper, PogdState, PogdUpdate, RandMode,
};
pub use pso::{pso_init, pso_step, Particle, PsoHyper, Swarm};
pub use scalar::Scalar;
pub use testfns::{double_well_minima, Objective, TestFunction};

pub type ParamVector = Params<f64>;
pub type PogdState64 = PogdState<f64>;
pub type PogdHyper64 = PogdHyper<f64>;
pub type Swarm64 = Swarm<f64>;
pub type Optimizer64 = Optimizer<f64>;

pub type ParamVector32 = Params<f32>;
pub type PogdState32 = PogdState<f32>;
pub type PogdHyper32 = PogdHyper<f32>;
