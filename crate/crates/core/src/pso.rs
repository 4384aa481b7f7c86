//! Reference particle swarm optimizer with inertia weight.
//!
//! Each step, per particle: `v ← w·v + c1·r1·(pbest − x) + c2·r2·(gbest − x)`,
//! `x ← x + v` clamped to the bounds, then the particle and swarm bests are
//! refreshed by fitness comparison. `r1`, `r2` are drawn per dimension by
//! default; [`RandMode::PerStepScalar`] draws one pair per particle instead,
//! which confines each particle's move to a plane and stalls often enough on
//! the 10-D sphere to matter. Velocities are not clamped.

use crate::draw::UnitSource;
use crate::error::{Error, Result};
use crate::params::{check_dim, Params};
use crate::pogd::RandMode;
use crate::scalar::Scalar;
use crate::testfns::Objective;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsoHyper<T> {
    /// Inertia weight.
    pub w: T,
    pub c1: T,
    pub c2: T,
    /// Granularity of `r1`, `r2`; one step here is one particle.
    pub draws: RandMode,
}

impl<T: Scalar> Default for PsoHyper<T> {
    fn default() -> Self {
        PsoHyper {
            w: T::lit(0.7),
            c1: T::lit(2.0),
            c2: T::lit(2.0),
            draws: RandMode::PerElement,
        }
    }
}

impl<T: Scalar> PsoHyper<T> {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("w", self.w), ("c1", self.c1), ("c2", self.c2)] {
            if !(value >= T::zero()) {
                return Err(Error::InvalidHyper {
                    name,
                    value: value.as_f64(),
                    reason: "must be nonnegative",
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle<T> {
    pub x: Params<T>,
    pub v: Params<T>,
    pub pbest_x: Params<T>,
    pub pbest_f: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Swarm<T> {
    pub particles: Vec<Particle<T>>,
    pub gbest_x: Params<T>,
    pub gbest_f: T,
    pub hyper: PsoHyper<T>,
    pub bounds: Vec<(T, T)>,
}

fn evaluate<T: Scalar, O: Objective<T> + ?Sized>(objective: &O, x: &[T]) -> Result<T> {
    let f = objective.value(x)?;
    if f.is_finite() {
        Ok(f)
    } else {
        Err(Error::NonFiniteObjective)
    }
}

fn check_bounds<T: Scalar>(bounds: &[(T, T)]) -> Result<()> {
    if bounds.is_empty() {
        return Err(Error::InvalidDimension(0));
    }
    for (dim, &(lo, hi)) in bounds.iter().enumerate() {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::DegenerateBounds {
                dim,
                lo: lo.as_f64(),
                hi: hi.as_f64(),
            });
        }
    }
    Ok(())
}

impl<T: Scalar> Swarm<T> {
    /// Places particles at the given positions with zero velocity.
    pub fn from_positions<O: Objective<T> + ?Sized>(
        objective: &O,
        positions: Vec<Params<T>>,
        bounds: Vec<(T, T)>,
        hyper: PsoHyper<T>,
    ) -> Result<Self> {
        hyper.validate()?;
        check_bounds(&bounds)?;
        check_dim(objective.dim(), bounds.len())?;
        if positions.is_empty() {
            return Err(Error::EmptySwarm);
        }
        let mut particles = Vec::with_capacity(positions.len());
        for x in positions {
            check_dim(bounds.len(), x.len())?;
            let f = evaluate(objective, &x)?;
            particles.push(Particle {
                v: Params::zeros(x.len()),
                pbest_x: x.clone(),
                pbest_f: f,
                x,
            });
        }
        let best = best_index(&particles);
        Ok(Swarm {
            gbest_x: particles[best].pbest_x.clone(),
            gbest_f: particles[best].pbest_f,
            particles,
            hyper,
            bounds,
        })
    }

    /// One velocity/position update of every particle, in index order.
    pub fn step<O, R>(&mut self, objective: &O, rng: &mut R) -> Result<()>
    where
        O: Objective<T> + ?Sized,
        R: UnitSource + ?Sized,
    {
        let PsoHyper { w, c1, c2, draws } = self.hyper;
        let mut next = self.particles.clone();
        for p in next.iter_mut() {
            let (mut r1, mut r2) = (T::zero(), T::zero());
            if draws == RandMode::PerStepScalar {
                r1 = rng.unit();
                r2 = rng.unit();
            }
            for d in 0..p.x.len() {
                if draws == RandMode::PerElement {
                    r1 = rng.unit();
                    r2 = rng.unit();
                }
                let v = w * p.v[d]
                    + c1 * r1 * (p.pbest_x[d] - p.x[d])
                    + c2 * r2 * (self.gbest_x[d] - p.x[d]);
                let (lo, hi) = self.bounds[d];
                p.v[d] = v;
                p.x[d] = (p.x[d] + v).max(lo).min(hi);
            }
        }
        let mut fitness = Vec::with_capacity(next.len());
        for p in &next {
            fitness.push(evaluate(objective, &p.x)?);
        }
        for (p, f) in next.iter_mut().zip(fitness) {
            if f < p.pbest_f {
                p.pbest_f = f;
                p.pbest_x = p.x.clone();
            }
        }
        let best = best_index(&next);
        if next[best].pbest_f < self.gbest_f {
            self.gbest_f = next[best].pbest_f;
            self.gbest_x = next[best].pbest_x.clone();
        }
        self.particles = next;
        Ok(())
    }
}

fn best_index<T: Scalar>(particles: &[Particle<T>]) -> usize {
    let mut best = 0;
    for (i, p) in particles.iter().enumerate() {
        if p.pbest_f < particles[best].pbest_f {
            best = i;
        }
    }
    best
}

/// Swarm of `n_particles` placed uniformly at random inside `bounds`.
pub fn pso_init<T, O, R>(
    objective: &O,
    dim: usize,
    n_particles: usize,
    bounds: Vec<(T, T)>,
    hyper: PsoHyper<T>,
    rng: &mut R,
) -> Result<Swarm<T>>
where
    T: Scalar,
    O: Objective<T> + ?Sized,
    R: UnitSource + ?Sized,
{
    if n_particles == 0 {
        return Err(Error::EmptySwarm);
    }
    check_bounds(&bounds)?;
    check_dim(dim, bounds.len())?;
    let positions = (0..n_particles)
        .map(|_| {
            bounds
                .iter()
                .map(|&(lo, hi)| lo + (hi - lo) * rng.unit::<T>())
                .collect()
        })
        .collect();
    Swarm::from_positions(objective, positions, bounds, hyper)
}

/// Value-semantics step.
pub fn pso_step<T, O, R>(swarm: &Swarm<T>, objective: &O, rng: &mut R) -> Result<Swarm<T>>
where
    T: Scalar,
    O: Objective<T> + ?Sized,
    R: UnitSource + ?Sized,
{
    let mut next = swarm.clone();
    next.step(objective, rng)?;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::draw::FixedDraws;
    use crate::testfns::TestFunction;

    fn sphere(dim: usize) -> TestFunction {
        TestFunction::Sphere { dim }
    }

    #[test]
    fn single_particle_is_global_best() {
        let f = sphere(2);
        let x0: Params<f64> = vec![1.0, -3.0].into();
        let s = Swarm::from_positions(&f, vec![x0.clone()], f.domain(), PsoHyper::default())
            .unwrap();
        assert_eq!(s.gbest_x, x0);
        assert_eq!(s.gbest_f, 10.0);
    }

    #[test]
    fn init_errors() {
        let f = sphere(2);
        let mut rng = FixedDraws::constant(0.3);
        assert_eq!(
            pso_init(&f, 2, 0, f.domain::<f64>(), PsoHyper::default(), &mut rng),
            Err(Error::EmptySwarm)
        );
        let bad = vec![(0.0, 1.0), (2.0, 2.0)];
        assert!(matches!(
            pso_init(&f, 2, 3, bad, PsoHyper::default(), &mut rng),
            Err(Error::DegenerateBounds { dim: 1, .. })
        ));
        assert!(pso_init(&f, 3, 3, f.domain::<f64>(), PsoHyper::default(), &mut rng).is_err());
    }

    #[test]
    fn init_inside_bounds_and_nonnegative() {
        let f = sphere(3);
        let mut rng = FixedDraws::new(vec![0.0, 0.25, 0.9, 1.0, 0.5]);
        let s = pso_init(&f, 3, 7, f.domain::<f64>(), PsoHyper::default(), &mut rng).unwrap();
        assert!(s.gbest_f >= 0.0);
        for p in &s.particles {
            assert!(p.x.iter().all(|x| (-5.12..=5.12).contains(x)));
            assert_eq!(p.pbest_x, p.x);
        }
    }

    #[test]
    fn resting_particle_stays() {
        let f = sphere(2);
        let x0: Params<f64> = vec![0.5, 0.5].into();
        let mut s =
            Swarm::from_positions(&f, vec![x0.clone()], f.domain(), PsoHyper::default()).unwrap();
        s.step(&f, &mut FixedDraws::constant(0.7)).unwrap();
        assert_eq!(s.particles[0].x, x0);
        assert_eq!(s.particles[0].v.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn zero_coefficients_freeze() {
        let f = sphere(2);
        let frozen = PsoHyper { w: 0.0, c1: 0.0, c2: 0.0, ..PsoHyper::default() };
        let mut rng = FixedDraws::new(vec![0.1, 0.6, 0.3, 0.8]);
        let s0 = pso_init(&f, 2, 5, f.domain::<f64>(), frozen, &mut rng).unwrap();
        let mut s = s0.clone();
        for _ in 0..10 {
            s = pso_step(&s, &f, &mut rng).unwrap();
        }
        assert_eq!(s, s0);
    }

    #[test]
    fn non_finite_objective() {
        struct Nan;
        impl Objective<f64> for Nan {
            fn dim(&self) -> usize {
                1
            }
            fn value(&self, _: &[f64]) -> Result<f64> {
                Ok(f64::NAN)
            }
            fn gradient(&self, _: &[f64]) -> Result<Params<f64>> {
                Ok(vec![0.0].into())
            }
        }
        let mut rng = FixedDraws::constant(0.5);
        assert_eq!(
            pso_init(&Nan, 1, 2, vec![(-1.0, 1.0)], PsoHyper::default(), &mut rng),
            Err(Error::NonFiniteObjective)
        );
    }
}
