//! Analytic benchmark objectives with exact gradients.

use std::f64::consts::PI;

use crate::error::Result;
use crate::params::{check_dim, Params};
use crate::scalar::Scalar;

/// Anything with a value and a gradient at a point.
pub trait Objective<T: Scalar> {
    fn dim(&self) -> usize;
    fn value(&self, x: &[T]) -> Result<T>;
    fn gradient(&self, x: &[T]) -> Result<Params<T>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TestFunction {
    /// `Σ xᵢ²`
    Sphere { dim: usize },
    /// `Σ 100(xᵢ₊₁ − xᵢ²)² + (1 − xᵢ)²`
    Rosenbrock { dim: usize },
    /// `10d + Σ xᵢ² − 10 cos(2πxᵢ)`
    Rastrigin { dim: usize },
    /// `x⁴ − 3x² + x`: a deep minimum near −1.30 and a shallow one near 1.13.
    DoubleWell,
}

impl TestFunction {
    pub fn name(&self) -> &'static str {
        match self {
            TestFunction::Sphere { .. } => "sphere",
            TestFunction::Rosenbrock { .. } => "rosenbrock",
            TestFunction::Rastrigin { .. } => "rastrigin",
            TestFunction::DoubleWell => "double-well",
        }
    }

    /// Looks a function up by name; `dim` is ignored for the double well.
    pub fn from_name(name: &str, dim: usize) -> Option<Self> {
        match name {
            "sphere" => Some(TestFunction::Sphere { dim }),
            "rosenbrock" => Some(TestFunction::Rosenbrock { dim }),
            "rastrigin" => Some(TestFunction::Rastrigin { dim }),
            "double-well" => Some(TestFunction::DoubleWell),
            _ => None,
        }
    }

    /// Per-dimension search box.
    pub fn domain<T: Scalar>(&self) -> Vec<(T, T)> {
        let (lo, hi) = match self {
            TestFunction::Sphere { .. } | TestFunction::Rastrigin { .. } => (-5.12, 5.12),
            TestFunction::Rosenbrock { .. } => (-2.048, 2.048),
            TestFunction::DoubleWell => (-3.0, 3.0),
        };
        vec![(T::lit(lo), T::lit(hi)); self.dimension()]
    }

    fn dimension(&self) -> usize {
        match *self {
            TestFunction::Sphere { dim }
            | TestFunction::Rosenbrock { dim }
            | TestFunction::Rastrigin { dim } => dim,
            TestFunction::DoubleWell => 1,
        }
    }

    pub fn known_min_x<T: Scalar>(&self) -> Params<T> {
        match *self {
            TestFunction::Sphere { dim } | TestFunction::Rastrigin { dim } => Params::zeros(dim),
            TestFunction::Rosenbrock { dim } => vec![T::one(); dim].into(),
            TestFunction::DoubleWell => vec![double_well_minima::<T>().0].into(),
        }
    }

    pub fn known_min_f<T: Scalar>(&self) -> T {
        match self {
            TestFunction::DoubleWell => {
                let x = double_well_minima::<T>().0;
                double_well(x)
            }
            _ => T::zero(),
        }
    }
}

/// The double well's `(deep, shallow)` minimizers, refined by Newton's method
/// on `f'(x) = 4x³ − 6x + 1`.
pub fn double_well_minima<T: Scalar>() -> (T, T) {
    let newton = |mut x: T| {
        for _ in 0..60 {
            let d1 = T::lit(4.0) * x.powi(3) - T::lit(6.0) * x + T::one();
            let d2 = T::lit(12.0) * x * x - T::lit(6.0);
            let next = x - d1 / d2;
            if next == x {
                break;
            }
            x = next;
        }
        x
    };
    (newton(T::lit(-1.3)), newton(T::lit(1.13)))
}

fn double_well<T: Scalar>(x: T) -> T {
    x.powi(4) - T::lit(3.0) * x * x + x
}

impl<T: Scalar> Objective<T> for TestFunction {
    fn dim(&self) -> usize {
        self.dimension()
    }

    fn value(&self, x: &[T]) -> Result<T> {
        check_dim(self.dimension(), x.len())?;
        let v = match self {
            TestFunction::Sphere { .. } => x.iter().map(|&xi| xi * xi).sum(),
            TestFunction::Rosenbrock { .. } => x
                .windows(2)
                .map(|w| {
                    let a = w[1] - w[0] * w[0];
                    let b = T::one() - w[0];
                    T::lit(100.0) * a * a + b * b
                })
                .sum(),
            TestFunction::Rastrigin { .. } => {
                let ten = T::lit(10.0);
                let tau = T::lit(2.0 * PI);
                ten * T::lit(x.len() as f64)
                    + x.iter()
                        .map(|&xi| xi * xi - ten * (tau * xi).cos())
                        .sum::<T>()
            }
            TestFunction::DoubleWell => double_well(x[0]),
        };
        Ok(v)
    }

    fn gradient(&self, x: &[T]) -> Result<Params<T>> {
        check_dim(self.dimension(), x.len())?;
        let two = T::lit(2.0);
        let g: Params<T> = match self {
            TestFunction::Sphere { .. } => x.iter().map(|&xi| two * xi).collect(),
            TestFunction::Rosenbrock { .. } => {
                let n = x.len();
                let mut g = Params::zeros(n);
                for i in 0..n.saturating_sub(1) {
                    let a = x[i + 1] - x[i] * x[i];
                    g[i] = g[i] - T::lit(400.0) * x[i] * a - two * (T::one() - x[i]);
                    g[i + 1] = g[i + 1] + T::lit(200.0) * a;
                }
                g
            }
            TestFunction::Rastrigin { .. } => {
                let tau = T::lit(2.0 * PI);
                x.iter()
                    .map(|&xi| two * xi + T::lit(10.0) * tau * (tau * xi).sin())
                    .collect()
            }
            TestFunction::DoubleWell => {
                let xi = x[0];
                vec![T::lit(4.0) * xi.powi(3) - T::lit(6.0) * xi + T::one()].into()
            }
        };
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn known_minima() {
        let fns = [
            TestFunction::Sphere { dim: 3 },
            TestFunction::Rosenbrock { dim: 2 },
            TestFunction::Rastrigin { dim: 2 },
            TestFunction::DoubleWell,
        ];
        for f in fns {
            let x = f.known_min_x::<f64>();
            let v = Objective::<f64>::value(&f, &x).unwrap();
            assert!((v - f.known_min_f::<f64>()).abs() < 1e-12, "{}", f.name());
            let g = Objective::<f64>::gradient(&f, &x).unwrap();
            assert!(g.iter().all(|gi| gi.abs() < 1e-8), "{}: {g:?}", f.name());
        }
    }

    #[test]
    fn examples() {
        let sphere = TestFunction::Sphere { dim: 2 };
        assert_eq!(sphere.value(&[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(sphere.gradient(&[1.0, -2.0]).unwrap().as_slice(), &[2.0, -4.0]);
        let rosen = TestFunction::Rosenbrock { dim: 2 };
        assert_eq!(rosen.value(&[1.0, 1.0]).unwrap(), 0.0);
        assert_eq!(rosen.gradient(&[1.0, 1.0]).unwrap().as_slice(), &[0.0, 0.0]);
        assert!((Objective::<f64>::value(&rosen, &[-1.2, 1.0]).unwrap() - 24.2).abs() < 1e-12);
        let rast = TestFunction::Rastrigin { dim: 2 };
        assert_eq!(rast.value(&[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn double_well_shape() {
        let (deep, shallow) = double_well_minima::<f64>();
        assert!((deep + 1.3008).abs() < 1e-3);
        assert!((shallow - 1.1309).abs() < 1e-3);
        let f = TestFunction::DoubleWell;
        let fd = f.value(&[deep]).unwrap();
        let fs = f.value(&[shallow]).unwrap();
        assert!(fd < fs);
        assert!(f.gradient(&[shallow]).unwrap()[0].abs() < 1e-12);
    }

    #[test]
    fn dimension_checked() {
        let sphere = TestFunction::Sphere { dim: 2 };
        assert_eq!(
            Objective::<f64>::value(&sphere, &[1.0]),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        );
        assert!(Objective::<f64>::gradient(&TestFunction::DoubleWell, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn names_round_trip() {
        for f in [
            TestFunction::Sphere { dim: 4 },
            TestFunction::Rosenbrock { dim: 4 },
            TestFunction::Rastrigin { dim: 4 },
        ] {
            assert_eq!(TestFunction::from_name(f.name(), 4), Some(f));
        }
        assert_eq!(
            TestFunction::from_name("double-well", 9),
            Some(TestFunction::DoubleWell)
        );
        assert_eq!(TestFunction::from_name("ackley", 2), None);
    }
}
