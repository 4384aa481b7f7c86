//! Sources of uniform draws on `[0, 1]` consumed by the stochastic optimizers.

use rand::Rng;

use crate::scalar::Scalar;

/// Anything that can hand out uniform draws in `[0, 1]`.
///
/// Every [`rand::Rng`] qualifies; [`FixedDraws`] replays a scripted sequence so
/// hand-derived traces can force specific `r1`, `r2` values.
pub trait UnitSource {
    fn unit<T: Scalar>(&mut self) -> T;
}

impl<R: Rng + ?Sized> UnitSource for R {
    #[inline]
    fn unit<T: Scalar>(&mut self) -> T {
        T::lit(self.random::<f64>())
    }
}

/// Replays a fixed list of draws, cycling when exhausted.
#[derive(Debug, Clone)]
pub struct FixedDraws {
    values: Vec<f64>,
    cursor: usize,
}

impl FixedDraws {
    pub fn new(values: impl Into<Vec<f64>>) -> Self {
        let values = values.into();
        assert!(!values.is_empty(), "FixedDraws needs at least one value");
        assert!(
            values.iter().all(|v| (0.0..=1.0).contains(v)),
            "draws must lie in [0, 1]"
        );
        FixedDraws { values, cursor: 0 }
    }

    pub fn constant(value: f64) -> Self {
        Self::new(vec![value])
    }

    /// Number of draws handed out so far.
    pub fn consumed(&self) -> usize {
        self.cursor
    }
}

impl UnitSource for FixedDraws {
    fn unit<T: Scalar>(&mut self) -> T {
        let v = self.values[self.cursor % self.values.len()];
        self.cursor += 1;
        T::lit(v)
    }
}
