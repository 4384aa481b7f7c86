use serde::{Deserialize, Serialize};

/// Learning rate as a function of the zero-based epoch index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LrSchedule {
    Constant { eta0: f64 },
    /// `eta0 · factor^⌊e / every_n_epochs⌋`
    StepDecay { eta0: f64, factor: f64, every_n_epochs: usize },
    /// `eta0 / (1 + k·e)`
    InverseDecay { eta0: f64, k: f64 },
}

impl Default for LrSchedule {
    fn default() -> Self {
        LrSchedule::StepDecay {
            eta0: 0.01,
            factor: 0.5,
            every_n_epochs: 2,
        }
    }
}

impl LrSchedule {
    pub fn eta(&self, epoch: usize) -> f64 {
        match *self {
            LrSchedule::Constant { eta0 } => eta0,
            LrSchedule::StepDecay { eta0, factor, every_n_epochs } => {
                eta0 * factor.powi((epoch / every_n_epochs) as i32)
            }
            LrSchedule::InverseDecay { eta0, k } => eta0 / (1.0 + k * epoch as f64),
        }
    }

    /// Checks that every epoch gets a positive, finite rate. Returns the
    /// offending field name on failure.
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        let eta0 = match *self {
            LrSchedule::Constant { eta0 } => eta0,
            LrSchedule::StepDecay { eta0, factor, every_n_epochs } => {
                if !(factor > 0.0 && factor.is_finite()) {
                    return Err(("factor", format!("factor must be positive, got {factor}")));
                }
                if every_n_epochs == 0 {
                    return Err(("every_n_epochs", "every_n_epochs must be at least 1".into()));
                }
                eta0
            }
            LrSchedule::InverseDecay { eta0, k } => {
                if !(k >= 0.0 && k.is_finite()) {
                    return Err(("k", format!("k must be nonnegative, got {k}")));
                }
                eta0
            }
        };
        if !(eta0 > 0.0 && eta0.is_finite()) {
            return Err(("eta0", format!("eta0 must be positive, got {eta0}")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formulas() {
        let c = LrSchedule::Constant { eta0: 0.3 };
        assert!((0..10).all(|e| c.eta(e) == 0.3));
        let s = LrSchedule::default();
        let etas: Vec<f64> = (0..5).map(|e| s.eta(e)).collect();
        assert_eq!(etas, [0.01, 0.01, 0.005, 0.005, 0.0025]);
        let i = LrSchedule::InverseDecay { eta0: 1.0, k: 0.5 };
        assert_eq!(i.eta(0), 1.0);
        assert_eq!(i.eta(2), 0.5);
    }

    #[test]
    fn validation() {
        assert!(LrSchedule::Constant { eta0: 0.0 }.validate().is_err());
        assert!(LrSchedule::StepDecay { eta0: 0.1, factor: 0.5, every_n_epochs: 0 }.validate().is_err());
        assert!(LrSchedule::InverseDecay { eta0: 0.1, k: -1.0 }.validate().is_err());
        assert!(LrSchedule::default().validate().is_ok());
    }
}
