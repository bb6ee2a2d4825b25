use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKind {
    /// `init / ln(e + m)`
    InverseLog,
    /// `init * exp(-m / (1/(1-gamma) - m))`, zero once `m` reaches the count bound.
    FastDecay,
    Zero,
}

/// A decaying temperature or entropy-weight schedule evaluated at an
/// effective parent visit count `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSpec {
    pub kind: ScheduleKind,
    pub init: f64,
    pub gamma: f64,
}

impl ScheduleSpec {
    pub fn inverse_log(init: f64) -> Self {
        Self {
            kind: ScheduleKind::InverseLog,
            init,
            gamma: 0.0,
        }
    }

    pub fn fast_decay(init: f64, gamma: f64) -> Self {
        Self {
            kind: ScheduleKind::FastDecay,
            init,
            gamma,
        }
    }

    pub fn zero() -> Self {
        Self {
            kind: ScheduleKind::Zero,
            init: 0.0,
            gamma: 0.0,
        }
    }

    pub fn eval(&self, m: f64) -> f64 {
        match self.kind {
            ScheduleKind::InverseLog => self.init / (std::f64::consts::E + m).ln(),
            ScheduleKind::FastDecay => {
                let bound = 1.0 / (1.0 - self.gamma);
                if m >= bound {
                    0.0
                } else {
                    self.init * (-m / (bound - m)).exp()
                }
            }
            ScheduleKind::Zero => 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_log_at_zero_is_init() {
        assert!((ScheduleSpec::inverse_log(2.0).eval(0.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn fast_decay_values() {
        let s = ScheduleSpec::fast_decay(1.0, 0.5);
        assert_eq!(s.eval(0.0), 1.0);
        assert!((s.eval(1.0) - (-1.0f64).exp()).abs() < 1e-12);
        assert_eq!(s.eval(2.0), 0.0);
    }

    #[test]
    fn zero_is_zero() {
        assert_eq!(ScheduleSpec::zero().eval(123.0), 0.0);
        assert_eq!(ScheduleSpec::inverse_log(0.0).eval(7.0), 0.0);
    }
}
