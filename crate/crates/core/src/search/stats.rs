//! Discounted node statistics with lazy decay.
//!
//! Instead of re-weighting every node each iteration, a node keeps its masses
//! as of the last write together with that iteration's timestamp. Reads and
//! writes first multiply by `gamma^(now - last)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct NodeStats {
    /// Visit mass as of `last_update`.
    pub stored_count: f64,
    /// Reward mass as of `last_update`.
    pub stored_reward_sum: f64,
    pub last_update: u64,
    /// Backed-up policy entropy of the subtree below this node.
    pub entropy: f64,
}

/// Effective (decayed) statistics at a read time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decayed {
    pub count: f64,
    pub value: f64,
}

fn decay_factor(gamma: f64, elapsed: u64) -> f64 {
    if elapsed == 0 || gamma == 1.0 {
        1.0
    } else if elapsed > i32::MAX as u64 {
        0.0
    } else {
        gamma.powi(elapsed as i32)
    }
}

impl NodeStats {
    pub fn decayed_at(&self, gamma: f64, now: u64) -> Result<Decayed> {
        if now < self.last_update {
            return Err(Error::NonMonotoneClock {
                now,
                last: self.last_update,
            });
        }
        let count = decay_factor(gamma, now - self.last_update) * self.stored_count;
        Ok(Decayed {
            count,
            value: self.value(),
        })
    }

    /// Value estimate. The decay factor cancels in the ratio.
    pub fn value(&self) -> f64 {
        if self.stored_count > 0.0 {
            self.stored_reward_sum / self.stored_count
        } else {
            0.0
        }
    }

    pub fn record_visit(&mut self, reward: f64, gamma: f64, now: u64) -> Result<()> {
        if !(0.0..=1.0).contains(&reward) {
            return Err(Error::RewardOutOfRange(reward));
        }
        if now < self.last_update {
            return Err(Error::NonMonotoneClock {
                now,
                last: self.last_update,
            });
        }
        let f = decay_factor(gamma, now - self.last_update);
        self.stored_count = self.stored_count * f + 1.0;
        self.stored_reward_sum = self.stored_reward_sum * f + reward;
        self.last_update = now;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_elapsed_has_no_decay() {
        let mut s = NodeStats::default();
        s.record_visit(1.0, 0.9, 5).unwrap();
        assert_eq!(s.decayed_at(0.9, 5).unwrap().count, 1.0);
    }

    #[test]
    fn two_steps_at_half() {
        let mut s = NodeStats::default();
        s.record_visit(1.0, 0.5, 0).unwrap();
        assert!((s.decayed_at(0.5, 2).unwrap().count - 0.25).abs() < 1e-15);
    }

    #[test]
    fn visits_at_one_and_three() {
        let mut s = NodeStats::default();
        s.record_visit(1.0, 0.5, 1).unwrap();
        s.record_visit(0.0, 0.5, 3).unwrap();
        let d = s.decayed_at(0.5, 3).unwrap();
        assert!((d.count - 1.25).abs() < 1e-12);
        assert!((d.value - 0.2).abs() < 1e-12);
    }

    #[test]
    fn fresh_visit() {
        let mut s = NodeStats::default();
        s.record_visit(1.0, 0.7, 0).unwrap();
        assert_eq!(
            (s.stored_count, s.stored_reward_sum, s.value()),
            (1.0, 1.0, 1.0)
        );
    }

    #[test]
    fn equal_rewards_give_that_reward() {
        for gamma in [0.5, 0.8, 0.99] {
            let mut s = NodeStats::default();
            s.record_visit(0.3, gamma, 2).unwrap();
            s.record_visit(0.3, gamma, 9).unwrap();
            assert!((s.value() - 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_backwards_clock_and_bad_reward() {
        let mut s = NodeStats::default();
        s.record_visit(0.5, 0.9, 4).unwrap();
        assert!(matches!(
            s.decayed_at(0.9, 3),
            Err(Error::NonMonotoneClock { .. })
        ));
        assert!(matches!(
            s.record_visit(0.5, 0.9, 3),
            Err(Error::NonMonotoneClock { .. })
        ));
        assert!(matches!(
            s.record_visit(1.5, 0.9, 5),
            Err(Error::RewardOutOfRange(_))
        ));
        assert!(matches!(
            s.record_visit(-0.1, 0.9, 5),
            Err(Error::RewardOutOfRange(_))
        ));
    }

    #[test]
    fn unvisited_value_is_zero() {
        assert_eq!(NodeStats::default().decayed_at(0.9, 10).unwrap().value, 0.0);
    }
}
