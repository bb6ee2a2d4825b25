//! Child-selection rules: the mixed Boltzmann distribution with an entropy
//! bonus, and discounted UCT.

use serde::{Deserialize, Serialize};

use super::schedule::ScheduleSpec;

/// Lower bound applied to the temperature before dividing by it.
pub const ALPHA_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoltzmannParams {
    pub alpha: ScheduleSpec,
    pub beta: ScheduleSpec,
    pub epsilon: f64,
}

/// Weight of the uniform component, `min(1, epsilon / ln(e + N))`.
pub fn uniform_mix(epsilon: f64, parent_count: f64) -> f64 {
    (epsilon / (std::f64::consts::E + parent_count).ln()).min(1.0)
}

/// Softmax of `scores / alpha` with max-subtraction.
pub fn softmax(scores: &[f64], temperature: f64) -> Vec<f64> {
    let t = temperature.max(ALPHA_FLOOR);
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = scores.iter().map(|s| ((s - max) / t).exp()).collect();
    let z: f64 = w.iter().sum();
    for x in &mut w {
        *x /= z;
    }
    w
}

/// The entropy-regularised Boltzmann component `rho`.
pub fn boltzmann_weights(
    values: &[f64],
    entropies: &[f64],
    parent_count: f64,
    params: &BoltzmannParams,
) -> Vec<f64> {
    let alpha = params.alpha.eval(parent_count).max(ALPHA_FLOOR);
    let beta = params.beta.eval(parent_count);
    let scores: Vec<f64> = values
        .iter()
        .zip(entropies)
        .map(|(x, h)| x + beta * h)
        .collect();
    softmax(&scores, alpha)
}

/// Selection distribution `pi = (1 - lambda) rho + lambda / |C|`.
pub fn mixed_boltzmann(
    values: &[f64],
    entropies: &[f64],
    parent_count: f64,
    params: &BoltzmannParams,
) -> Vec<f64> {
    debug_assert_eq!(values.len(), entropies.len());
    let n = values.len() as f64;
    let lambda = uniform_mix(params.epsilon, parent_count);
    boltzmann_weights(values, entropies, parent_count, params)
        .into_iter()
        .map(|r| (1.0 - lambda) * r + lambda / n)
        .collect()
}

pub fn shannon_entropy(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.ln())
        .sum::<f64>()
}

/// Discounted UCT score. `log(N_parent)` is clamped at zero, so a parent whose
/// decayed mass fell below one contributes no exploration bonus.
pub fn duct_score(value: f64, child_count: f64, parent_count: f64, epsilon: f64) -> f64 {
    if child_count <= 0.0 {
        return f64::INFINITY;
    }
    let log_parent = parent_count.max(1.0).ln();
    value + (epsilon * log_parent / child_count).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(eps: f64) -> BoltzmannParams {
        BoltzmannParams {
            alpha: ScheduleSpec::inverse_log(1.0),
            beta: ScheduleSpec::inverse_log(1.0),
            epsilon: eps,
        }
    }

    #[test]
    fn symmetric_children_uniform() {
        let pi = mixed_boltzmann(&[0.4, 0.4], &[0.1, 0.1], 3.0, &params(0.5));
        assert!((pi[0] - 0.5).abs() < 1e-15 && (pi[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_parent_count_mix() {
        let p = params(0.5);
        let values = [0.8, 0.1];
        let ent = [0.0, 0.0];
        // log(e) = 1, so lambda = 0.5 and alpha(0) = 1
        let rho0 = 1.0 / (1.0 + (0.1f64 - 0.8).exp());
        let pi = mixed_boltzmann(&values, &ent, 0.0, &p);
        assert!((pi[0] - (0.5 * rho0 + 0.25)).abs() < 1e-12);
        assert!((pi[1] - (0.5 * (1.0 - rho0) + 0.25)).abs() < 1e-12);
    }

    #[test]
    fn cold_limit_concentrates_on_argmax() {
        let p = BoltzmannParams {
            alpha: ScheduleSpec::inverse_log(1e-9),
            beta: ScheduleSpec::zero(),
            epsilon: 0.5,
        };
        let pi = mixed_boltzmann(&[0.2, 0.9, 0.5], &[3.0, 0.0, 1.0], 4.0, &p);
        let lambda = uniform_mix(0.5, 4.0);
        assert!((pi[1] - (1.0 - lambda + lambda / 3.0)).abs() < 1e-12);
        assert!((pi[0] - lambda / 3.0).abs() < 1e-12);
    }

    #[test]
    fn huge_scores_do_not_overflow() {
        let p = BoltzmannParams {
            alpha: ScheduleSpec::zero(),
            beta: ScheduleSpec::zero(),
            epsilon: 0.1,
        };
        let pi = mixed_boltzmann(&[1e6, -1e6], &[0.0, 0.0], 0.0, &p);
        assert!(pi.iter().all(|x| x.is_finite() && *x > 0.0));
        assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn duct_examples() {
        assert!((duct_score(0.9, 1.0, 1.0, 1.0) - 0.9).abs() < 1e-15);
        assert!((duct_score(0.0, 1.0, std::f64::consts::E, 1.0) - 1.0).abs() < 1e-12);
        assert_eq!(duct_score(0.3, 0.0, 2.0, 1.0), f64::INFINITY);
    }

    #[test]
    fn entropy_of_uniform_pair() {
        assert!((shannon_entropy(&[0.5, 0.5]) - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(shannon_entropy(&[1.0]), 0.0);
    }
}
