use super::SelectionRequest;
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

const MIN_TEMPERATURE: f64 = 1e-6;

/// `tau0 * (1 - (t mod T) / T)`, floored at 1e-6.
pub fn boltzmann_temperature(tau0: f64, generation: usize, max_generations: usize) -> f64 {
    let period = max_generations.max(1);
    let phase = (generation % period) as f64 / period as f64;
    (tau0 * (1.0 - phase)).max(MIN_TEMPERATURE)
}

/// Softmax of `scores / temperature`, shifted by the maximum for stability.
pub fn boltzmann_probabilities(scores: &[f64], temperature: f64) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = scores
        .iter()
        .map(|s| ((s - max) / temperature).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// Min-max normalized negated mean error; equal scores map to zero.
pub(crate) fn normalized_scores(errors: &[f64]) -> Vec<f64> {
    let lo = errors.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = errors.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    errors
        .iter()
        .map(|e| if range > 0.0 { (hi - e) / range } else { 0.0 })
        .collect()
}

/// Boltzmann sampling with a linearly decaying temperature.
pub fn boltzmann<R: Rng + ?Sized>(req: &SelectionRequest<'_>, tau0: f64, rng: &mut R) -> Vec<usize> {
    let scores = normalized_scores(&req.mean_errors());
    let temperature =
        boltzmann_temperature(tau0, req.status.generation, req.status.max_generations);
    let probs = boltzmann_probabilities(&scores, temperature);
    let dist = WeightedIndex::new(&probs).expect("softmax has positive mass");
    (0..req.k).map(|_| dist.sample(rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selection::testutil::with_errors;
    use crate::selection::EvolutionStatus;

    #[test]
    fn initial_temperature() {
        assert_eq!(boltzmann_temperature(0.1, 0, 30), 0.1);
    }

    #[test]
    fn temperature_decreases_over_cycle() {
        let temps: Vec<f64> = (0..30).map(|t| boltzmann_temperature(0.1, t, 30)).collect();
        assert!(temps.windows(2).all(|w| w[1] < w[0]));
        // Wraps at the period.
        assert_eq!(boltzmann_temperature(0.1, 30, 30), 0.1);
    }

    #[test]
    fn equal_scores_are_uniform() {
        let probs = boltzmann_probabilities(&normalized_scores(&[2.0, 2.0, 2.0, 2.0]), 0.1);
        assert!(probs.iter().all(|p| (p - 0.25).abs() < 1e-15));
    }

    #[test]
    fn matches_hand_softmax() {
        let probs = boltzmann_probabilities(&[1.0, 0.5, 0.0], 0.1);
        let e = [10f64.exp(), 5f64.exp(), 1.0];
        let z: f64 = e.iter().sum();
        for (p, w) in probs.iter().zip(e) {
            assert!((p - w / z).abs() < 1e-12);
        }
        // Frozen: exp(10)/(exp(10)+exp(5)+1)
        assert!((probs[0] - 0.993_262_356_842_174_3).abs() < 1e-12);
    }

    #[test]
    fn normalization_maps_best_to_one() {
        assert_eq!(normalized_scores(&[4.0, 2.0, 3.0]), vec![0.0, 1.0, 0.5]);
    }

    #[test]
    fn low_temperature_concentrates_on_best() {
        let pop = vec![with_errors(&[5.0]), with_errors(&[1.0]), with_errors(&[3.0])];
        let req = SelectionRequest::from_slice(&pop, 100, EvolutionStatus::new(29, 30), 1).unwrap();
        let picks = boltzmann(&req, 0.1, &mut req.rng());
        assert!(picks.iter().filter(|&&i| i == 1).count() > 95);
    }
}
