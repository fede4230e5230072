use super::tournament::run_tournaments;
use super::SelectionRequest;
use rand::seq::index;
use rand::Rng;

/// Tournament selection on a random down-sample of the cases, drawn once per
/// call: `ceil(sample_ratio * n_cases)` cases, at least one.
pub fn rds_tournament<R: Rng + ?Sized>(
    req: &SelectionRequest<'_>,
    sample_ratio: f64,
    size: usize,
    rng: &mut R,
) -> Vec<usize> {
    let n_cases = req.n_cases();
    let m = ((sample_ratio * n_cases as f64).ceil() as usize).clamp(1, n_cases);
    let cases = index::sample(rng, n_cases, m).into_vec();
    rds_tournament_on_cases(req, &cases, size, rng)
}

/// Tournaments on mean error over a fixed case subset.
pub fn rds_tournament_on_cases<R: Rng + ?Sized>(
    req: &SelectionRequest<'_>,
    cases: &[usize],
    size: usize,
    rng: &mut R,
) -> Vec<usize> {
    let scores: Vec<f64> = req
        .population
        .iter()
        .map(|ind| {
            let errors = ind.case_values();
            cases.iter().map(|&c| errors[c]).sum::<f64>() / cases.len() as f64
        })
        .collect();
    run_tournaments(&scores, req.k, size, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selection::testutil::{random_population, with_errors};
    use crate::selection::EvolutionStatus;

    #[test]
    fn single_sampled_case_decides() {
        // Individual 1 is worse on average but best on case 2.
        let pop = vec![
            with_errors(&[0.0, 0.0, 9.0]),
            with_errors(&[5.0, 5.0, 1.0]),
        ];
        let req = SelectionRequest::from_slice(&pop, 10, EvolutionStatus::new(0, 1), 0).unwrap();
        let picks = rds_tournament_on_cases(&req, &[2], 2, &mut req.rng());
        assert_eq!(picks, vec![1; 10]);
    }

    #[test]
    fn dominant_individual_wins_when_sampled() {
        let mut pop = random_population(10, 30, 2);
        pop[4].case_values.iter_mut().for_each(|e| *e = 0.0);
        let req = SelectionRequest::from_slice(&pop, 200, EvolutionStatus::new(0, 1), 8).unwrap();
        let picks = rds_tournament(&req, 0.1, 10, &mut req.rng());
        assert_eq!(picks, vec![4; 200]);
    }

    #[test]
    fn matches_reimplementation_on_same_cases() {
        let pop = random_population(25, 40, 6);
        let req = SelectionRequest::from_slice(&pop, 30, EvolutionStatus::new(0, 1), 5).unwrap();
        let mut rng = req.rng();
        let picks = rds_tournament(&req, 0.1, 7, &mut rng);

        let mut replay = req.rng();
        let cases = index::sample(&mut replay, 40, 4).into_vec();
        let scores: Vec<f64> = pop
            .iter()
            .map(|p| cases.iter().map(|&c| p.case_values[c]).sum::<f64>() / 4.0)
            .collect();
        let expected: Vec<usize> = (0..30)
            .map(|_| {
                let comp = index::sample(&mut replay, 25, 7).into_vec();
                let mut best = comp[0];
                for &c in &comp[1..] {
                    if scores[c] < scores[best] {
                        best = c;
                    }
                }
                best
            })
            .collect();
        assert_eq!(picks, expected);
    }
}
