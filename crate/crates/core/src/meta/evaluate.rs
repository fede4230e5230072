use super::candidate::OperatorCandidate;
use crate::dataio::DatasetSplit;
use crate::engine::{run_sr, SRConfig};
use crate::selection::SelectionOperator;

/// Scores a candidate's operator on every task.
pub trait CandidateEvaluator: Sync {
    fn dimensions(&self) -> usize;
    fn score(&self, candidate: &OperatorCandidate, operator: &dyn SelectionOperator, seed: u64) -> Vec<f64>;
}

/// Validation R² of an inner SR run per dataset, clipped to [-1, 1]. A failed
/// run scores -1.
pub struct SrEvaluator {
    pub splits: Vec<DatasetSplit>,
    pub inner: SRConfig,
}

pub fn clip_score(r2: f64) -> f64 {
    if r2.is_nan() {
        -1.0
    } else {
        r2.clamp(-1.0, 1.0)
    }
}

impl CandidateEvaluator for SrEvaluator {
    fn dimensions(&self) -> usize {
        self.splits.len()
    }

    fn score(&self, candidate: &OperatorCandidate, operator: &dyn SelectionOperator, seed: u64) -> Vec<f64> {
        self.splits
            .iter()
            .enumerate()
            .map(|(j, split)| {
                let config = SRConfig {
                    seed: mix_seed(seed, j as u64),
                    ..self.inner.clone()
                };
                match run_sr(split, operator, &config) {
                    Ok(result) => clip_score(result.validation_r2),
                    Err(e) => {
                        log::warn!("candidate {} failed on {}: {e}", candidate.id, split.name);
                        -1.0
                    }
                }
            })
            .collect()
    }
}

/// Every candidate gets the same scores. Used to isolate length effects.
pub struct FlatEvaluator {
    pub scores: Vec<f64>,
}

impl CandidateEvaluator for FlatEvaluator {
    fn dimensions(&self) -> usize {
        self.scores.len()
    }

    fn score(&self, _: &OperatorCandidate, _: &dyn SelectionOperator, _: u64) -> Vec<f64> {
        self.scores.clone()
    }
}

/// SplitMix64 finaliser over a combined seed.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{make_split, SyntheticProblem};
    use crate::meta::candidate::Provenance;
    use crate::selection::{Builtin, SelectionError, SelectionRequest};

    struct Broken;
    impl SelectionOperator for Broken {
        fn name(&self) -> String {
            "broken".into()
        }
        fn select(&self, _: &SelectionRequest<'_>) -> Result<Vec<usize>, SelectionError> {
            Err(SelectionError::BadOutput("nothing".into()))
        }
    }

    fn evaluator() -> SrEvaluator {
        let splits = [SyntheticProblem::Product, SyntheticProblem::Sine]
            .iter()
            .map(|p| make_split(&p.generate(60, p.default_noise(), 3), 3).unwrap())
            .collect();
        SrEvaluator {
            splits,
            inner: SRConfig {
                population_size: 20,
                generations: 3,
                ..SRConfig::default()
            },
        }
    }

    #[test]
    fn scores_are_clipped_per_dataset() {
        let ev = evaluator();
        let c = OperatorCandidate::new(0, String::new(), 0, Provenance::Init);
        let scores = ev.score(&c, &Builtin::Tournament { size: 3 }, 1);
        assert_eq!(scores.len(), 2);
        assert!(scores.iter().all(|s| (-1.0..=1.0).contains(s)));
        assert_eq!(ev.score(&c, &Broken, 1), vec![-1.0, -1.0]);
        assert_eq!(clip_score(-7.0), -1.0);
        assert_eq!(clip_score(f64::NAN), -1.0);
    }

    #[test]
    fn seeds_mix() {
        assert_ne!(mix_seed(1, 0), mix_seed(1, 1));
        assert_ne!(mix_seed(1, 0), mix_seed(2, 0));
    }
}
