//! Parent-selection operators behind one interface.
//!
//! An operator receives the population (the current generation plus the elite
//! archive), the number of parents `k`, the evolutionary status, and a seed.
//! It returns `k` indices into the population. Operators that build crossover
//! pairs return them interleaved: `[a0, b0, a1, b1, ...]`.

mod boltzmann;
mod cps;
mod lexicase;
mod omni;
mod omni_zero;
mod rds;
mod scripted;
mod sources;
mod tournament;

pub use boltzmann::{boltzmann, boltzmann_probabilities, boltzmann_temperature};
pub use cps::{complement_count, cps};
pub use lexicase::{auto_epsilon_lexicase, median_absolute_deviation};
pub use omni::{omni, omni_comp_factor, omni_subsets, omni_with_subsets, OmniVariant};
pub use omni_zero::{omni_zero, omni_zero_scores, OmniZeroScores};
pub use rds::{rds_tournament, rds_tournament_on_cases};
pub use scripted::{HostCommand, ScriptedOperator};
pub use sources::{builtin_marker, builtin_source, tagged_fallback, FALLBACK_SOURCE};
pub use tournament::{tournament, truncation};

use crate::fitness::Individual;
use crate::host::HostError;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SelectionError {
    #[error("invalid selection request: {0}")]
    InvalidRequest(String),
    #[error("operator returned malformed output: {0}")]
    BadOutput(String),
    #[error("unknown operator `{name}`; available: {available}")]
    UnknownOperator { name: String, available: String },
    #[error(transparent)]
    Host(#[from] HostError),
}

/// Read-only view of an individual, restricted to what selection may inspect.
pub trait Selectable: Sync {
    /// Per-case squared errors.
    fn case_values(&self) -> &[f64];
    fn predicted_values(&self) -> &[f64];
    fn target(&self) -> &[f64];
    fn node_count(&self) -> usize;
    fn height(&self) -> usize;

    fn mean_error(&self) -> f64 {
        let cases = self.case_values();
        cases.iter().sum::<f64>() / cases.len().max(1) as f64
    }

    fn residuals(&self) -> Vec<f64> {
        self.target()
            .iter()
            .zip(self.predicted_values())
            .map(|(y, p)| y - p)
            .collect()
    }
}

impl Selectable for Individual {
    fn case_values(&self) -> &[f64] {
        &self.case_values
    }
    fn predicted_values(&self) -> &[f64] {
        &self.predicted_values
    }
    fn target(&self) -> &[f64] {
        &self.y
    }
    fn node_count(&self) -> usize {
        self.genome.node_count()
    }
    fn height(&self) -> usize {
        self.genome.height()
    }
}

/// Owned selection view, used for synthetic test populations and the wire.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Phenotype {
    pub case_values: Vec<f64>,
    pub predicted_values: Vec<f64>,
    pub y: Arc<[f64]>,
    #[serde(rename = "nodes")]
    pub node_count: usize,
    pub height: usize,
}

impl Selectable for Phenotype {
    fn case_values(&self) -> &[f64] {
        &self.case_values
    }
    fn predicted_values(&self) -> &[f64] {
        &self.predicted_values
    }
    fn target(&self) -> &[f64] {
        &self.y
    }
    fn node_count(&self) -> usize {
        self.node_count
    }
    fn height(&self) -> usize {
        self.height
    }
}

/// Normalized progress of the run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionStatus {
    pub stage: f64,
    pub generation: usize,
    pub max_generations: usize,
}

impl EvolutionStatus {
    pub fn new(generation: usize, max_generations: usize) -> Self {
        let stage = if max_generations == 0 {
            1.0
        } else {
            (generation as f64 / max_generations as f64).clamp(0.0, 1.0)
        };
        Self {
            stage,
            generation,
            max_generations,
        }
    }

    /// Status with an explicit stage, for callers that only know the ratio.
    pub fn at_stage(stage: f64) -> Self {
        let max_generations = 100;
        Self {
            stage: stage.clamp(0.0, 1.0),
            generation: (stage.clamp(0.0, 1.0) * max_generations as f64).round() as usize,
            max_generations,
        }
    }
}

pub struct SelectionRequest<'a> {
    pub population: Vec<&'a dyn Selectable>,
    pub k: usize,
    pub status: EvolutionStatus,
    pub seed: u64,
}

impl<'a> SelectionRequest<'a> {
    pub fn new(
        population: Vec<&'a dyn Selectable>,
        k: usize,
        status: EvolutionStatus,
        seed: u64,
    ) -> Result<Self, SelectionError> {
        if population.is_empty() {
            return Err(SelectionError::InvalidRequest("empty population".into()));
        }
        if k < 2 || !k.is_multiple_of(2) {
            return Err(SelectionError::InvalidRequest(format!(
                "k must be even and at least 2, got {k}"
            )));
        }
        let n_cases = population[0].case_values().len();
        if n_cases == 0 {
            return Err(SelectionError::InvalidRequest("individuals have no cases".into()));
        }
        for (i, ind) in population.iter().enumerate() {
            if ind.case_values().len() != n_cases
                || ind.predicted_values().len() != n_cases
                || ind.target().len() != n_cases
            {
                return Err(SelectionError::InvalidRequest(format!(
                    "individual {i} has inconsistent vector lengths"
                )));
            }
        }
        Ok(Self {
            population,
            k,
            status,
            seed,
        })
    }

    pub fn from_slice<S: Selectable>(
        population: &'a [S],
        k: usize,
        status: EvolutionStatus,
        seed: u64,
    ) -> Result<Self, SelectionError> {
        Self::new(
            population.iter().map(|p| p as &dyn Selectable).collect(),
            k,
            status,
            seed,
        )
    }

    pub fn len(&self) -> usize {
        self.population.len()
    }

    pub fn is_empty(&self) -> bool {
        self.population.is_empty()
    }

    pub fn n_cases(&self) -> usize {
        self.population[0].case_values().len()
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    pub fn mean_errors(&self) -> Vec<f64> {
        self.population.iter().map(|p| p.mean_error()).collect()
    }

    /// Checks that `indices` is a valid answer to this request.
    pub fn validate_output(&self, indices: &[usize]) -> Result<(), SelectionError> {
        if indices.len() != self.k {
            return Err(SelectionError::BadOutput(format!(
                "expected {} individuals, got {}",
                self.k,
                indices.len()
            )));
        }
        if let Some(bad) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(SelectionError::BadOutput(format!(
                "index {bad} outside population of {}",
                self.len()
            )));
        }
        Ok(())
    }
}

pub trait SelectionOperator: Send + Sync {
    fn name(&self) -> String;

    fn select(&self, req: &SelectionRequest<'_>) -> Result<Vec<usize>, SelectionError>;
}

/// Native operators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Builtin {
    Tournament { size: usize },
    Boltzmann { tau0: f64 },
    AutoLexicase,
    RdsTournament { sample_ratio: f64, size: usize },
    Cps { size: usize },
    Omni,
    OmniR,
    OmniZero,
    /// Deterministic: the `k` lowest mean case errors, cycling if `k > n`.
    Truncation,
}

pub const BUILTIN_NAMES: [&str; 10] = [
    "tournament3",
    "tournament7",
    "boltzmann",
    "autolex",
    "rds_tour",
    "cps",
    "omni",
    "omni_r",
    "omni_zero",
    "truncation",
];

impl Builtin {
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "tournament3" => Builtin::Tournament { size: 3 },
            "tournament7" => Builtin::Tournament { size: 7 },
            "boltzmann" => Builtin::Boltzmann { tau0: 0.1 },
            "autolex" => Builtin::AutoLexicase,
            "rds_tour" => Builtin::RdsTournament {
                sample_ratio: 0.10,
                size: 7,
            },
            "cps" => Builtin::Cps { size: 7 },
            "omni" => Builtin::Omni,
            "omni_r" => Builtin::OmniR,
            "omni_zero" => Builtin::OmniZero,
            "truncation" => Builtin::Truncation,
            _ => return None,
        })
    }
}

impl SelectionOperator for Builtin {
    fn name(&self) -> String {
        match *self {
            Builtin::Tournament { size } => format!("tournament{size}"),
            Builtin::Boltzmann { .. } => "boltzmann".into(),
            Builtin::AutoLexicase => "autolex".into(),
            Builtin::RdsTournament { .. } => "rds_tour".into(),
            Builtin::Cps { .. } => "cps".into(),
            Builtin::Omni => "omni".into(),
            Builtin::OmniR => "omni_r".into(),
            Builtin::OmniZero => "omni_zero".into(),
            Builtin::Truncation => "truncation".into(),
        }
    }

    fn select(&self, req: &SelectionRequest<'_>) -> Result<Vec<usize>, SelectionError> {
        let mut rng = req.rng();
        Ok(match *self {
            Builtin::Tournament { size } => tournament(req, size, &mut rng),
            Builtin::Boltzmann { tau0 } => boltzmann(req, tau0, &mut rng),
            Builtin::AutoLexicase => auto_epsilon_lexicase(req, &mut rng),
            Builtin::RdsTournament { sample_ratio, size } => {
                rds_tournament(req, sample_ratio, size, &mut rng)
            }
            Builtin::Cps { size } => cps(req, size, &mut rng),
            Builtin::Omni => omni(req, OmniVariant::Original, &mut rng),
            Builtin::OmniR => omni(req, OmniVariant::Repaired, &mut rng),
            Builtin::OmniZero => omni_zero(req, &mut rng),
            Builtin::Truncation => truncation(req),
        })
    }
}

/// Resolves a registry name: a builtin, or `scripted:<path>` hosted out of
/// process.
pub fn resolve_operator(
    name: &str,
    host: &HostCommand,
) -> Result<Box<dyn SelectionOperator>, SelectionError> {
    if let Some(builtin) = Builtin::from_name(name) {
        return Ok(Box::new(builtin));
    }
    if let Some(path) = name.strip_prefix("scripted:") {
        return Ok(Box::new(ScriptedOperator::new(path, host.clone())));
    }
    Err(SelectionError::UnknownOperator {
        name: name.to_owned(),
        available: format!("{}, scripted:<path>", BUILTIN_NAMES.join(", ")),
    })
}

/// Index of the smallest value; ties go to the lowest index.
pub(crate) fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = i;
        }
    }
    best
}


#[cfg(test)]
mod tests {
    use super::testutil::random_population;
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_odd_k_and_empty_population() {
        let pop = random_population(4, 5, 1);
        let status = EvolutionStatus::new(0, 10);
        assert!(SelectionRequest::from_slice(&pop, 3, status, 0).is_err());
        assert!(SelectionRequest::from_slice(&pop[..0], 4, status, 0).is_err());
        assert!(SelectionRequest::from_slice(&pop, 4, status, 0).is_ok());
    }

    #[test]
    fn status_stage_is_clamped_ratio() {
        assert_eq!(EvolutionStatus::new(0, 30).stage, 0.0);
        assert_eq!(EvolutionStatus::new(15, 30).stage, 0.5);
        assert_eq!(EvolutionStatus::new(40, 30).stage, 1.0);
    }

    #[test]
    fn unknown_operator_lists_registry() {
        let err = resolve_operator("nope", &HostCommand::default()).err().unwrap();
        let msg = err.to_string();
        assert!(msg.contains("tournament7") && msg.contains("omni_zero"));
        assert!(resolve_operator("scripted:/tmp/x.py", &HostCommand::default()).is_ok());
    }

    #[test]
    fn argmin_prefers_lowest_index() {
        assert_eq!(argmin(&[2.0, 1.0, 1.0]), 1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn every_builtin_returns_k_members_deterministically(
            n in 1usize..30,
            cases in 1usize..40,
            half_k in 1usize..40,
            stage in 0.0f64..=1.0,
            seed in any::<u64>(),
        ) {
            let pop = random_population(n, cases, seed);
            let status = EvolutionStatus::at_stage(stage);
            let req = SelectionRequest::from_slice(&pop, 2 * half_k, status, seed).unwrap();
            for name in BUILTIN_NAMES {
                let op = Builtin::from_name(name).unwrap();
                let first = op.select(&req).unwrap();
                prop_assert!(req.validate_output(&first).is_ok(), "{} failed", name);
                prop_assert_eq!(&first, &op.select(&req).unwrap());
            }
        }
    }
}
