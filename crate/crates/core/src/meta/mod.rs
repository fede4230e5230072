//! Meta-evolution of selection operators.
//!
//! A pool of operator candidates is varied by a language model (crossover of
//! two parents, mutation of the elite), screened by a synthetic gate, scored
//! by inner SR runs, and cut back by length-aware survival.

mod candidate;
mod evaluate;
mod gate;
mod survival;

pub use candidate::{
    classify_source, elite_index, rank_order, CandidateKind, OperatorCandidate, OperatorFactory, Provenance,
};
pub use evaluate::{clip_score, mix_seed, CandidateEvaluator, FlatEvaluator, SrEvaluator};
pub use gate::{
    apply_relative_filter, gate_cases, gate_one, synthetic_gate, GateConfig, GateOutcome, RejectReason,
    GATE_CASES, GATE_K, GATE_POPULATION,
};
pub use survival::{
    complementarity, dominance_dissimilarity_survival, dominance_scores, elite, random_parent_selection,
    replacement_elitism_survival, semantic_parent_selection, weakly_dominates, ParentSelection, SurvivalMode,
};

use crate::engine::SRConfig;
use crate::llm::{build_prompt, extract_code, LlmError, LlmGateway, PromptAssets, PromptConfig, PromptError, PromptKind, PromptParent};
use crate::selection::{tagged_fallback, SelectionOperator};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::{fs, io};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetaError {
    #[error("invalid meta configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("checkpoint {path}: {message}")]
    Checkpoint { path: String, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetaConfig {
    pub pool_size: usize,
    pub mutation_count: usize,
    pub generations: usize,
    pub inner: SRConfig,
    pub seed: u64,
    pub prompt: PromptConfig,
    pub survival: SurvivalMode,
    pub parent_selection: ParentSelection,
    pub gate: GateConfig,
}

impl Default for MetaConfig {
    fn default() -> Self {
        Self {
            pool_size: 20,
            mutation_count: 1,
            generations: 20,
            inner: SRConfig::meta_inner(),
            seed: 0,
            prompt: PromptConfig::default(),
            survival: SurvivalMode::default(),
            parent_selection: ParentSelection::default(),
            gate: GateConfig::default(),
        }
    }
}

impl MetaConfig {
    pub fn crossover_count(&self) -> usize {
        self.pool_size.saturating_sub(self.mutation_count)
    }

    pub fn validate(&self) -> Result<(), MetaError> {
        if self.pool_size < 2 {
            return Err(MetaError::Config(format!("pool_size must be at least 2, got {}", self.pool_size)));
        }
        if self.mutation_count > self.pool_size {
            return Err(MetaError::Config(format!(
                "mutation_count {} exceeds pool_size {}",
                self.mutation_count, self.pool_size
            )));
        }
        if self.prompt.length_target == 0 {
            return Err(MetaError::Config("length_target must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetaGenerationRecord {
    pub generation: usize,
    pub best_fitness: f64,
    pub best_ever_fitness: f64,
    pub mean_code_length: f64,
    pub mean_approx_tokens: f64,
    pub offspring: usize,
    pub rejected: usize,
    pub fallbacks: usize,
}

/// Complete run state after a finished generation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetaCheckpoint {
    pub config: MetaConfig,
    /// Completed generations; 0 means only the initial pool exists.
    pub generation: usize,
    pub next_id: u64,
    pub pool: Vec<OperatorCandidate>,
    pub best_ever: OperatorCandidate,
    pub log: Vec<MetaGenerationRecord>,
    pub rng: ChaCha8Rng,
    pub gateway_position: BTreeMap<String, usize>,
}

impl MetaCheckpoint {
    pub fn save(&self, path: &Path) -> Result<(), MetaError> {
        let text = serde_json::to_string_pretty(self).map_err(|e| MetaError::Checkpoint {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, text)?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, MetaError> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| MetaError::Checkpoint {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn is_finished(&self) -> bool {
        self.generation >= self.config.generations
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

pub struct MetaRunner<'a> {
    config: MetaConfig,
    gateway: &'a mut LlmGateway,
    evaluator: &'a dyn CandidateEvaluator,
    factory: OperatorFactory,
    assets: PromptAssets,
    checkpoint_path: Option<PathBuf>,
}

impl<'a> MetaRunner<'a> {
    pub fn new(
        config: MetaConfig,
        gateway: &'a mut LlmGateway,
        evaluator: &'a dyn CandidateEvaluator,
        factory: OperatorFactory,
    ) -> Self {
        Self {
            config,
            gateway,
            evaluator,
            factory,
            assets: PromptAssets::default(),
            checkpoint_path: None,
        }
    }

    pub fn with_assets(mut self, assets: PromptAssets) -> Self {
        self.assets = assets;
        self
    }

    /// Writes the state here after initialisation and every generation.
    pub fn with_checkpoint(mut self, path: impl Into<PathBuf>) -> Self {
        self.checkpoint_path = Some(path.into());
        self
    }

    /// Runs to completion, or until `stop_after` generations are done. A
    /// resumed run continues from `resume` with its stored configuration.
    pub fn run(
        &mut self,
        resume: Option<MetaCheckpoint>,
        stop_after: Option<usize>,
    ) -> Result<MetaCheckpoint, MetaError> {
        let mut state = match resume {
            Some(state) => {
                self.config = state.config.clone();
                self.gateway.restore_position(state.gateway_position.clone());
                state
            }
            None => {
                self.config.validate()?;
                let state = self.initialize()?;
                self.save(&state)?;
                state
            }
        };
        let limit = stop_after.unwrap_or(usize::MAX).min(self.config.generations);
        while state.generation < limit {
            self.step(&mut state)?;
            self.save(&state)?;
        }
        Ok(state)
    }

    fn save(&self, state: &MetaCheckpoint) -> Result<(), MetaError> {
        match &self.checkpoint_path {
            Some(path) => state.save(path),
            None => Ok(()),
        }
    }

    /// Asks the model for code; a reply with no code yields the fallback.
    fn generate(&mut self, kind: PromptKind, parents: &[&OperatorCandidate]) -> Result<(String, bool), MetaError> {
        let views: Vec<PromptParent<'_>> = parents
            .iter()
            .map(|c| PromptParent {
                id: c.id,
                source: &c.source,
                scores: &c.score_vector,
            })
            .collect();
        let bundle = build_prompt(kind, &views, &self.config.prompt, &self.assets)?;
        let reply = self.gateway.complete(&bundle)?;
        Ok(match extract_code(&reply) {
            Some(code) => (code, false),
            None => {
                log::info!("no code in {kind:?} reply; using the fallback operator");
                (tagged_fallback(), true)
            }
        })
    }

    fn instantiate(&self, candidates: &[OperatorCandidate]) -> Vec<Option<Arc<dyn SelectionOperator>>> {
        candidates
            .iter()
            .map(|c| match self.factory.instantiate(c) {
                Ok(op) => Some(op),
                Err(e) => {
                    log::warn!("candidate {}: {e}", c.id);
                    None
                }
            })
            .collect()
    }

    fn gate(&self, candidates: &[OperatorCandidate]) -> (Vec<GateOutcome>, Vec<Option<Arc<dyn SelectionOperator>>>) {
        let ops = self.instantiate(candidates);
        let runnable: Vec<Arc<dyn SelectionOperator>> = ops.iter().flatten().cloned().collect();
        let mut results = synthetic_gate(&runnable, &self.config.gate).into_iter();
        let outcomes = ops
            .iter()
            .map(|op| match op {
                Some(_) => results.next().expect("one outcome per runnable operator"),
                None => GateOutcome::Reject {
                    reason: RejectReason::RuntimeError,
                    detail: "could not instantiate".into(),
                },
            })
            .collect();
        (outcomes, ops)
    }

    fn evaluate(&self, candidates: &mut [OperatorCandidate], ops: &[Arc<dyn SelectionOperator>]) {
        let seed = self.config.seed;
        let evaluator = self.evaluator;
        let scores: Vec<Vec<f64>> = candidates
            .par_iter()
            .zip(ops.par_iter())
            .map(|(c, op)| evaluator.score(c, op.as_ref(), mix_seed(seed, c.id)))
            .collect();
        for (c, s) in candidates.iter_mut().zip(scores) {
            c.set_scores(s);
        }
    }

    fn initialize(&mut self) -> Result<MetaCheckpoint, MetaError> {
        let n = self.config.pool_size;
        let mut candidates = Vec::with_capacity(n);
        for id in 0..n as u64 {
            let (source, fallback) = self.generate(PromptKind::Init, &[])?;
            let provenance = if fallback { Provenance::Fallback } else { Provenance::Init };
            candidates.push(OperatorCandidate::new(id, source, 0, provenance));
        }
        let (outcomes, ops) = self.gate(&candidates);
        let mut runnable = Vec::with_capacity(n);
        let mut fallbacks = 0;
        for ((candidate, outcome), op) in candidates.iter_mut().zip(&outcomes).zip(ops) {
            match (outcome, op) {
                (GateOutcome::Pass { .. }, Some(op)) => runnable.push(op),
                _ => {
                    log::info!("initial candidate {} rejected: {outcome:?}", candidate.id);
                    *candidate = OperatorCandidate::new(candidate.id, tagged_fallback(), 0, Provenance::Fallback);
                    runnable.push(self.factory.instantiate(candidate)?);
                }
            }
            if candidate.provenance == Provenance::Fallback {
                fallbacks += 1;
            }
        }
        self.evaluate(&mut candidates, &runnable);
        let best_ever = elite(&candidates).expect("non-empty pool").clone();
        let mut state = MetaCheckpoint {
            config: self.config.clone(),
            generation: 0,
            next_id: n as u64,
            pool: candidates,
            best_ever,
            log: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(self.config.seed),
            gateway_position: self.gateway.position().clone(),
        };
        let record = self.record(&state, n, 0, fallbacks);
        state.log.push(record);
        Ok(state)
    }

    fn record(&self, state: &MetaCheckpoint, offspring: usize, rejected: usize, fallbacks: usize) -> MetaGenerationRecord {
        MetaGenerationRecord {
            generation: state.generation,
            best_fitness: elite(&state.pool).map_or(0.0, |c| c.fitness),
            best_ever_fitness: state.best_ever.fitness,
            mean_code_length: mean(state.pool.iter().map(|c| c.code_length as f64)),
            mean_approx_tokens: mean(state.pool.iter().map(|c| c.approx_tokens as f64)),
            offspring,
            rejected,
            fallbacks,
        }
    }

    /// One generation: variation, gate, evaluation, survival.
    pub fn step(&mut self, state: &mut MetaCheckpoint) -> Result<(), MetaError> {
        let generation = state.generation + 1;
        let mut requests: Vec<(PromptKind, Vec<usize>)> = Vec::with_capacity(self.config.pool_size);
        for _ in 0..self.config.crossover_count() {
            let (a, b) = match self.config.parent_selection {
                ParentSelection::Semantic => semantic_parent_selection(&state.pool, &mut state.rng),
                ParentSelection::Random => random_parent_selection(&state.pool, &mut state.rng),
            };
            requests.push((PromptKind::Crossover, vec![a, b]));
        }
        let elite_at = elite_index(&state.pool).expect("non-empty pool");
        for _ in 0..self.config.mutation_count {
            requests.push((PromptKind::Mutation, vec![elite_at]));
        }

        let mut offspring = Vec::with_capacity(requests.len());
        let mut fallbacks = 0;
        for (kind, parent_idx) in requests {
            let parents: Vec<OperatorCandidate> = parent_idx.iter().map(|&i| state.pool[i].clone()).collect();
            let refs: Vec<&OperatorCandidate> = parents.iter().collect();
            let (source, fallback) = self.generate(kind, &refs)?;
            let provenance = match (fallback, kind) {
                (true, _) => {
                    fallbacks += 1;
                    Provenance::Fallback
                }
                (false, PromptKind::Crossover) => Provenance::Crossover {
                    parents: [parents[0].id, parents[1].id],
                },
                (false, _) => Provenance::Mutation { parent: parents[0].id },
            };
            offspring.push(OperatorCandidate::new(state.next_id, source, generation, provenance));
            state.next_id += 1;
        }

        let produced = offspring.len();
        let (outcomes, ops) = self.gate(&offspring);
        let mut passed = Vec::with_capacity(produced);
        let mut passed_ops = Vec::with_capacity(produced);
        for ((candidate, outcome), op) in offspring.into_iter().zip(outcomes).zip(ops) {
            match (outcome, op) {
                (GateOutcome::Pass { .. }, Some(op)) => {
                    passed.push(candidate);
                    passed_ops.push(op);
                }
                (outcome, _) => log::info!("generation {generation}: candidate {} rejected: {outcome:?}", candidate.id),
            }
        }
        let rejected = produced - passed.len();
        self.evaluate(&mut passed, &passed_ops);

        if let Some(best) = elite(&passed) {
            if best.fitness > state.best_ever.fitness {
                state.best_ever = best.clone();
            }
        }
        let n = self.config.pool_size;
        let parents = std::mem::take(&mut state.pool);
        state.pool = match self.config.survival {
            SurvivalMode::DominanceDissimilarity => {
                let mut union = parents;
                union.extend(passed);
                dominance_dissimilarity_survival(union, n)
            }
            SurvivalMode::ReplacementElitism => replacement_elitism_survival(parents, passed, n),
        };
        state.generation = generation;
        state.gateway_position = self.gateway.position().clone();
        let record = self.record(state, produced, rejected, fallbacks);
        log::info!(
            "meta generation {generation}: best {:.4}, best ever {:.4}, mean length {:.1}, mean tokens {:.1}",
            record.best_fitness,
            record.best_ever_fitness,
            record.mean_code_length,
            record.mean_approx_tokens
        );
        state.log.push(record);
        Ok(())
    }
}

/// Runs a fresh meta-evolution with no checkpointing.
pub fn run_meta(
    config: MetaConfig,
    gateway: &mut LlmGateway,
    evaluator: &dyn CandidateEvaluator,
    factory: OperatorFactory,
) -> Result<MetaCheckpoint, MetaError> {
    MetaRunner::new(config, gateway, evaluator, factory).run(None, None)
}

/// Writes the generation log as JSON lines.
pub fn write_meta_log(path: &Path, log: &[MetaGenerationRecord]) -> Result<(), MetaError> {
    let mut text = String::new();
    for record in log {
        text.push_str(&serde_json::to_string(record).expect("record serializes"));
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}
