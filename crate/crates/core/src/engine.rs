//! The inner genetic-programming loop.

use crate::dataio::DatasetSplit;
use crate::exprtree::{subtree_crossover, subtree_mutation, ExpressionTree, PrimitiveSet, TreeError};
use crate::fitness::{evaluate_individual, r2_score, Individual, DEFAULT_LAMBDA};
use crate::selection::{EvolutionStatus, Selectable, SelectionError, SelectionOperator, SelectionRequest};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use thiserror::Error;

const DEDUP_RETRIES: usize = 10;
const FRESH_TREE_ATTEMPTS: usize = 1000;
const INIT_DEPTH: (usize, usize) = (0, 6);

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("selection operator `{operator}` failed at generation {generation}: {source}")]
    Operator {
        operator: String,
        generation: usize,
        source: SelectionError,
    },
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SRConfig {
    pub population_size: usize,
    pub generations: usize,
    pub max_depth: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub lambda: f64,
    pub seed: u64,
}

impl Default for SRConfig {
    fn default() -> Self {
        Self {
            population_size: 100,
            generations: 100,
            max_depth: crate::exprtree::DEFAULT_MAX_DEPTH,
            crossover_rate: 0.9,
            mutation_rate: 0.1,
            lambda: DEFAULT_LAMBDA,
            seed: 0,
        }
    }
}

impl SRConfig {
    /// Settings for the inner loop of meta-evolution.
    pub fn meta_inner() -> Self {
        Self {
            generations: 30,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self.population_size < 2 || !self.population_size.is_multiple_of(2) {
            return Err(EngineError::Config(format!(
                "population_size must be even and at least 2, got {}",
                self.population_size
            )));
        }
        let rates_ok = (0.0..=1.0).contains(&self.crossover_rate)
            && (0.0..=1.0).contains(&self.mutation_rate)
            && (self.crossover_rate + self.mutation_rate - 1.0).abs() < 1e-9;
        if !rates_ok {
            return Err(EngineError::Config(format!(
                "crossover_rate + mutation_rate must equal 1, got {} + {}",
                self.crossover_rate, self.mutation_rate
            )));
        }
        if self.max_depth < INIT_DEPTH.1 {
            return Err(EngineError::Config(format!(
                "max_depth must be at least {}, got {}",
                INIT_DEPTH.1, self.max_depth
            )));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(EngineError::Config(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    /// Mean LOOCV case error of the elite.
    pub best_train_error: f64,
    /// Validation R² of the elite.
    pub best_val_r2: f64,
    pub mean_tree_size: f64,
    pub diversity: f64,
}

#[derive(Clone, Debug)]
pub struct SRResult {
    pub best: Individual,
    pub history: Vec<GenerationRecord>,
    pub validation_r2: f64,
    pub evaluations: usize,
    /// Distinct canonical keys among all evaluated trees.
    pub unique_genomes: usize,
}

impl SRResult {
    pub fn final_tree_size(&self) -> usize {
        self.best.node_count()
    }
}

/// Mean over unordered pairs of one minus the cosine similarity of the case
/// error vectors. Identical vectors have distance exactly zero.
pub fn population_cosine_diversity<S: Selectable>(pop: &[S]) -> f64 {
    let n = pop.len();
    if n < 2 {
        return 0.0;
    }
    let norms: Vec<f64> = pop
        .iter()
        .map(|p| p.case_values().iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let sim = if pop[i].case_values() == pop[j].case_values() {
                1.0
            } else if norms[i] == 0.0 || norms[j] == 0.0 {
                0.0
            } else {
                let dot: f64 = pop[i]
                    .case_values()
                    .iter()
                    .zip(pop[j].case_values())
                    .map(|(a, b)| a * b)
                    .sum();
                (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0)
            };
            total += 1.0 - sim;
        }
    }
    total / (n * (n - 1) / 2) as f64
}

struct Run<'a> {
    split: &'a DatasetSplit,
    config: &'a SRConfig,
    pset: PrimitiveSet,
    rng: ChaCha8Rng,
    seen: HashSet<String>,
    evaluations: usize,
}

impl Run<'_> {
    fn evaluate(&mut self, trees: Vec<ExpressionTree>) -> Result<Vec<Individual>, EngineError> {
        self.evaluations += trees.len();
        let lambda = self.config.lambda;
        let split = self.split;
        Ok(trees
            .into_par_iter()
            .map(|t| evaluate_individual(t, split, lambda))
            .collect::<Result<Vec<_>, _>>()?)
    }

    /// Records `tree` if unseen; returns whether it was new.
    fn claim(&mut self, tree: &ExpressionTree) -> bool {
        self.seen.insert(tree.canonical_key())
    }

    fn fresh_tree(&mut self) -> ExpressionTree {
        let mut tree = self.random_tree();
        for _ in 0..FRESH_TREE_ATTEMPTS {
            if self.claim(&tree) {
                return tree;
            }
            tree = self.random_tree();
        }
        log::warn!("could not find an unseen tree; accepting a duplicate");
        tree
    }

    fn random_tree(&mut self) -> ExpressionTree {
        let depth = self.rng.gen_range(INIT_DEPTH.0..=INIT_DEPTH.1);
        if self.rng.gen_bool(0.5) {
            self.pset.full(depth, &mut self.rng)
        } else {
            self.pset.grow(depth, &mut self.rng)
        }
    }

    fn initial_trees(&mut self) -> Vec<ExpressionTree> {
        let trees = self.pset.ramped_half_and_half(
            self.config.population_size,
            INIT_DEPTH.0,
            INIT_DEPTH.1,
            &mut self.rng,
        );
        trees
            .into_iter()
            .map(|t| if self.claim(&t) { t } else { self.fresh_tree() })
            .collect()
    }

    /// Produces two offspring from a selected pair, each with a never-seen key.
    fn breed(&mut self, a: &ExpressionTree, b: &ExpressionTree) -> [ExpressionTree; 2] {
        let max_depth = self.config.max_depth;
        let crossover = self.rng.gen::<f64>() < self.config.crossover_rate;
        let vary = |run: &mut Self, slot: usize| -> ExpressionTree {
            if crossover {
                let (x, y) = subtree_crossover(a, b, max_depth, &mut run.rng);
                if slot == 0 {
                    x
                } else {
                    y
                }
            } else {
                let parent = if slot == 0 { a } else { b };
                subtree_mutation(parent, &run.pset, max_depth, &mut run.rng)
            }
        };
        let mut children = Vec::with_capacity(2);
        if crossover {
            let (x, y) = subtree_crossover(a, b, max_depth, &mut self.rng);
            children.push(x);
            children.push(y);
        } else {
            children.push(subtree_mutation(a, &self.pset, max_depth, &mut self.rng));
            children.push(subtree_mutation(b, &self.pset, max_depth, &mut self.rng));
        }
        let mut out = Vec::with_capacity(2);
        for (slot, mut child) in children.into_iter().enumerate() {
            let mut accepted = self.claim(&child);
            for _ in 0..DEDUP_RETRIES {
                if accepted {
                    break;
                }
                child = vary(self, slot);
                accepted = self.claim(&child);
            }
            if !accepted {
                child = self.fresh_tree();
            }
            out.push(child);
        }
        let second = out.pop().expect("two children");
        let first = out.pop().expect("two children");
        [first, second]
    }

    fn record(&self, generation: usize, pop: &[Individual], elite: &Individual) -> Result<GenerationRecord, EngineError> {
        let val_pred = elite.predict(self.split.x_val.view())?;
        Ok(GenerationRecord {
            generation,
            best_train_error: elite.mean_case_error(),
            best_val_r2: r2_score(&val_pred, &self.split.y_val),
            mean_tree_size: pop.iter().map(|p| p.node_count() as f64).sum::<f64>() / pop.len() as f64,
            diversity: population_cosine_diversity(pop),
        })
    }
}

fn best_of(pop: &[Individual]) -> &Individual {
    pop.iter()
        .reduce(|best, p| if p.loocv_total < best.loocv_total { p } else { best })
        .expect("non-empty population")
}

/// Runs the GP loop on the training partition of `split` and scores the best
/// individual on its validation partition.
pub fn run_sr(
    split: &DatasetSplit,
    operator: &dyn SelectionOperator,
    config: &SRConfig,
) -> Result<SRResult, EngineError> {
    config.validate()?;
    let mut run = Run {
        split,
        config,
        pset: PrimitiveSet::new(split.n_features()),
        rng: ChaCha8Rng::seed_from_u64(config.seed),
        seen: HashSet::new(),
        evaluations: 0,
    };
    let trees = run.initial_trees();
    let mut population = run.evaluate(trees)?;
    let mut elite = best_of(&population).clone();
    let mut history = vec![run.record(0, &population, &elite)?];

    for generation in 1..=config.generations {
        let status = EvolutionStatus::new(generation - 1, config.generations);
        let selection_seed = run.rng.gen::<u64>();
        let mut pool: Vec<&dyn Selectable> = population.iter().map(|p| p as &dyn Selectable).collect();
        pool.push(&elite);
        let op_error = |source| EngineError::Operator {
            operator: operator.name(),
            generation,
            source,
        };
        let req = SelectionRequest::new(pool, config.population_size, status, selection_seed)
            .map_err(op_error)?;
        let picks = operator.select(&req).map_err(op_error)?;
        req.validate_output(&picks).map_err(op_error)?;

        let genome = |i: usize| {
            if i < population.len() {
                &population[i].genome
            } else {
                &elite.genome
            }
        };
        let mut offspring = Vec::with_capacity(config.population_size);
        for pair in picks.chunks(2) {
            let [x, y] = run.breed(genome(pair[0]), genome(pair[1]));
            offspring.push(x);
            offspring.push(y);
        }
        drop(req);
        population = run.evaluate(offspring)?;
        let candidate = best_of(&population);
        if candidate.loocv_total < elite.loocv_total {
            elite = candidate.clone();
        }
        history.push(run.record(generation, &population, &elite)?);
    }

    let validation_r2 = history.last().expect("initial record").best_val_r2;
    Ok(SRResult {
        best: elite,
        history,
        validation_r2,
        evaluations: run.evaluations,
        unique_genomes: run.seen.len(),
    })
}

/// Writes one JSON record per generation.
pub fn write_history(path: impl AsRef<Path>, history: &[GenerationRecord]) -> Result<(), EngineError> {
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    for record in history {
        serde_json::to_writer(&mut out, record).map_err(io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_history(path: impl AsRef<Path>) -> Result<Vec<GenerationRecord>, EngineError> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| EngineError::Io(e.into())))
        .collect()
}
