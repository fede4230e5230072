//! Synthetic smoke test run on every new candidate before real evaluation.

use crate::host::HostError;
use crate::selection::{EvolutionStatus, Phenotype, SelectionError, SelectionOperator, SelectionRequest};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::{mpsc, Arc};
use std::thread;
use std::time::{Duration, Instant};

pub const GATE_POPULATION: usize = 100;
pub const GATE_CASES: usize = 100;
pub const GATE_K: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    Syntax,
    RuntimeError,
    Timeout,
    RelativeSlowness,
    BadOutput,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum GateOutcome {
    Pass { seconds: f64 },
    Reject { reason: RejectReason, detail: String },
}

impl GateOutcome {
    pub fn passed(&self) -> bool {
        matches!(self, GateOutcome::Pass { .. })
    }

    pub fn reason(&self) -> Option<RejectReason> {
        match self {
            GateOutcome::Pass { .. } => None,
            GateOutcome::Reject { reason, .. } => Some(*reason),
        }
    }

    fn reject(reason: RejectReason, detail: impl Into<String>) -> Self {
        GateOutcome::Reject {
            reason,
            detail: detail.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GateConfig {
    /// Absolute wall-time limit per candidate.
    pub timeout_secs: f64,
    /// Reject candidates slower than this multiple of the batch's fastest.
    pub slowness_factor: f64,
    /// Lower bound on the fastest runtime used for the relative check, so that
    /// microsecond-scale native runs do not make every script look slow.
    pub runtime_floor_secs: f64,
    pub seed: u64,
}

impl Default for GateConfig {
    fn default() -> Self {
        Self {
            timeout_secs: 300.0,
            slowness_factor: 100.0,
            runtime_floor_secs: 0.01,
            seed: 0,
        }
    }
}

/// Case A: random integer errors and predictions in [1, 10]. Case B: every
/// value equal to one integer from the same range.
pub fn gate_cases(seed: u64) -> [Vec<Phenotype>; 2] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ints = |n: usize, rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(1..=10) as f64).collect()
    };
    let y: Arc<[f64]> = ints(GATE_CASES, &mut rng).into();
    let case_a = (0..GATE_POPULATION)
        .map(|_| Phenotype {
            case_values: ints(GATE_CASES, &mut rng),
            predicted_values: ints(GATE_CASES, &mut rng),
            y: y.clone(),
            node_count: rng.gen_range(1..=10),
            height: rng.gen_range(1..=10),
        })
        .collect();
    let c = rng.gen_range(1..=10);
    let constant: Arc<[f64]> = vec![c as f64; GATE_CASES].into();
    let case_b = (0..GATE_POPULATION)
        .map(|_| Phenotype {
            case_values: constant.to_vec(),
            predicted_values: constant.to_vec(),
            y: constant.clone(),
            node_count: c,
            height: c,
        })
        .collect();
    [case_a, case_b]
}

fn classify(error: &SelectionError) -> RejectReason {
    match error {
        SelectionError::BadOutput(_) => RejectReason::BadOutput,
        SelectionError::Host(HostError::Load { kind, .. }) if kind.contains("Syntax") || kind.contains("Indentation") => {
            RejectReason::Syntax
        }
        SelectionError::Host(HostError::Timeout { .. }) => RejectReason::Timeout,
        SelectionError::Host(HostError::Protocol(_)) => RejectReason::BadOutput,
        _ => RejectReason::RuntimeError,
    }
}

fn run_cases(operator: &dyn SelectionOperator, seed: u64) -> Result<(), SelectionError> {
    let [a, b] = gate_cases(seed);
    for (pop, stage) in [(&a, 0.0), (&b, 1.0)] {
        let req = SelectionRequest::from_slice(pop, GATE_K, EvolutionStatus::at_stage(stage), seed)?;
        let picks = operator.select(&req)?;
        req.validate_output(&picks)?;
    }
    Ok(())
}

/// Runs both cases with the absolute timeout only.
pub fn gate_one(operator: Arc<dyn SelectionOperator>, config: &GateConfig) -> GateOutcome {
    let (tx, rx) = mpsc::channel();
    let seed = config.seed;
    let spawned = thread::Builder::new().name("gate".into()).spawn(move || {
        let start = Instant::now();
        let result = run_cases(operator.as_ref(), seed);
        let _ = tx.send((result, start.elapsed()));
    });
    if let Err(e) = spawned {
        return GateOutcome::reject(RejectReason::RuntimeError, e.to_string());
    }
    let limit = Duration::from_secs_f64(config.timeout_secs.max(0.0));
    match rx.recv_timeout(limit) {
        Ok((Ok(()), elapsed)) if elapsed <= limit => GateOutcome::Pass {
            seconds: elapsed.as_secs_f64(),
        },
        Ok((Ok(()), elapsed)) => GateOutcome::reject(
            RejectReason::Timeout,
            format!("took {:.3}s", elapsed.as_secs_f64()),
        ),
        Ok((Err(e), _)) => GateOutcome::reject(classify(&e), e.to_string()),
        Err(mpsc::RecvTimeoutError::Timeout) => GateOutcome::reject(
            RejectReason::Timeout,
            format!("exceeded {:.1}s", config.timeout_secs),
        ),
        Err(mpsc::RecvTimeoutError::Disconnected) => {
            GateOutcome::reject(RejectReason::RuntimeError, "operator panicked")
        }
    }
}

/// Marks passing outcomes slower than `factor` times the fastest pass.
pub fn apply_relative_filter(outcomes: &mut [GateOutcome], factor: f64, floor_secs: f64) {
    let fastest = outcomes
        .iter()
        .filter_map(|o| match o {
            GateOutcome::Pass { seconds } => Some(*seconds),
            _ => None,
        })
        .fold(f64::INFINITY, f64::min);
    if !fastest.is_finite() {
        return;
    }
    let limit = factor * fastest.max(floor_secs);
    for outcome in outcomes.iter_mut() {
        if let GateOutcome::Pass { seconds } = *outcome {
            if seconds > limit {
                *outcome = GateOutcome::reject(
                    RejectReason::RelativeSlowness,
                    format!("{seconds:.4}s against a limit of {limit:.4}s"),
                );
            }
        }
    }
}

/// Gates a batch concurrently, then applies the relative check.
pub fn synthetic_gate(operators: &[Arc<dyn SelectionOperator>], config: &GateConfig) -> Vec<GateOutcome> {
    let mut outcomes: Vec<GateOutcome> = thread::scope(|scope| {
        let handles: Vec<_> = operators
            .iter()
            .map(|op| scope.spawn(|| gate_one(op.clone(), config)))
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| GateOutcome::reject(RejectReason::RuntimeError, "gate panicked"))
            })
            .collect()
    });
    apply_relative_filter(&mut outcomes, config.slowness_factor, config.runtime_floor_secs);
    outcomes
}
