use crate::codemetrics::{approx_token_count, effective_line_count};
use crate::host::HostCommand;
use crate::selection::{builtin_marker, Builtin, ScriptedOperator, SelectionOperator};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;
use std::{fs, io};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateKind {
    Builtin,
    Scripted,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "via", rename_all = "snake_case")]
pub enum Provenance {
    Init,
    Crossover { parents: [u64; 2] },
    Mutation { parent: u64 },
    Fallback,
}

pub fn classify_source(source: &str) -> CandidateKind {
    if builtin_marker(source).is_some() {
        CandidateKind::Builtin
    } else {
        CandidateKind::Scripted
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorCandidate {
    pub id: u64,
    pub source: String,
    pub kind: CandidateKind,
    /// Per-dataset validation R², clipped to [-1, 1]. Empty until evaluated.
    pub score_vector: Vec<f64>,
    pub fitness: f64,
    pub code_length: usize,
    pub approx_tokens: usize,
    pub generation_born: usize,
    pub provenance: Provenance,
}

impl OperatorCandidate {
    pub fn new(id: u64, source: String, generation_born: usize, provenance: Provenance) -> Self {
        Self {
            id,
            kind: classify_source(&source),
            code_length: effective_line_count(&source),
            approx_tokens: approx_token_count(&source),
            source,
            score_vector: Vec::new(),
            fitness: 0.0,
            generation_born,
            provenance,
        }
    }

    pub fn set_scores(&mut self, scores: Vec<f64>) {
        self.fitness = if scores.is_empty() {
            0.0
        } else {
            scores.iter().sum::<f64>() / scores.len() as f64
        };
        self.score_vector = scores;
    }

    pub fn is_evaluated(&self) -> bool {
        !self.score_vector.is_empty()
    }
}

/// Higher fitness first, then shorter code, then older id.
pub fn rank_order(a: &OperatorCandidate, b: &OperatorCandidate) -> Ordering {
    b.fitness
        .total_cmp(&a.fitness)
        .then(a.code_length.cmp(&b.code_length))
        .then(a.id.cmp(&b.id))
}

/// Index of the best candidate under [`rank_order`].
pub fn elite_index(pool: &[OperatorCandidate]) -> Option<usize> {
    (0..pool.len()).min_by(|&i, &j| rank_order(&pool[i], &pool[j]))
}

/// Turns candidates into runnable operators. Scripts are written under
/// `script_dir` and served by `host`.
#[derive(Clone, Debug)]
pub struct OperatorFactory {
    pub host: HostCommand,
    pub script_dir: PathBuf,
    pub timeout: Duration,
}

impl OperatorFactory {
    pub fn new(script_dir: impl Into<PathBuf>) -> Self {
        Self {
            host: HostCommand::default(),
            script_dir: script_dir.into(),
            timeout: Duration::from_secs(300),
        }
    }

    pub fn instantiate(&self, candidate: &OperatorCandidate) -> io::Result<Arc<dyn SelectionOperator>> {
        if let Some(builtin) = builtin_marker(&candidate.source).and_then(Builtin::from_name) {
            return Ok(Arc::new(builtin));
        }
        fs::create_dir_all(&self.script_dir)?;
        let path = self.script_dir.join(format!("candidate_{}.py", candidate.id));
        fs::write(&path, &candidate.source)?;
        Ok(Arc::new(
            ScriptedOperator::new(path, self.host.clone()).with_timeout(self.timeout),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selection::{builtin_source, FALLBACK_SOURCE};

    #[test]
    fn classification_and_metrics() {
        let c = OperatorCandidate::new(3, builtin_source("omni").unwrap().into(), 0, Provenance::Init);
        assert_eq!(c.kind, CandidateKind::Builtin);
        assert_eq!(c.code_length, effective_line_count(&c.source));
        let s = OperatorCandidate::new(4, FALLBACK_SOURCE.into(), 0, Provenance::Init);
        assert_eq!(s.kind, CandidateKind::Scripted);
        assert_eq!(s.code_length, 10);
    }

    #[test]
    fn fitness_is_mean_of_scores() {
        let mut c = OperatorCandidate::new(0, String::new(), 0, Provenance::Init);
        c.set_scores(vec![1.0, 0.0, -0.4]);
        assert!((c.fitness - 0.2).abs() < 1e-15);
    }

    #[test]
    fn factory_writes_scripts() {
        let dir = tempfile::tempdir().unwrap();
        let factory = OperatorFactory::new(dir.path());
        let c = OperatorCandidate::new(7, FALLBACK_SOURCE.into(), 0, Provenance::Fallback);
        let op = factory.instantiate(&c).unwrap();
        assert!(op.name().starts_with("scripted:"));
        assert!(dir.path().join("candidate_7.py").exists());
        let b = OperatorCandidate::new(8, crate::selection::tagged_fallback(), 0, Provenance::Fallback);
        assert_eq!(factory.instantiate(&b).unwrap().name(), "tournament3");
    }
}
