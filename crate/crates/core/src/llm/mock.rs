//! Offline stand-in for a chat model.
//!
//! Replies with builtin operator listings so that every generated candidate
//! runs natively. Parent listings are recognised by their `# builtin:` line.

use super::{LlmError, Transport};
use crate::selection::{builtin_marker, builtin_source, BUILTIN_NAMES};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct MockGenerator {
    rng: ChaCha8Rng,
    /// Extra non-comment lines appended per reply, inclusive range.
    inflation: Option<(usize, usize)>,
    /// Probability of a reply with no code in it.
    prose_rate: f64,
}

impl MockGenerator {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            inflation: None,
            prose_rate: 0.0,
        }
    }

    /// Each reply grows its parent by `lo..=hi` padding lines.
    pub fn with_inflation(mut self, lo: usize, hi: usize) -> Self {
        self.inflation = Some((lo, hi.max(lo)));
        self
    }

    pub fn with_prose_rate(mut self, rate: f64) -> Self {
        self.prose_rate = rate;
        self
    }

    fn random_builtin(&mut self) -> &'static str {
        BUILTIN_NAMES.choose(&mut self.rng).expect("non-empty")
    }
}

/// Contents of every fenced block in `text`.
fn fenced_blocks(text: &str) -> Vec<String> {
    let mut blocks = Vec::new();
    let mut current: Option<String> = None;
    for line in text.lines() {
        if line.trim_start().starts_with("```") {
            match current.take() {
                Some(block) => blocks.push(block),
                None => current = Some(String::new()),
            }
        } else if let Some(block) = current.as_mut() {
            block.push_str(line);
            block.push('\n');
        }
    }
    blocks
}

impl Transport for MockGenerator {
    fn chat(&mut self, _system: &str, user: &str) -> Result<String, LlmError> {
        if self.rng.gen_bool(self.prose_rate.clamp(0.0, 1.0)) {
            return Ok("I would need more context before writing this operator.".into());
        }
        let parents: Vec<String> = fenced_blocks(user)
            .into_iter()
            .filter(|b| builtin_marker(b).is_some())
            .collect();
        let inherited = match parents.len() {
            0 => None,
            1 => self.rng.gen_bool(0.5).then(|| parents[0].clone()),
            _ => parents.choose(&mut self.rng).cloned(),
        };
        let mut source = match (inherited, self.inflation) {
            (Some(parent), Some(_)) => parent,
            (Some(parent), None) => {
                let name = builtin_marker(&parent).expect("filtered on marker");
                builtin_source(name).expect("known builtin").to_owned()
            }
            (None, _) => builtin_source(self.random_builtin()).expect("known builtin").to_owned(),
        };
        if let Some((lo, hi)) = self.inflation {
            if !source.ends_with('\n') {
                source.push('\n');
            }
            let tag: u32 = self.rng.gen();
            for i in 0..self.rng.gen_range(lo..=hi) {
                source.push_str(&format!("_pad_{tag:08x}_{i} = {i}\n"));
            }
        }
        Ok(format!("Here is the operator.\n\n```python\n{source}```\n"))
    }

    fn model(&self) -> String {
        "mock".into()
    }
}
