//! Prompt assembly and a chat-completion gateway with live, record, and
//! replay modes.
//!
//! A transcript is a JSON-lines file of prompt/response records keyed by the
//! SHA-256 of the prompt. Replay answers each prompt with the next unused
//! record for its hash, so identical prompts replay in recorded order.

mod mock;
mod prompt;

pub use mock::MockGenerator;
pub use prompt::{
    build_prompt, extract_code, format_score, PromptAssets, PromptBundle, PromptConfig,
    PromptError, PromptKind, PromptMetadata, PromptParent, ScoreFeedback,
};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, HashMap};
use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, SystemTime, UNIX_EPOCH};
use thiserror::Error;

pub const ENV_ENDPOINT: &str = "METASR_LLM_ENDPOINT";
pub const ENV_MODEL: &str = "METASR_LLM_MODEL";
pub const ENV_API_KEY: &str = "METASR_LLM_API_KEY";
const DEFAULT_ENDPOINT: &str = "https://api.openai.com/v1/chat/completions";
const DEFAULT_MODEL: &str = "gpt-4.1-mini";

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("chat request failed: {0}")]
    Network(String),
    #[error("malformed chat response: {0}")]
    Malformed(String),
    #[error("no recorded response for prompt hash {hash} (occurrence {occurrence})")]
    ReplayMiss { hash: String, occurrence: usize },
    #[error("transcript {path}: {source}")]
    Transcript { path: String, source: io::Error },
    #[error("transcript {path} line {line}: {message}")]
    TranscriptParse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("network access is disabled in replay mode")]
    Offline,
}

/// Hex SHA-256 over the system prompt, a NUL separator, and the user prompt.
pub fn prompt_hash(system: &str, user: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(system.as_bytes());
    hasher.update([0u8]);
    hasher.update(user.as_bytes());
    hex::encode(hasher.finalize())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub prompt_hash: String,
    pub system: String,
    pub user: String,
    pub response: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub model: String,
}

pub fn read_transcript(path: &Path) -> Result<Vec<TranscriptRecord>, LlmError> {
    let text = fs::read_to_string(path).map_err(|source| LlmError::Transcript {
        path: path.display().to_string(),
        source,
    })?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| LlmError::TranscriptParse {
                path: path.display().to_string(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

fn append_record(path: &Path, record: &TranscriptRecord) -> Result<(), LlmError> {
    let wrap = |source| LlmError::Transcript {
        path: path.display().to_string(),
        source,
    };
    let mut file = OpenOptions::new().create(true).append(true).open(path).map_err(wrap)?;
    let mut line = serde_json::to_string(record).expect("record serializes");
    line.push('\n');
    file.write_all(line.as_bytes()).map_err(wrap)?;
    file.flush().map_err(wrap)
}

/// Something that can answer a chat prompt.
pub trait Transport: Send {
    fn chat(&mut self, system: &str, user: &str) -> Result<String, LlmError>;
    fn model(&self) -> String;
}

/// OpenAI-compatible chat-completions endpoint.
#[derive(Clone, Debug)]
pub struct HttpTransport {
    pub endpoint: String,
    pub model: String,
    pub api_key: Option<String>,
    /// `None` leaves sampling temperature to the provider default.
    pub temperature: Option<f64>,
    pub timeout: Duration,
}

impl HttpTransport {
    /// Reads endpoint, model, and key from the environment. The key falls
    /// back to `OPENAI_API_KEY`.
    pub fn from_env() -> Self {
        Self {
            endpoint: std::env::var(ENV_ENDPOINT).unwrap_or_else(|_| DEFAULT_ENDPOINT.into()),
            model: std::env::var(ENV_MODEL).unwrap_or_else(|_| DEFAULT_MODEL.into()),
            api_key: std::env::var(ENV_API_KEY)
                .or_else(|_| std::env::var("OPENAI_API_KEY"))
                .ok(),
            temperature: None,
            timeout: Duration::from_secs(300),
        }
    }
}

impl Transport for HttpTransport {
    fn chat(&mut self, system: &str, user: &str) -> Result<String, LlmError> {
        let mut body = serde_json::json!({
            "model": self.model,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
        });
        if let Some(t) = self.temperature {
            body["temperature"] = t.into();
        }
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(self.timeout))
            .build()
            .into();
        let mut request = agent.post(&self.endpoint);
        if let Some(key) = &self.api_key {
            request = request.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = request
            .send_json(&body)
            .map_err(|e| LlmError::Network(e.to_string()))?;
        let value: serde_json::Value = response
            .body_mut()
            .read_json()
            .map_err(|e| LlmError::Malformed(e.to_string()))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_owned)
            .ok_or_else(|| LlmError::Malformed(format!("no message content in {value}")))
    }

    fn model(&self) -> String {
        self.model.clone()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GatewayMode {
    Live,
    Record,
    Replay,
}

impl FromStr for GatewayMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "live" => Ok(Self::Live),
            "record" => Ok(Self::Record),
            "replay" => Ok(Self::Replay),
            other => Err(format!("unknown mode `{other}` (live, record, replay)")),
        }
    }
}

pub struct LlmGateway {
    mode: GatewayMode,
    transport: Option<Box<dyn Transport>>,
    transcript: Option<PathBuf>,
    recorded: HashMap<String, Vec<String>>,
    consumed: BTreeMap<String, usize>,
    network_calls: usize,
}

impl LlmGateway {
    pub fn live(transport: Box<dyn Transport>) -> Self {
        Self::new(GatewayMode::Live, Some(transport), None, HashMap::new())
    }

    /// Live calls, each appended to `transcript`.
    pub fn record(transport: Box<dyn Transport>, transcript: impl Into<PathBuf>) -> Self {
        Self::new(GatewayMode::Record, Some(transport), Some(transcript.into()), HashMap::new())
    }

    /// Answers from a transcript only. A missing or unreadable file is an error.
    pub fn replay(transcript: impl Into<PathBuf>) -> Result<Self, LlmError> {
        Self::replay_with_transport(transcript, None)
    }

    /// Replay with a transport attached that must never be used.
    pub fn replay_with_transport(
        transcript: impl Into<PathBuf>,
        transport: Option<Box<dyn Transport>>,
    ) -> Result<Self, LlmError> {
        let path = transcript.into();
        let mut recorded: HashMap<String, Vec<String>> = HashMap::new();
        for record in read_transcript(&path)? {
            recorded.entry(record.prompt_hash).or_default().push(record.response);
        }
        Ok(Self::new(GatewayMode::Replay, transport, Some(path), recorded))
    }

    fn new(
        mode: GatewayMode,
        transport: Option<Box<dyn Transport>>,
        transcript: Option<PathBuf>,
        recorded: HashMap<String, Vec<String>>,
    ) -> Self {
        Self {
            mode,
            transport,
            transcript,
            recorded,
            consumed: BTreeMap::new(),
            network_calls: 0,
        }
    }

    pub fn mode(&self) -> GatewayMode {
        self.mode
    }

    /// Number of transport calls made so far.
    pub fn network_calls(&self) -> usize {
        self.network_calls
    }

    /// How many times each prompt hash has been answered.
    pub fn position(&self) -> &BTreeMap<String, usize> {
        &self.consumed
    }

    pub fn restore_position(&mut self, position: BTreeMap<String, usize>) {
        self.consumed = position;
    }

    pub fn complete(&mut self, bundle: &PromptBundle) -> Result<String, LlmError> {
        let hash = prompt_hash(&bundle.system, &bundle.user);
        let occurrence = self.consumed.get(&hash).copied().unwrap_or(0);
        let response = match self.mode {
            GatewayMode::Replay => self
                .recorded
                .get(&hash)
                .and_then(|queue| queue.get(occurrence))
                .cloned()
                .ok_or_else(|| LlmError::ReplayMiss {
                    hash: hash.clone(),
                    occurrence,
                })?,
            GatewayMode::Live | GatewayMode::Record => {
                let transport = self.transport.as_mut().ok_or(LlmError::Offline)?;
                self.network_calls += 1;
                let response = transport.chat(&bundle.system, &bundle.user)?;
                if let (GatewayMode::Record, Some(path)) = (self.mode, &self.transcript) {
                    let record = TranscriptRecord {
                        prompt_hash: hash.clone(),
                        system: bundle.system.clone(),
                        user: bundle.user.clone(),
                        response: response.clone(),
                        timestamp: SystemTime::now()
                            .duration_since(UNIX_EPOCH)
                            .map(|d| d.as_secs())
                            .unwrap_or(0),
                        model: transport.model(),
                    };
                    append_record(path, &record)?;
                }
                response
            }
        };
        self.consumed.insert(hash, occurrence + 1);
        Ok(response)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    struct Counting {
        calls: Arc<AtomicUsize>,
    }

    impl Transport for Counting {
        fn chat(&mut self, _system: &str, user: &str) -> Result<String, LlmError> {
            let n = self.calls.fetch_add(1, Ordering::SeqCst);
            Ok(format!("reply {n} to {}", user.len()))
        }
        fn model(&self) -> String {
            "counting".into()
        }
    }

    fn bundle(user: &str) -> PromptBundle {
        PromptBundle {
            kind: PromptKind::Init,
            system: "sys".into(),
            user: user.into(),
            metadata: PromptMetadata::default(),
        }
    }

    #[test]
    fn hash_separates_system_and_user() {
        assert_ne!(prompt_hash("ab", "c"), prompt_hash("a", "bc"));
        assert_eq!(prompt_hash("a", "b").len(), 64);
    }

    #[test]
    fn record_then_replay_without_network() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        let calls = Arc::new(AtomicUsize::new(0));
        let mut rec = LlmGateway::record(Box::new(Counting { calls: calls.clone() }), &path);
        let prompts = ["same", "same", "other", "same"];
        let recorded: Vec<String> = prompts.iter().map(|p| rec.complete(&bundle(p)).unwrap()).collect();
        assert_eq!(calls.load(Ordering::SeqCst), 4);

        let replay_calls = Arc::new(AtomicUsize::new(0));
        let mut rep = LlmGateway::replay_with_transport(
            &path,
            Some(Box::new(Counting { calls: replay_calls.clone() })),
        )
        .unwrap();
        let replayed: Vec<String> = prompts.iter().map(|p| rep.complete(&bundle(p)).unwrap()).collect();
        assert_eq!(recorded, replayed);
        assert_eq!(replay_calls.load(Ordering::SeqCst), 0);
        assert_eq!(rep.network_calls(), 0);

        match rep.complete(&bundle("same")) {
            Err(LlmError::ReplayMiss { hash, occurrence }) => {
                assert_eq!(hash, prompt_hash("sys", "same"));
                assert_eq!(occurrence, 3);
            }
            other => panic!("expected miss, got {other:?}"),
        }
    }

    #[test]
    fn replay_position_restores() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        let mut rec = LlmGateway::record(Box::new(Counting { calls: Arc::default() }), &path);
        let first = rec.complete(&bundle("p")).unwrap();
        let second = rec.complete(&bundle("p")).unwrap();
        assert_ne!(first, second);

        let mut a = LlmGateway::replay(&path).unwrap();
        a.complete(&bundle("p")).unwrap();
        let mut b = LlmGateway::replay(&path).unwrap();
        b.restore_position(a.position().clone());
        assert_eq!(b.complete(&bundle("p")).unwrap(), second);
    }

    #[test]
    fn missing_transcript_is_an_error() {
        assert!(matches!(
            LlmGateway::replay("/nonexistent/transcript.jsonl"),
            Err(LlmError::Transcript { .. })
        ));
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("replay".parse::<GatewayMode>().unwrap(), GatewayMode::Replay);
        assert!("bogus".parse::<GatewayMode>().is_err());
    }
}
