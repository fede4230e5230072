//! Engine side of the operator-host protocol.
//!
//! A host is a child process that loads one operator script and then answers
//! selection requests over stdio, one JSON document per line. After loading it
//! writes a single handshake line, `{"ready": true}`, or an error document
//! followed by exit code 2. Requests and responses then strictly alternate.
//! Timeouts are enforced here; the host never limits itself.

use crate::selection::{SelectionRequest, Selectable};
use serde::{Deserialize, Serialize};
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::Path;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;
use thiserror::Error;

/// Exit code a host uses when the script cannot be loaded.
pub const LOAD_FAILURE_EXIT: i32 = 2;

#[derive(Debug, Error)]
pub enum HostError {
    #[error("failed to start operator host `{program}`: {source}")]
    Spawn { program: String, source: io::Error },
    #[error("operator script failed to load ({kind}): {message}")]
    Load { kind: String, message: String },
    #[error("operator host timed out after {seconds:.1}s")]
    Timeout { seconds: f64 },
    #[error("operator host exited ({status}); stderr: {stderr}")]
    Exited { status: String, stderr: String },
    #[error("operator host protocol violation: {0}")]
    Protocol(String),
    #[error("operator raised {kind}: {message}")]
    Script { kind: String, message: String },
    #[error("operator host i/o: {0}")]
    Io(#[from] io::Error),
}

/// How to launch a host; the script path is appended as the last argument.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HostCommand {
    pub program: String,
    pub args: Vec<String>,
}

/// Environment variable holding a whitespace-separated host command line.
pub const HOST_ENV: &str = "METASR_OPERATOR_HOST";

impl Default for HostCommand {
    fn default() -> Self {
        std::env::var(HOST_ENV)
            .ok()
            .and_then(|line| Self::parse(&line))
            .unwrap_or_else(|| Self {
                program: "python3".into(),
                args: vec!["-m".into(), "operator_host".into()],
            })
    }
}

impl HostCommand {
    pub fn parse(line: &str) -> Option<Self> {
        let mut parts = line.split_whitespace().map(str::to_owned);
        let program = parts.next()?;
        Some(Self {
            program,
            args: parts.collect(),
        })
    }
}

#[derive(Serialize)]
struct WireIndividual<'a> {
    case_values: &'a [f64],
    predicted_values: &'a [f64],
    y: &'a [f64],
    nodes: usize,
    height: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireStatus {
    pub evolutionary_stage: f64,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    population: Vec<WireIndividual<'a>>,
    k: usize,
    status: WireStatus,
    seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireError {
    #[serde(rename = "type")]
    pub kind: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WireResponse {
    Selected { selected_indices: Vec<i64> },
    Failed { error: WireError },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Handshake {
    Ready { ready: bool },
    Failed { error: WireError },
}

/// Serializes a request as one line (no trailing newline).
pub fn encode_request(req: &SelectionRequest<'_>) -> String {
    let wire = WireRequest {
        population: req
            .population
            .iter()
            .map(|ind: &&dyn Selectable| WireIndividual {
                case_values: ind.case_values(),
                predicted_values: ind.predicted_values(),
                y: ind.target(),
                nodes: ind.node_count(),
                height: ind.height(),
            })
            .collect(),
        k: req.k,
        status: WireStatus {
            evolutionary_stage: req.status.stage,
        },
        seed: req.seed,
    };
    serde_json::to_string(&wire).expect("wire request serializes")
}

/// Parses a response line into indices, checking count and range.
pub fn decode_response(line: &str, k: usize, population: usize) -> Result<Vec<usize>, HostError> {
    let response: WireResponse = serde_json::from_str(line.trim())
        .map_err(|e| HostError::Protocol(format!("unparseable response ({e}): {}", preview(line))))?;
    match response {
        WireResponse::Failed { error } => Err(HostError::Script {
            kind: error.kind,
            message: error.message,
        }),
        WireResponse::Selected { selected_indices } => {
            if selected_indices.len() != k {
                return Err(HostError::Protocol(format!(
                    "expected {k} indices, got {}",
                    selected_indices.len()
                )));
            }
            selected_indices
                .into_iter()
                .map(|i| {
                    usize::try_from(i)
                        .ok()
                        .filter(|&i| i < population)
                        .ok_or_else(|| {
                            HostError::Protocol(format!(
                                "index {i} outside population of {population}"
                            ))
                        })
                })
                .collect()
        }
    }
}

fn preview(line: &str) -> String {
    line.chars().take(200).collect()
}

/// A running host process.
pub struct HostProcess {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<io::Result<String>>,
    stderr: Arc<Mutex<String>>,
}

impl HostProcess {
    /// Starts the host and waits for its handshake.
    pub fn spawn(command: &HostCommand, script: &Path, timeout: Duration) -> Result<Self, HostError> {
        let mut child = Command::new(&command.program)
            .args(&command.args)
            .arg(script)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|source| HostError::Spawn {
                program: command.program.clone(),
                source,
            })?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let mut stderr_pipe = child.stderr.take().expect("piped stderr");

        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let stderr = Arc::new(Mutex::new(String::new()));
        let sink = Arc::clone(&stderr);
        thread::spawn(move || {
            let mut buf = [0u8; 4096];
            while let Ok(n) = stderr_pipe.read(&mut buf) {
                if n == 0 {
                    break;
                }
                let mut text = sink.lock().unwrap_or_else(|e| e.into_inner());
                text.push_str(&String::from_utf8_lossy(&buf[..n]));
                if text.len() > 64 * 1024 {
                    let cut = text.len() - 32 * 1024;
                    let cut = (cut..text.len()).find(|&i| text.is_char_boundary(i)).unwrap_or(0);
                    text.drain(..cut);
                }
            }
        });

        let mut host = Self {
            child,
            stdin,
            lines,
            stderr,
        };
        let line = host.read_line(timeout)?;
        match serde_json::from_str::<Handshake>(line.trim()) {
            Ok(Handshake::Ready { ready: true }) => Ok(host),
            Ok(Handshake::Failed { error }) => Err(HostError::Load {
                kind: error.kind,
                message: error.message,
            }),
            _ => Err(HostError::Protocol(format!("bad handshake: {}", preview(&line)))),
        }
    }

    /// Sends one request line and waits for the matching response line.
    pub fn round_trip(&mut self, request: &str, timeout: Duration) -> Result<String, HostError> {
        self.stdin.write_all(request.as_bytes())?;
        self.stdin.write_all(b"\n")?;
        self.stdin.flush()?;
        self.read_line(timeout)
    }

    pub fn select(&mut self, req: &SelectionRequest<'_>, timeout: Duration) -> Result<Vec<usize>, HostError> {
        let line = self.round_trip(&encode_request(req), timeout)?;
        decode_response(&line, req.k, req.len())
    }

    fn read_line(&mut self, timeout: Duration) -> Result<String, HostError> {
        match self.lines.recv_timeout(timeout) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(e)) => Err(HostError::Io(e)),
            Err(RecvTimeoutError::Timeout) => {
                self.kill();
                Err(HostError::Timeout {
                    seconds: timeout.as_secs_f64(),
                })
            }
            Err(RecvTimeoutError::Disconnected) => Err(self.exit_error()),
        }
    }

    fn exit_error(&mut self) -> HostError {
        let status = self.child.wait();
        // Give the stderr reader a moment to drain.
        thread::sleep(Duration::from_millis(20));
        let stderr = self.stderr.lock().unwrap_or_else(|e| e.into_inner()).trim().to_owned();
        match status {
            Ok(s) if s.code() == Some(LOAD_FAILURE_EXIT) => HostError::Load {
                kind: "load_error".into(),
                message: stderr,
            },
            Ok(s) => HostError::Exited {
                status: s.to_string(),
                stderr,
            },
            Err(e) => HostError::Io(e),
        }
    }

    fn kill(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

impl Drop for HostProcess {
    fn drop(&mut self) {
        self.kill();
    }
}
