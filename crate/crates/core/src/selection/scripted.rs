use super::{SelectionError, SelectionOperator, SelectionRequest};
pub use crate::host::HostCommand;
use crate::host::{HostError, HostProcess};
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::Duration;

const DEFAULT_TIMEOUT: Duration = Duration::from_secs(300);

/// An operator script served by an out-of-process host. The host is started
/// lazily and restarted after any failure other than a script exception.
pub struct ScriptedOperator {
    path: PathBuf,
    command: HostCommand,
    timeout: Duration,
    process: Mutex<Option<HostProcess>>,
}

impl ScriptedOperator {
    pub fn new(path: impl Into<PathBuf>, command: HostCommand) -> Self {
        Self {
            path: path.into(),
            command,
            timeout: DEFAULT_TIMEOUT,
            process: Mutex::new(None),
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn path(&self) -> &std::path::Path {
        &self.path
    }
}

impl SelectionOperator for ScriptedOperator {
    fn name(&self) -> String {
        format!("scripted:{}", self.path.display())
    }

    fn select(&self, req: &SelectionRequest<'_>) -> Result<Vec<usize>, SelectionError> {
        let mut guard = self.process.lock().unwrap_or_else(|e| e.into_inner());
        if guard.is_none() {
            *guard = Some(HostProcess::spawn(&self.command, &self.path, self.timeout)?);
        }
        let host = guard.as_mut().expect("host present");
        match host.select(req, self.timeout) {
            Ok(indices) => Ok(indices),
            Err(e @ HostError::Script { .. }) => Err(e.into()),
            Err(e) => {
                *guard = None;
                Err(e.into())
            }
        }
    }
}
