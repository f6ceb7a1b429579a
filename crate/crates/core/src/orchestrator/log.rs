use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::proof_state::NodeId;

/// One line of the JSON-lines run log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    /// RFC 3339, UTC.
    pub timestamp: String,
    pub node: NodeId,
    pub action: String,
    pub outcome: String,
}

impl LogEntry {
    pub fn now(node: NodeId, action: &str, outcome: &str) -> Self {
        Self {
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
            node,
            action: action.to_string(),
            outcome: outcome.to_string(),
        }
    }
}

/// Appends entries to a file; a no-op without one. Write errors are logged
/// once and then ignored so a full disk does not stop a run.
pub struct RunLog {
    out: Option<BufWriter<File>>,
}

impl RunLog {
    pub fn open(path: Option<&Path>) -> Self {
        let out = path.and_then(|p| match OpenOptions::new().create(true).append(true).open(p) {
            Ok(f) => Some(BufWriter::new(f)),
            Err(e) => {
                tracing::warn!(path = %p.display(), error = %e, "run log not opened");
                None
            }
        });
        Self { out }
    }

    pub fn write(&mut self, entry: &LogEntry) {
        let Some(out) = self.out.as_mut() else { return };
        let line = serde_json::to_string(entry).expect("log entry serializes");
        if let Err(e) = writeln!(out, "{line}").and_then(|_| out.flush()) {
            tracing::warn!(error = %e, "run log write failed; disabling");
            self.out = None;
        }
    }
}

/// Parse a run log back into entries, skipping blank lines.
pub fn read_run_log(text: &str) -> Result<Vec<LogEntry>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}
