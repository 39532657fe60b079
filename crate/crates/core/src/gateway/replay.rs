//! Record/replay decorator for chat transports. Recording appends
//! `{request_sha256, response_text}` JSON lines; replaying answers from the
//! store and never touches the network.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ChatRequest, ChatTransport, GatewayError};

#[derive(Debug, Serialize, Deserialize)]
struct StoreEntry {
    request_sha256: String,
    response_text: String,
}

fn load_store(path: &Path) -> Result<HashMap<String, String>, GatewayError> {
    let file = File::open(path)
        .map_err(|e| GatewayError::Store(format!("cannot open {}: {e}", path.display())))?;
    let mut entries = HashMap::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| GatewayError::Store(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: StoreEntry = serde_json::from_str(&line).map_err(|e| {
            GatewayError::Store(format!("bad store line {}: {e}", lineno + 1))
        })?;
        entries.insert(entry.request_sha256, entry.response_text);
    }
    Ok(entries)
}

/// Pass-through transport that records every (request, response) pair.
pub struct RecordingTransport<T: ChatTransport> {
    inner: T,
    path: PathBuf,
}

impl<T: ChatTransport> RecordingTransport<T> {
    pub fn new(inner: T, path: impl Into<PathBuf>) -> Self {
        RecordingTransport {
            inner,
            path: path.into(),
        }
    }
}

impl<T: ChatTransport> ChatTransport for RecordingTransport<T> {
    fn complete(&mut self, request: &ChatRequest) -> Result<String, GatewayError> {
        let response = self.inner.complete(request)?;
        let entry = StoreEntry {
            request_sha256: request.sha256(),
            response_text: response.clone(),
        };
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(|e| GatewayError::Store(format!("cannot append {}: {e}", self.path.display())))?;
        let line = serde_json::to_string(&entry).expect("store entry serializes");
        writeln!(file, "{line}").map_err(|e| GatewayError::Store(e.to_string()))?;
        Ok(response)
    }
}

/// Offline transport answering solely from a recorded store.
pub struct ReplayTransport {
    entries: HashMap<String, String>,
}

impl ReplayTransport {
    /// Requires an existing store file.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, GatewayError> {
        Ok(ReplayTransport {
            entries: load_store(path.as_ref())?,
        })
    }
}

impl ChatTransport for ReplayTransport {
    fn complete(&mut self, request: &ChatRequest) -> Result<String, GatewayError> {
        let hash = request.sha256();
        self.entries
            .get(&hash)
            .cloned()
            .ok_or(GatewayError::NoRecordedResponse(hash))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::ScriptedTransport;

    #[test]
    fn record_then_replay_is_identical_and_offline() {
        let dir = tempfile::tempdir().unwrap();
        let store = dir.path().join("replies.jsonl");
        let request = ChatRequest::new("sys", "propose something");

        let recorded = {
            let inner = ScriptedTransport::replies(vec!["reply with \"quotes\"\nand newline"]);
            let mut recording = RecordingTransport::new(inner, &store);
            recording.complete(&request).unwrap()
        };

        let mut replay = ReplayTransport::open(&store).unwrap();
        let replayed = replay.complete(&request).unwrap();
        assert_eq!(recorded, replayed);

        // Byte-exact round trip through the store.
        assert_eq!(replayed, "reply with \"quotes\"\nand newline");
    }

    #[test]
    fn replay_of_unseen_request_errors() {
        let dir = tempfile::tempdir().unwrap();
        let store = dir.path().join("replies.jsonl");
        std::fs::write(&store, "").unwrap();
        let mut replay = ReplayTransport::open(&store).unwrap();
        let err = replay.complete(&ChatRequest::new("s", "u")).unwrap_err();
        assert!(matches!(err, GatewayError::NoRecordedResponse(_)));
    }

    #[test]
    fn replay_requires_existing_store() {
        assert!(matches!(
            ReplayTransport::open("/nonexistent/store.jsonl"),
            Err(GatewayError::Store(_))
        ));
    }
}
