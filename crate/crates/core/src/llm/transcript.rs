use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{ChatProvider, CompletionRequest, HttpProvider, ProviderConfig, ProviderError};

/// One canned exchange. Every `expect_contains` substring must occur in the
/// concatenated prompt for the entry to be served.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    #[serde(default)]
    pub expect_contains: Vec<String>,
    pub response: String,
}

pub fn load_transcript(path: &Path) -> Result<Vec<TranscriptEntry>, ProviderError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ProviderError::Transcript(format!("{}: {e}", path.display())))?;
    parse_transcript(&text)
}

pub fn parse_transcript(text: &str) -> Result<Vec<TranscriptEntry>, ProviderError> {
    let entries: Vec<TranscriptEntry> =
        serde_json::from_str(text).map_err(|e| ProviderError::Transcript(e.to_string()))?;
    if let Some(i) = entries.iter().position(|e| e.response.is_empty()) {
        return Err(ProviderError::Transcript(format!("entry {i} has an empty response")));
    }
    Ok(entries)
}

/// Serves transcript entries strictly in order.
pub struct ReplayProvider {
    inner: Mutex<ReplayState>,
}

struct ReplayState {
    entries: Vec<TranscriptEntry>,
    next: usize,
}

impl ReplayProvider {
    pub fn new(entries: Vec<TranscriptEntry>) -> Result<Self, ProviderError> {
        if let Some(i) = entries.iter().position(|e| e.response.is_empty()) {
            return Err(ProviderError::Transcript(format!("entry {i} has an empty response")));
        }
        Ok(Self { inner: Mutex::new(ReplayState { entries, next: 0 }) })
    }

    pub fn from_file(path: &Path) -> Result<Self, ProviderError> {
        Self::new(load_transcript(path)?)
    }

    pub fn remaining(&self) -> usize {
        let state = self.inner.lock().expect("replay lock poisoned");
        state.entries.len() - state.next
    }
}

impl ChatProvider for ReplayProvider {
    fn name(&self) -> &str {
        "replay"
    }

    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError> {
        let mut state = self.inner.lock().expect("replay lock poisoned");
        let index = state.next;
        let entry = state
            .entries
            .get(index)
            .ok_or(ProviderError::TranscriptExhausted { consumed: index })?;
        let prompt = request.concatenated();
        if let Some(missing) = entry.expect_contains.iter().find(|s| !prompt.contains(s.as_str())) {
            return Err(ProviderError::TranscriptMismatch { index, missing: missing.clone() });
        }
        let response = entry.response.clone();
        state.next += 1;
        Ok(response)
    }

    fn requires_ordered_calls(&self) -> bool {
        true
    }
}

/// Live HTTP calls, each appended to a transcript file that replays the session.
pub struct RecordProvider {
    http: Box<dyn ChatProvider>,
    path: PathBuf,
    recorded: Mutex<Vec<TranscriptEntry>>,
}

impl RecordProvider {
    pub fn new(config: ProviderConfig) -> Result<Self, ProviderError> {
        let path = config
            .transcript
            .clone()
            .ok_or_else(|| ProviderError::Config("record needs a transcript path".into()))?;
        Ok(Self::with_backend(Box::new(HttpProvider::new(config)?), path))
    }

    /// Records around an arbitrary backend.
    pub fn with_backend(http: Box<dyn ChatProvider>, path: PathBuf) -> Self {
        Self { http, path, recorded: Mutex::new(Vec::new()) }
    }
}

impl ChatProvider for RecordProvider {
    fn name(&self) -> &str {
        "record"
    }

    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError> {
        let response = self.http.complete(request)?;
        let mut recorded = self.recorded.lock().expect("record lock poisoned");
        let anchor = request.messages.last().map(|m| m.content.clone()).unwrap_or_default();
        recorded.push(TranscriptEntry {
            expect_contains: if anchor.is_empty() { vec![] } else { vec![anchor] },
            response: response.clone(),
        });
        let text = serde_json::to_string_pretty(&*recorded).expect("transcript serializes");
        std::fs::write(&self.path, text)
            .map_err(|e| ProviderError::Transcript(format!("{}: {e}", self.path.display())))?;
        Ok(response)
    }

    fn requires_ordered_calls(&self) -> bool {
        true
    }
}
