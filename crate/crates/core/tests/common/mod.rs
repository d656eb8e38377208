#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use asmgen_core::llm::{ChatProvider, ReplayProvider, TranscriptEntry};
use asmgen_core::orchestrator::RunConfig;

pub mod oracles;

pub fn assets() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("assets")
}

pub fn fixture(name: &str) -> PathBuf {
    assets().join("fixtures").join(name)
}

pub fn transcript_path(name: &str) -> PathBuf {
    assets().join("transcripts").join(name)
}

pub fn transcript(name: &str) -> Vec<TranscriptEntry> {
    asmgen_core::llm::load_transcript(&transcript_path(name)).expect("transcript loads")
}

pub fn replay(entries: Vec<TranscriptEntry>) -> Arc<dyn ChatProvider> {
    Arc::new(ReplayProvider::new(entries).expect("valid transcript"))
}

pub fn truck_config(task: &str, out: &std::path::Path) -> RunConfig {
    RunConfig::new(fixture("truck_assembly.json"), fixture("truck_workcell.json"), task, out)
}

pub fn plan_entry(json: &str) -> TranscriptEntry {
    TranscriptEntry { expect_contains: vec![], response: json.to_string() }
}
