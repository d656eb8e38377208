use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::model::Pose;
use crate::sga::{AttemptOutcome, ScriptAttempt};
use crate::sim::WorkcellState;
use crate::tda::{Behavior, Subtask, SubtaskStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Complete,
    Aborted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptSummary {
    pub attempt_no: usize,
    pub outcome: AttemptOutcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl From<&ScriptAttempt> for AttemptSummary {
    fn from(a: &ScriptAttempt) -> Self {
        Self { attempt_no: a.attempt_no, outcome: a.outcome, error_kind: a.error_kind.clone(), error: a.error.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubtaskReport {
    pub ordinal: usize,
    pub description: String,
    pub behavior: Behavior,
    pub status: SubtaskStatus,
    pub attempts: Vec<AttemptSummary>,
    /// Committed script, relative to the output directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub script: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartReport {
    pub pose: Pose,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub held_by: Option<String>,
    /// Distance from the part's design pose in the anchored assembly, meters.
    pub design_error_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub task: String,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abort_reason: Option<String>,
    pub plan: Vec<Subtask>,
    pub warnings: Vec<String>,
    /// Processed subtasks in commit order.
    pub subtasks: Vec<SubtaskReport>,
    pub committed_scripts: Vec<PathBuf>,
    pub provider_calls: usize,
    pub final_parts: BTreeMap<String, PartReport>,
    pub wall_time_ms: u64,
}

impl RunReport {
    /// The report with timing zeroed, for comparing runs.
    pub fn without_timing(&self) -> RunReport {
        RunReport { wall_time_ms: 0, ..self.clone() }
    }

    pub fn is_complete(&self) -> bool {
        self.status == RunStatus::Complete
    }

    pub fn max_design_error(&self) -> f64 {
        self.final_parts.values().map(|p| p.design_error_m).fold(0.0, f64::max)
    }

    pub fn attempts_for(&self, ordinal: usize) -> Option<&[AttemptSummary]> {
        self.subtasks.iter().find(|s| s.ordinal == ordinal).map(|s| s.attempts.as_slice())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_markdown(&self) -> String {
        let mut md = String::new();
        let status = match self.status {
            RunStatus::Complete => "complete",
            RunStatus::Aborted => "aborted",
        };
        let _ = writeln!(md, "# Run report\n");
        let _ = writeln!(md, "- Task: {}", self.task);
        let _ = writeln!(md, "- Status: {status}");
        if let Some(reason) = &self.abort_reason {
            let _ = writeln!(md, "- Abort reason: {}", reason.lines().next().unwrap_or(""));
        }
        let _ = writeln!(md, "- Subtasks: {} planned, {} committed", self.plan.len(), self.committed_scripts.len());
        let _ = writeln!(md, "- Provider calls: {}", self.provider_calls);
        let _ = writeln!(md, "- Wall time: {} ms", self.wall_time_ms);
        if !self.warnings.is_empty() {
            let _ = writeln!(md, "\n## Plan warnings\n");
            for w in &self.warnings {
                let _ = writeln!(md, "- {w}");
            }
        }
        let _ = writeln!(md, "\n## Attempts\n");
        let _ = writeln!(md, "| # | Subtask | Behavior | Attempts | Outcome | Errors |");
        let _ = writeln!(md, "|---|---------|----------|----------|---------|--------|");
        for s in &self.subtasks {
            let outcome = s.attempts.last().map(|a| format!("{:?}", a.outcome)).unwrap_or_default();
            let errors: Vec<&str> = s.attempts.iter().filter_map(|a| a.error_kind.as_deref()).collect();
            let _ = writeln!(
                md,
                "| {} | {} | {} | {} | {} | {} |",
                s.ordinal,
                s.description.replace('|', "\\|"),
                s.behavior,
                s.attempts.len(),
                outcome,
                errors.join(", ")
            );
        }
        let _ = writeln!(md, "\n## Final part poses\n");
        let _ = writeln!(md, "| Part | Position (m) | Held by | Design error (m) |");
        let _ = writeln!(md, "|------|--------------|---------|------------------|");
        for (name, p) in &self.final_parts {
            let [x, y, z] = p.pose.xyz();
            let _ = writeln!(
                md,
                "| {name} | ({x:.4}, {y:.4}, {z:.4}) | {} | {:.2e} |",
                p.held_by.as_deref().unwrap_or("-"),
                p.design_error_m
            );
        }
        md
    }

    pub fn write(&self, out_dir: &Path) -> std::io::Result<()> {
        fs::write(out_dir.join("report.json"), self.to_json() + "\n")?;
        fs::write(out_dir.join("report.md"), self.to_markdown())
    }
}

pub(crate) fn final_parts(state: &WorkcellState) -> BTreeMap<String, PartReport> {
    state
        .parts()
        .iter()
        .map(|(name, p)| {
            let design_error_m = state.design_pose(name).map(|d| d.distance(&p.pose)).unwrap_or(f64::INFINITY);
            let held_by = p.held_by.as_ref().map(|h| h.robot.clone());
            (name.clone(), PartReport { pose: p.pose, held_by, design_error_m })
        })
        .collect()
}
