use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::AssemblySpec;
use crate::wcs::extract_code_block;

/// The closed catalog of robot behavior primitives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Behavior {
    Detect,
    Pick,
    Move,
    Place,
    Insert,
}

impl Behavior {
    pub const ALL: [Behavior; 5] = [Behavior::Detect, Behavior::Pick, Behavior::Move, Behavior::Place, Behavior::Insert];

    pub fn as_str(self) -> &'static str {
        match self {
            Behavior::Detect => "Detect",
            Behavior::Pick => "Pick",
            Behavior::Move => "Move",
            Behavior::Place => "Place",
            Behavior::Insert => "Insert",
        }
    }

    /// Lowercase directory name used by the example library.
    pub fn dir_name(self) -> &'static str {
        match self {
            Behavior::Detect => "detect",
            Behavior::Pick => "pick",
            Behavior::Move => "move",
            Behavior::Place => "place",
            Behavior::Insert => "insert",
        }
    }

    pub fn parse(label: &str) -> Option<Behavior> {
        Self::ALL.into_iter().find(|b| b.as_str().eq_ignore_ascii_case(label.trim()))
    }
}

impl fmt::Display for Behavior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubtaskStatus {
    Pending,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subtask {
    pub ordinal: usize,
    pub description: String,
    pub behavior: Behavior,
    pub parts: Vec<String>,
    pub status: SubtaskStatus,
    /// Terminal error of the last failed attempt at this subtask.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub last_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubtaskPlan {
    pub source_task: String,
    pub subtasks: Vec<Subtask>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("every subtask in the plan has been processed")]
pub struct PlanExhausted;

impl SubtaskPlan {
    pub fn len(&self) -> usize {
        self.subtasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subtasks.is_empty()
    }

    pub fn all_done(&self) -> bool {
        self.subtasks.iter().all(|s| s.status == SubtaskStatus::Done)
    }

    /// The lowest-ordinal pending subtask, with the error left by an earlier
    /// attempt at it.
    pub fn get_next(&self) -> Result<(&Subtask, Behavior, Option<&str>), PlanExhausted> {
        self.subtasks
            .iter()
            .find(|s| s.status == SubtaskStatus::Pending)
            .map(|s| (s, s.behavior, s.last_error.as_deref()))
            .ok_or(PlanExhausted)
    }

    pub fn subtask(&self, ordinal: usize) -> Option<&Subtask> {
        ordinal.checked_sub(1).and_then(|i| self.subtasks.get(i))
    }

    pub fn mark_done(&mut self, ordinal: usize) {
        if let Some(s) = ordinal.checked_sub(1).and_then(|i| self.subtasks.get_mut(i)) {
            s.status = SubtaskStatus::Done;
            s.last_error = None;
        }
    }

    pub fn mark_failed(&mut self, ordinal: usize, error: impl Into<String>) {
        if let Some(s) = ordinal.checked_sub(1).and_then(|i| self.subtasks.get_mut(i)) {
            s.status = SubtaskStatus::Failed;
            s.last_error = Some(error.into());
        }
    }

    /// The plan in the JSON format the decomposer answers with.
    pub fn to_plan_json(&self) -> String {
        let entries: Vec<PlanEntry> = self
            .subtasks
            .iter()
            .map(|s| PlanEntry {
                subtask: s.description.clone(),
                behavior: s.behavior.as_str().to_string(),
                parts: s.parts.clone(),
            })
            .collect();
        serde_json::to_string_pretty(&entries).expect("plan entries serialize")
    }
}

/// One element of the decomposer's JSON answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanEntry {
    pub subtask: String,
    pub behavior: String,
    pub parts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlanError {
    #[error("plan is not in the required format at {location}: {message}")]
    Parse { location: String, message: String, raw: String },
    #[error("subtask {ordinal} uses unknown behavior '{behavior}'")]
    UnknownBehavior { ordinal: usize, behavior: String },
    #[error("subtask {ordinal} names unknown part '{part}'")]
    UnknownPart { ordinal: usize, part: String },
}

impl PlanError {
    fn parse(location: impl Into<String>, message: impl Into<String>, raw: &str) -> Self {
        PlanError::Parse { location: location.into(), message: message.into(), raw: raw.to_string() }
    }
}

/// Strictly parses a plan: a JSON array of `{subtask, behavior, parts}`
/// objects, optionally wrapped in a fenced code block. Ordinals follow array
/// position.
pub fn parse_plan(text: &str) -> Result<SubtaskPlan, PlanError> {
    if text.trim().is_empty() {
        return Err(PlanError::parse("$", "the response is empty", text));
    }
    let body = extract_code_block(text).map_err(|e| PlanError::parse("$", e.to_string(), text))?;
    let mut de = serde_json::Deserializer::from_str(body.trim());
    let entries: Vec<PlanEntry> = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let location = if path == "." { "$".to_string() } else { format!("${path}") };
        PlanError::parse(location, e.into_inner().to_string(), text)
    })?;
    de.end().map_err(|e| PlanError::parse("$", e.to_string(), text))?;
    let mut subtasks = Vec::with_capacity(entries.len());
    for (i, entry) in entries.into_iter().enumerate() {
        let ordinal = i + 1;
        if entry.subtask.trim().is_empty() {
            return Err(PlanError::parse(format!("$[{i}].subtask"), "description is empty", text));
        }
        if let Some(j) = entry.parts.iter().position(|p| p.trim().is_empty()) {
            return Err(PlanError::parse(format!("$[{i}].parts[{j}]"), "part name is empty", text));
        }
        let behavior = Behavior::parse(&entry.behavior)
            .ok_or_else(|| PlanError::UnknownBehavior { ordinal, behavior: entry.behavior.clone() })?;
        subtasks.push(Subtask {
            ordinal,
            description: entry.subtask.trim().to_string(),
            behavior,
            parts: entry.parts.iter().map(|p| p.trim().to_string()).collect(),
            status: SubtaskStatus::Pending,
            last_error: None,
        });
    }
    Ok(SubtaskPlan { source_task: String::new(), subtasks })
}

/// Resolves every part reference against the assembly, rewriting generic
/// (GLD) names to the canonical part name.
pub fn resolve_parts(plan: &mut SubtaskPlan, assembly: &AssemblySpec) -> Result<(), PlanError> {
    for s in &mut plan.subtasks {
        for part in &mut s.parts {
            if assembly.part(part).is_some() {
                continue;
            }
            let mut by_gld = assembly.parts.iter().filter(|p| p.gld.eq_ignore_ascii_case(part));
            match (by_gld.next(), by_gld.next()) {
                (Some(p), None) => *part = p.name.clone(),
                _ => return Err(PlanError::UnknownPart { ordinal: s.ordinal, part: part.clone() }),
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlanWarning {
    PickNotReleased { ordinal: usize, part: String },
    InsertNotAdjacent { ordinal: usize, part: String, target: String },
    SubtaskCount { count: usize, min: usize, max: usize },
}

impl fmt::Display for PlanWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanWarning::PickNotReleased { ordinal, part } => {
                write!(f, "subtask {ordinal} picks {part} but no later subtask places or inserts it")
            }
            PlanWarning::InsertNotAdjacent { ordinal, part, target } => {
                write!(f, "subtask {ordinal} inserts {part} into {target}, which are not adjacent in the assembly")
            }
            PlanWarning::SubtaskCount { count, min, max } => {
                write!(f, "plan has {count} subtasks, outside the expected range {min}..={max}")
            }
        }
    }
}

/// Soft checks on a parsed plan. Ordering problems are reported, never fixed.
pub fn validate_plan(plan: &SubtaskPlan, assembly: &AssemblySpec) -> Vec<PlanWarning> {
    let mut warnings = Vec::new();
    for (i, s) in plan.subtasks.iter().enumerate() {
        match s.behavior {
            Behavior::Pick => {
                for part in &s.parts {
                    let released = plan.subtasks[i + 1..].iter().any(|later| {
                        matches!(later.behavior, Behavior::Place | Behavior::Insert)
                            && later.parts.first() == Some(part)
                    });
                    if !released {
                        warnings.push(PlanWarning::PickNotReleased { ordinal: s.ordinal, part: part.clone() });
                    }
                }
            }
            Behavior::Insert => {
                if let [part, target, ..] = s.parts.as_slice() {
                    if !assembly.are_adjacent(part, target) {
                        warnings.push(PlanWarning::InsertNotAdjacent {
                            ordinal: s.ordinal,
                            part: part.clone(),
                            target: target.clone(),
                        });
                    }
                }
            }
            _ => {}
        }
    }
    let n = assembly.parts.len();
    let (min, max) = (2 * n, 8 * n);
    let count = plan.subtasks.len();
    if count < min || count > max {
        warnings.push(PlanWarning::SubtaskCount { count, min, max });
    }
    warnings
}
