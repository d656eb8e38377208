//! Prompt texts and few-shot examples for both agents.
//!
//! A library directory has this layout:
//!
//! ```text
//! prompts/{tda_role,tda_rules,sga_role,sga_rules}.md
//! tda/<nn>_<name>.json            {"task": ..., "plan": [...]}
//! <behavior>/<nn>_<name>.wcs      example script
//! <behavior>/<nn>_<name>.md       what the example demonstrates
//! ```
//!
//! Examples are kept in file-name order. A copy of the default library is
//! compiled into the binary.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::tda::{Behavior, PlanEntry};

#[derive(Debug, thiserror::Error)]
pub enum LibraryError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prompts {
    pub tda_role: String,
    pub tda_rules: String,
    pub sga_role: String,
    pub sga_rules: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScriptExample {
    pub behavior: Behavior,
    pub name: String,
    pub description: String,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanExample {
    #[serde(skip)]
    pub name: String,
    pub task: String,
    pub plan: Vec<PlanEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Library {
    pub prompts: Prompts,
    pub plans: Vec<PlanExample>,
    pub scripts: Vec<ScriptExample>,
}

macro_rules! asset {
    ($path:literal) => {
        ($path, include_str!(concat!("../assets/library/", $path)))
    };
}

const BUILTIN: &[(&str, &str)] = &[
    asset!("prompts/tda_role.md"),
    asset!("prompts/tda_rules.md"),
    asset!("prompts/sga_role.md"),
    asset!("prompts/sga_rules.md"),
    asset!("tda/01_insert_axle.json"),
    asset!("tda/02_mount_base.json"),
    asset!("detect/01_detect_part.wcs"),
    asset!("detect/01_detect_part.md"),
    asset!("detect/02_detect_all.wcs"),
    asset!("detect/02_detect_all.md"),
    asset!("pick/01_pick_from_kit.wcs"),
    asset!("pick/01_pick_from_kit.md"),
    asset!("pick/02_pick_with_recovery.wcs"),
    asset!("pick/02_pick_with_recovery.md"),
    asset!("move/01_move_above_station.wcs"),
    asset!("move/01_move_above_station.md"),
    asset!("move/02_move_relative.wcs"),
    asset!("move/02_move_relative.md"),
    asset!("place/01_place_at_design.wcs"),
    asset!("place/01_place_at_design.md"),
    asset!("insert/01_insert_into_part.wcs"),
    asset!("insert/01_insert_into_part.md"),
];

impl Library {
    /// The library compiled into the crate.
    pub fn builtin() -> Self {
        Self::from_files(BUILTIN.iter().map(|&(p, text)| (p.to_string(), text.to_string())).collect())
            .expect("built-in library is valid")
    }

    /// Loads a library directory (see the module docs for the layout).
    pub fn from_dir(dir: &Path) -> Result<Self, LibraryError> {
        let mut files = Vec::new();
        for sub in ["prompts", "tda"].into_iter().chain(Behavior::ALL.iter().map(|b| b.dir_name())) {
            let path = dir.join(sub);
            if !path.is_dir() {
                continue;
            }
            let entries = fs::read_dir(&path).map_err(|source| LibraryError::Io { path: path.clone(), source })?;
            for entry in entries {
                let entry = entry.map_err(|source| LibraryError::Io { path: path.clone(), source })?;
                let file = entry.path();
                if !file.is_file() {
                    continue;
                }
                let text = fs::read_to_string(&file).map_err(|source| LibraryError::Io { path: file.clone(), source })?;
                let name = entry.file_name().to_string_lossy().into_owned();
                files.push((format!("{sub}/{name}"), text));
            }
        }
        Self::from_files(files).map_err(|e| match e {
            LibraryError::Invalid { path, message } => LibraryError::Invalid { path: dir.join(path), message },
            other => other,
        })
    }

    /// Builds a library from `(relative path, contents)` pairs.
    pub fn from_files(mut files: Vec<(String, String)>) -> Result<Self, LibraryError> {
        files.sort_by(|a, b| a.0.cmp(&b.0));
        let lookup = |rel: &str| files.iter().find(|(p, _)| p == rel).map(|(_, t)| t.trim().to_string());
        let prompt = |name: &str| {
            let rel = format!("prompts/{name}.md");
            lookup(&rel).ok_or_else(|| LibraryError::Invalid { path: rel.into(), message: "missing prompt".into() })
        };
        let prompts = Prompts {
            tda_role: prompt("tda_role")?,
            tda_rules: prompt("tda_rules")?,
            sga_role: prompt("sga_role")?,
            sga_rules: prompt("sga_rules")?,
        };
        let mut plans = Vec::new();
        let mut scripts = Vec::new();
        for (rel, text) in &files {
            let (dir, file) = rel.split_once('/').unwrap_or(("", rel));
            if dir == "tda" {
                let Some(stem) = file.strip_suffix(".json") else { continue };
                let mut example: PlanExample = serde_json::from_str(text)
                    .map_err(|e| LibraryError::Invalid { path: rel.into(), message: e.to_string() })?;
                example.name = stem.to_string();
                plans.push(example);
                continue;
            }
            let Some(behavior) = Behavior::ALL.into_iter().find(|b| b.dir_name() == dir) else { continue };
            let Some(stem) = file.strip_suffix(".wcs") else { continue };
            let description = lookup(&format!("{dir}/{stem}.md")).ok_or_else(|| LibraryError::Invalid {
                path: rel.into(),
                message: "example has no paired .md description".into(),
            })?;
            scripts.push(ScriptExample {
                behavior,
                name: stem.to_string(),
                description,
                source: text.trim_end().to_string(),
            });
        }
        Ok(Self { prompts, plans, scripts })
    }

    pub fn examples_for(&self, behavior: Behavior) -> Vec<&ScriptExample> {
        self.scripts.iter().filter(|s| s.behavior == behavior).collect()
    }

    /// A copy with every script example for `behavior` removed.
    pub fn without_examples(&self, behavior: Behavior) -> Self {
        let mut copy = self.clone();
        copy.scripts.retain(|s| s.behavior != behavior);
        copy
    }
}
