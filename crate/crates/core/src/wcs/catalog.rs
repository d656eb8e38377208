use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

const BUILTIN_CATALOG: &str = include_str!("../../assets/api_catalog.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ApiKind {
    Method,
    Property,
}

/// One script-visible operation or attribute of a workcell object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApiEntry {
    pub receiver: String,
    pub name: String,
    pub kind: ApiKind,
    #[serde(default)]
    pub params: Vec<String>,
    pub returns: String,
    #[serde(default)]
    pub doc: String,
}

#[derive(Debug, thiserror::Error)]
pub enum CatalogError {
    #[error("invalid API catalog: {0}")]
    Json(#[from] serde_json::Error),
    #[error("API catalog lists '{0}' twice")]
    Duplicate(String),
}

/// The signature catalog shared by the checker and the simulator.
///
/// Member names are unique across receivers, so a call site can be checked
/// without knowing the receiver's type.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiCatalog {
    entries: Vec<ApiEntry>,
}

impl ApiCatalog {
    pub fn builtin() -> Self {
        Self::from_json(BUILTIN_CATALOG).expect("bundled API catalog is valid")
    }

    pub fn from_json(text: &str) -> Result<Self, CatalogError> {
        Self::new(serde_json::from_str(text)?)
    }

    pub fn new(entries: Vec<ApiEntry>) -> Result<Self, CatalogError> {
        let mut seen = BTreeSet::new();
        for e in &entries {
            if !seen.insert(e.name.as_str()) {
                return Err(CatalogError::Duplicate(e.name.clone()));
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[ApiEntry] {
        &self.entries
    }

    pub fn get(&self, name: &str) -> Option<&ApiEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn method(&self, name: &str) -> Option<&ApiEntry> {
        self.get(name).filter(|e| e.kind == ApiKind::Method)
    }

    pub fn property(&self, name: &str) -> Option<&ApiEntry> {
        self.get(name).filter(|e| e.kind == ApiKind::Property)
    }

    /// Signature listing used as the API part of the script agent's context.
    pub fn render_context(&self) -> String {
        let mut out = String::from("Workcell scripting API (receiver.member):\n");
        for e in &self.entries {
            let sig = match e.kind {
                ApiKind::Method => format!("{}.{}({}) -> {}", e.receiver, e.name, e.params.join(", "), e.returns),
                ApiKind::Property => format!("{}.{}: {}", e.receiver, e.name, e.returns),
            };
            out.push_str(&format!("- {sig}\n    {}\n", e.doc));
        }
        out.push_str(
            "Builtins: pose(x, y, z, roll, pitch, yaw), translation(x, y, z), random_uniform(lo, hi), \
             len(x), str(x), abs(x), min(a, b, ...), max(a, b, ...), print(...), range(...) in for loops.\n\
             Exceptions: Exception, MotionException, CollisionError, GripperMismatch, GraspFault, StateError.\n",
        );
        out
    }
}
