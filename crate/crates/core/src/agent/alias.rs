//! Private-term ↔ public-alias substitution applied at the provider boundary.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum AliasError {
    #[error("empty private term or alias")]
    Empty,
    #[error("alias '{0}' is used for more than one term")]
    DuplicateAlias(String),
    #[error("alias '{alias}' collides with private term '{term}'")]
    Collision { alias: String, term: String },
    #[error("cannot read alias table: {0}")]
    Io(String),
    #[error("alias table must be a flat JSON object of strings: {0}")]
    Format(String),
}

/// Bijective map from private terms to public aliases.
///
/// Replacement is plain-substring and longest-match-first, so CAD names with
/// hyphens and digits are matched whole.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AliasTable {
    forward: Vec<(String, String)>,
    backward: Vec<(String, String)>,
}

impl AliasTable {
    pub fn from_pairs<I, K, V>(pairs: I) -> Result<Self, AliasError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        let map: BTreeMap<String, String> =
            pairs.into_iter().map(|(k, v)| (k.into(), v.into())).collect();
        let mut aliases = HashSet::new();
        for (term, alias) in &map {
            if term.is_empty() || alias.is_empty() {
                return Err(AliasError::Empty);
            }
            if !aliases.insert(alias.as_str()) {
                return Err(AliasError::DuplicateAlias(alias.clone()));
            }
        }
        for alias in map.values() {
            for term in map.keys() {
                if alias.contains(term.as_str()) || term.contains(alias.as_str()) {
                    return Err(AliasError::Collision { alias: alias.clone(), term: term.clone() });
                }
            }
            for other in map.values() {
                if other != alias && other.contains(alias.as_str()) {
                    return Err(AliasError::Collision { alias: alias.clone(), term: other.clone() });
                }
            }
        }
        let mut forward: Vec<(String, String)> = map.into_iter().collect();
        let mut backward: Vec<(String, String)> =
            forward.iter().map(|(k, v)| (v.clone(), k.clone())).collect();
        // longest first; ties broken lexically for determinism
        let by_len = |a: &(String, String), b: &(String, String)| {
            b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0))
        };
        forward.sort_by(by_len);
        backward.sort_by(by_len);
        Ok(Self { forward, backward })
    }

    /// Loads a sidecar file; a missing file yields the identity table.
    pub fn from_file(path: &Path) -> Result<Self, AliasError> {
        if !path.exists() {
            return Ok(Self::default());
        }
        let text = std::fs::read_to_string(path).map_err(|e| AliasError::Io(e.to_string()))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, AliasError> {
        let map: BTreeMap<String, String> =
            serde_json::from_str(text).map_err(|e| AliasError::Format(e.to_string()))?;
        Self::from_pairs(map)
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn private_terms(&self) -> impl Iterator<Item = &str> {
        self.forward.iter().map(|(k, _)| k.as_str())
    }

    pub fn alias_of(&self, term: &str) -> Option<&str> {
        self.forward.iter().find(|(k, _)| k == term).map(|(_, v)| v.as_str())
    }

    pub fn redact(&self, text: &str) -> String {
        replace_longest(text, &self.forward)
    }

    pub fn restore(&self, text: &str) -> String {
        replace_longest(text, &self.backward)
    }
}

/// Single left-to-right pass; `pairs` must be sorted longest key first.
fn replace_longest(text: &str, pairs: &[(String, String)]) -> String {
    if pairs.is_empty() {
        return text.to_string();
    }
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    'outer: while !rest.is_empty() {
        for (from, to) in pairs {
            if let Some(tail) = rest.strip_prefix(from.as_str()) {
                out.push_str(to);
                rest = tail;
                continue 'outer;
            }
        }
        let ch = rest.chars().next().expect("nonempty");
        out.push(ch);
        rest = &rest[ch.len_utf8()..];
    }
    out
}
