use serde::{Deserialize, Serialize};

use super::alias::AliasTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

/// The three groups a history is partitioned into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryGroup {
    SystemGuidelines,
    TaskContext,
    Runtime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatEntry {
    pub role: Role,
    pub group: EntryGroup,
    pub content: String,
    pub seq: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum HistoryError {
    #[error("history is already bootstrapped")]
    AlreadyBootstrapped,
    #[error("history has not been bootstrapped")]
    NotBootstrapped,
}

/// Append-only chat record. Guidelines and task context are written once by
/// [`ChatHistory::bootstrap`]; everything after that is runtime traffic.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChatHistory {
    entries: Vec<ChatEntry>,
    bootstrapped: bool,
}

impl ChatHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bootstrap<G, C>(&mut self, guidelines: G, context: C) -> Result<(), HistoryError>
    where
        G: IntoIterator<Item = String>,
        C: IntoIterator<Item = (Role, String)>,
    {
        if self.bootstrapped || !self.entries.is_empty() {
            return Err(HistoryError::AlreadyBootstrapped);
        }
        for content in guidelines {
            self.push(Role::System, EntryGroup::SystemGuidelines, content);
        }
        for (role, content) in context {
            self.push(role, EntryGroup::TaskContext, content);
        }
        self.bootstrapped = true;
        Ok(())
    }

    pub fn append_runtime(&mut self, role: Role, content: impl Into<String>) -> Result<u64, HistoryError> {
        if !self.bootstrapped {
            return Err(HistoryError::NotBootstrapped);
        }
        Ok(self.push(role, EntryGroup::Runtime, content.into()))
    }

    fn push(&mut self, role: Role, group: EntryGroup, content: String) -> u64 {
        let seq = self.entries.last().map_or(1, |e| e.seq + 1);
        self.entries.push(ChatEntry { role, group, content, seq });
        seq
    }

    /// Every entry in sequence order with private terms replaced by aliases.
    pub fn render_messages(&self, aliases: &AliasTable) -> Result<Vec<Message>, HistoryError> {
        if !self.bootstrapped {
            return Err(HistoryError::NotBootstrapped);
        }
        Ok(self
            .entries
            .iter()
            .map(|e| Message { role: e.role, content: aliases.redact(&e.content) })
            .collect())
    }

    pub fn entries(&self) -> &[ChatEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_bootstrapped(&self) -> bool {
        self.bootstrapped
    }

    pub fn runtime(&self) -> impl Iterator<Item = &ChatEntry> {
        self.entries.iter().filter(|e| e.group == EntryGroup::Runtime)
    }

    pub fn task_context(&self) -> impl Iterator<Item = &ChatEntry> {
        self.entries.iter().filter(|e| e.group == EntryGroup::TaskContext)
    }

    /// True when no runtime entry precedes a non-runtime entry and sequence
    /// numbers strictly increase.
    pub fn is_well_partitioned(&self) -> bool {
        let seq_ok = self.entries.windows(2).all(|w| w[0].seq < w[1].seq);
        let first_runtime = self
            .entries
            .iter()
            .position(|e| e.group == EntryGroup::Runtime)
            .unwrap_or(self.entries.len());
        let groups_ok = self.entries[first_runtime..].iter().all(|e| e.group == EntryGroup::Runtime);
        let guidelines_first = self
            .entries
            .windows(2)
            .all(|w| !(w[0].group == EntryGroup::TaskContext && w[1].group == EntryGroup::SystemGuidelines));
        seq_ok && groups_ok && guidelines_first
    }
}
