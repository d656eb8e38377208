//! Chat history, alias redaction and the agent base both specialized agents
//! (task decomposition and script generation) are built on.

mod alias;
mod history;

use std::sync::Arc;

pub use alias::{AliasError, AliasTable};
pub use history::{ChatEntry, ChatHistory, EntryGroup, HistoryError, Message, Role};

use crate::llm::{ChatProvider, CompletionRequest, ProviderError};

#[derive(Debug, thiserror::Error)]
pub enum AgentError {
    #[error(transparent)]
    History(#[from] HistoryError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

/// Model settings shared by every agent in a run.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSettings {
    pub model: String,
    pub temperature: Option<f64>,
}

impl Default for ModelSettings {
    fn default() -> Self {
        Self { model: crate::llm::DEFAULT_MODEL.into(), temperature: None }
    }
}

/// Owns one chat history and talks to a provider through the alias table.
///
/// Content is stored in private terms; redaction happens on the way out and
/// restoration on the way back in.
#[derive(Debug, Clone)]
pub struct Agent {
    history: ChatHistory,
    aliases: Arc<AliasTable>,
    settings: ModelSettings,
}

impl Agent {
    pub fn new(history: ChatHistory, aliases: Arc<AliasTable>, settings: ModelSettings) -> Self {
        Self { history, aliases, settings }
    }

    pub fn history(&self) -> &ChatHistory {
        &self.history
    }

    pub fn history_mut(&mut self) -> &mut ChatHistory {
        &mut self.history
    }

    pub fn aliases(&self) -> &AliasTable {
        &self.aliases
    }

    /// Appends `prompt` as a runtime user entry, sends the whole history and
    /// records the (restored) reply as a runtime assistant entry.
    pub fn ask(&mut self, provider: &dyn ChatProvider, prompt: &str) -> Result<String, AgentError> {
        self.history.append_runtime(Role::User, prompt)?;
        let request = CompletionRequest {
            model: self.settings.model.clone(),
            messages: self.history.render_messages(&self.aliases)?,
            temperature: self.settings.temperature,
        };
        let raw = provider.complete(&request)?;
        let reply = self.aliases.restore(&raw);
        self.history.append_runtime(Role::Assistant, reply.clone())?;
        Ok(reply)
    }
}
