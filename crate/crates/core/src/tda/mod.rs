//! Task decomposition: turns a natural-language task into an ordered plan of
//! behavior-labeled subtasks.

mod plan;

use std::sync::Arc;

pub use plan::{
    parse_plan, resolve_parts, validate_plan, Behavior, PlanEntry, PlanError, PlanExhausted, PlanWarning, Subtask,
    SubtaskPlan, SubtaskStatus,
};

use crate::agent::{Agent, AgentError, AliasTable, ChatHistory, HistoryError, ModelSettings, Role};
use crate::library::{Library, PlanExample};
use crate::llm::ChatProvider;
use crate::model::AssemblySpec;

pub const DEFAULT_MAX_REASKS: usize = 2;

#[derive(Debug, thiserror::Error)]
pub enum TdaError {
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error("the example library has no task decomposition examples")]
    NoExamples,
}

impl From<HistoryError> for TdaError {
    fn from(e: HistoryError) -> Self {
        TdaError::Agent(e.into())
    }
}

fn render_part_list(assembly: &AssemblySpec) -> String {
    let mut out = String::from("Parts (use these names exactly):\n");
    for p in &assembly.parts {
        out.push_str(&format!("- {}\n", p.name));
    }
    out.trim_end().to_string()
}

fn render_behaviors(behaviors: &[Behavior]) -> String {
    let names: Vec<&str> = behaviors.iter().map(|b| b.as_str()).collect();
    format!("Behaviors: {}", names.join(", "))
}

fn render_examples(examples: &[PlanExample]) -> String {
    let mut out = String::from("Examples:");
    for ex in examples {
        let lines: Vec<String> =
            ex.plan.iter().map(|e| format!("  {}", serde_json::to_string(e).expect("plan entry serializes"))).collect();
        out.push_str(&format!("\n\nTask: {}\nPlan:\n```json\n[\n{}\n]\n```", ex.task, lines.join(",\n")));
    }
    out
}

/// Bootstraps a decomposer history: role and rules as guidelines, then the
/// assembly, the part list, the behavior list and the examples, in that order.
pub fn build_tda_context(
    assembly: &AssemblySpec,
    behaviors: &[Behavior],
    examples: &[PlanExample],
    library: &Library,
) -> Result<ChatHistory, TdaError> {
    if examples.is_empty() {
        return Err(TdaError::NoExamples);
    }
    let mut history = ChatHistory::new();
    history.bootstrap(
        [library.prompts.tda_role.clone(), library.prompts.tda_rules.clone()],
        [
            (Role::User, assembly.render_context()),
            (Role::User, render_part_list(assembly)),
            (Role::User, render_behaviors(behaviors)),
            (Role::User, render_examples(examples)),
        ],
    )?;
    Ok(history)
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    pub plan: SubtaskPlan,
    pub warnings: Vec<PlanWarning>,
    /// Extra requests made because an answer could not be parsed.
    pub reasks: usize,
}

pub struct TaskDecomposer {
    agent: Agent,
    assembly: Arc<AssemblySpec>,
    max_reasks: usize,
}

impl TaskDecomposer {
    pub fn new(
        assembly: Arc<AssemblySpec>,
        library: &Library,
        aliases: Arc<AliasTable>,
        settings: ModelSettings,
    ) -> Result<Self, TdaError> {
        let history = build_tda_context(&assembly, &Behavior::ALL, &library.plans, library)?;
        Ok(Self { agent: Agent::new(history, aliases, settings), assembly, max_reasks: DEFAULT_MAX_REASKS })
    }

    pub fn with_max_reasks(mut self, max_reasks: usize) -> Self {
        self.max_reasks = max_reasks;
        self
    }

    pub fn history(&self) -> &ChatHistory {
        self.agent.history()
    }

    /// Asks for a plan. An unparseable answer is fed back and asked again, up
    /// to the re-ask limit; unknown behaviors and parts fail immediately.
    pub fn decompose(&mut self, provider: &dyn ChatProvider, task: &str) -> Result<Decomposition, TdaError> {
        let mut prompt = format!("Task: {task}");
        let mut reasks = 0;
        loop {
            let reply = self.agent.ask(provider, &prompt)?;
            match parse_plan(&reply) {
                Ok(mut plan) => {
                    plan.source_task = task.to_string();
                    resolve_parts(&mut plan, &self.assembly)?;
                    let warnings = validate_plan(&plan, &self.assembly);
                    for w in &warnings {
                        tracing::warn!("{w}");
                    }
                    return Ok(Decomposition { plan, warnings, reasks });
                }
                Err(e @ PlanError::Parse { .. }) if reasks < self.max_reasks => {
                    reasks += 1;
                    tracing::info!("re-asking for the plan: {e}");
                    prompt = format!(
                        "Your answer could not be used: {e}\nAnswer again with only the JSON array described in the rules."
                    );
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
}
