//! Script generation: one agent per subtask writes a script, runs it and
//! repairs it from the error it produced until it works.

use std::fs::{self, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::agent::{Agent, AgentError, AliasTable, ChatHistory, HistoryError, ModelSettings, Role};
use crate::library::Library;
use crate::llm::ChatProvider;
use crate::model::{AssemblySpec, WorkcellSpec};
use crate::sim::{run_script, Expectation, RunTrace, RuntimeScriptError, SimHandle, WorkcellState};
use crate::tda::{Behavior, Subtask};
use crate::wcs::{self, extract_code_block, ApiCatalog, ExtractError, WcsScript};

pub const DEFAULT_MAX_ATTEMPTS: usize = 5;
pub const ATTEMPTS_LOG: &str = "attempts.jsonl";

#[derive(Debug, thiserror::Error)]
pub enum SgaError {
    #[error("the example library has no {0} example")]
    MissingExample(Behavior),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("subtask {ordinal} still fails after {} attempts", attempts.len())]
    AttemptsExhausted { ordinal: usize, attempts: Vec<ScriptAttempt> },
}

impl From<HistoryError> for SgaError {
    fn from(e: HistoryError) -> Self {
        SgaError::Agent(e.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttemptOutcome {
    CheckFailed,
    RuntimeFailed,
    Succeeded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptAttempt {
    pub subtask: usize,
    pub attempt_no: usize,
    pub outcome: AttemptOutcome,
    /// Exception or error type, e.g. `CheckError` or `GripperMismatch`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_kind: Option<String>,
    /// The feedback text given to the model for the next attempt.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Saved file, relative to the output directory.
    pub path: PathBuf,
    pub source: String,
}

impl ScriptAttempt {
    pub fn succeeded(&self) -> bool {
        self.outcome == AttemptOutcome::Succeeded
    }
}

/// Somewhere a checked script can be run.
pub trait ScriptRunner {
    fn run(
        &mut self,
        script: &Arc<WcsScript>,
        source: &Arc<str>,
        expect: Option<&Expectation>,
    ) -> Result<RunTrace, RuntimeScriptError>;
}

impl ScriptRunner for SimHandle {
    fn run(
        &mut self,
        script: &Arc<WcsScript>,
        source: &Arc<str>,
        expect: Option<&Expectation>,
    ) -> Result<RunTrace, RuntimeScriptError> {
        SimHandle::run(self, script.clone(), source.clone(), expect.cloned())
    }
}

impl ScriptRunner for WorkcellState {
    fn run(
        &mut self,
        script: &Arc<WcsScript>,
        source: &Arc<str>,
        expect: Option<&Expectation>,
    ) -> Result<RunTrace, RuntimeScriptError> {
        run_script(script, source, self, expect)
    }
}

/// The effect a behavior must have for its script to count as successful.
pub fn effect_check(subtask: &Subtask, tolerance: f64) -> Option<Expectation> {
    let part = subtask.parts.first().cloned();
    match subtask.behavior {
        Behavior::Detect => part.map(|part| Expectation::Detected { part }),
        Behavior::Pick => part.map(|part| Expectation::PartHeld { part }),
        Behavior::Move => Some(Expectation::Moved),
        Behavior::Place | Behavior::Insert => part.map(|part| Expectation::PartAtDesign {
            part,
            relative_to: subtask.parts.get(1).cloned(),
            tolerance,
        }),
    }
}

fn slug(text: &str) -> String {
    text.chars().map(|c| if c.is_alphanumeric() { c.to_ascii_lowercase() } else { '_' }).collect()
}

/// File name for a subtask's script, e.g. `003_pick_pick_kingpin_bolt.wcs`.
pub fn script_file_name(subtask: &Subtask) -> String {
    format!("{:03}_{}_{}.wcs", subtask.ordinal, subtask.behavior.dir_name(), slug(&subtask.description))
}

/// Writes `source` to the subtask's script file, replacing earlier attempts.
pub fn save(out_dir: &Path, subtask: &Subtask, source: &str) -> Result<PathBuf, SgaError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| SgaError::Io { path, source }
    };
    fs::create_dir_all(out_dir).map_err(io(out_dir))?;
    let path = out_dir.join(script_file_name(subtask));
    let mut text = source.to_string();
    if !text.ends_with('\n') && !text.is_empty() {
        text.push('\n');
    }
    fs::write(&path, text).map_err(io(&path))?;
    Ok(path)
}

/// Appends attempts to a JSONL log, one attempt per line.
pub fn append_attempts_log(path: &Path, attempts: &[ScriptAttempt]) -> Result<(), SgaError> {
    let io = |source| SgaError::Io { path: path.to_path_buf(), source };
    let mut file = OpenOptions::new().create(true).append(true).open(path).map_err(io)?;
    for a in attempts {
        let line = serde_json::to_string(a).expect("attempt serializes");
        writeln!(file, "{line}").map_err(io)?;
    }
    Ok(())
}

fn render_example(index: usize, behavior: Behavior, description: &str, source: &str) -> String {
    format!("Example {index} ({behavior}): {description}\n```wcs\n{source}\n```")
}

/// Bootstraps a script-writer history: role and rules as guidelines, then the
/// assembly, the workcell, the API reference and every example filed under
/// the behavior.
pub fn build_sga_context(
    behavior: Behavior,
    assembly: &AssemblySpec,
    workcell: &WorkcellSpec,
    api: &ApiCatalog,
    library: &Library,
) -> Result<ChatHistory, SgaError> {
    let examples = library.examples_for(behavior);
    if examples.is_empty() {
        return Err(SgaError::MissingExample(behavior));
    }
    let mut context = vec![
        (Role::User, assembly.render_context()),
        (Role::User, workcell.render_context()),
        (Role::User, api.render_context()),
    ];
    for (i, ex) in examples.iter().enumerate() {
        context.push((Role::User, render_example(i + 1, behavior, &ex.description, &ex.source)));
    }
    let mut history = ChatHistory::new();
    history.bootstrap([library.prompts.sga_role.clone(), library.prompts.sga_rules.clone()], context)?;
    Ok(history)
}

/// Everything the script agents of one run share.
#[derive(Clone)]
pub struct SgaSetup {
    pub assembly: Arc<AssemblySpec>,
    pub workcell: Arc<WorkcellSpec>,
    pub api: Arc<ApiCatalog>,
    pub library: Arc<Library>,
    pub aliases: Arc<AliasTable>,
    pub settings: ModelSettings,
    pub out_dir: PathBuf,
    pub max_attempts: usize,
    /// Tolerance for the effect check; `None` disables the check.
    pub effect_tolerance: Option<f64>,
}

/// A generated script that has been saved but not yet run.
#[derive(Debug, Clone)]
pub struct Draft {
    pub source: String,
    pub path: PathBuf,
    extract_error: Option<ExtractError>,
}

pub struct ScriptAgent {
    agent: Agent,
    setup: SgaSetup,
    subtask: Subtask,
    attempts: Vec<ScriptAttempt>,
    feedback: Option<String>,
    /// Last script that checked, kept so a draft can be re-run elsewhere.
    last_checked: Option<(Arc<WcsScript>, Arc<str>)>,
}

impl ScriptAgent {
    pub fn new(setup: &SgaSetup, subtask: &Subtask) -> Result<Self, SgaError> {
        let history =
            build_sga_context(subtask.behavior, &setup.assembly, &setup.workcell, &setup.api, &setup.library)?;
        Ok(Self {
            agent: Agent::new(history, setup.aliases.clone(), setup.settings.clone()),
            setup: setup.clone(),
            subtask: subtask.clone(),
            attempts: Vec::new(),
            feedback: subtask.last_error.clone(),
            last_checked: None,
        })
    }

    pub fn subtask(&self) -> &Subtask {
        &self.subtask
    }

    pub fn history(&self) -> &ChatHistory {
        self.agent.history()
    }

    pub fn attempts(&self) -> &[ScriptAttempt] {
        &self.attempts
    }

    pub fn into_attempts(self) -> Vec<ScriptAttempt> {
        self.attempts
    }

    pub fn expectation(&self) -> Option<Expectation> {
        self.setup.effect_tolerance.and_then(|tol| effect_check(&self.subtask, tol))
    }

    /// Asks for a script, passing the last error back when there is one.
    pub fn write(&mut self, provider: &dyn ChatProvider, error: Option<&str>) -> Result<Result<String, ExtractError>, SgaError> {
        let s = &self.subtask;
        let mut prompt = format!("Subtask: {}\nBehavior: {}", s.description, s.behavior);
        if !s.parts.is_empty() {
            prompt.push_str(&format!("\nParts: {}", s.parts.join(", ")));
        }
        if let Some(error) = error {
            prompt.push_str(&format!(
                "\n\nThe previous script failed with this error:\n{error}\n\nReturn a corrected version of the whole script."
            ));
        }
        let reply = self.agent.ask(provider, &prompt)?;
        Ok(extract_code_block(&reply))
    }

    /// Writes and saves the next script without running it.
    pub fn draft(&mut self, provider: &dyn ChatProvider) -> Result<Draft, SgaError> {
        let feedback = self.feedback.clone();
        let (source, extract_error) = match self.write(provider, feedback.as_deref())? {
            Ok(source) => (source, None),
            Err(e) => (String::new(), Some(e)),
        };
        let path = save(&self.setup.out_dir, &self.subtask, &source)?;
        let path = path.strip_prefix(&self.setup.out_dir).map(Path::to_path_buf).unwrap_or(path);
        Ok(Draft { source, path, extract_error })
    }

    /// Checks and runs a draft, recording the attempt.
    pub fn evaluate(&mut self, draft: Draft, runner: &mut dyn ScriptRunner) -> ScriptAttempt {
        let attempt_no = self.attempts.len() + 1;
        let (outcome, error_kind, error) = match self.check_and_run(&draft, runner) {
            Ok(()) => (AttemptOutcome::Succeeded, None, None),
            Err((outcome, kind, text)) => (outcome, Some(kind), Some(text)),
        };
        self.feedback = error.clone();
        let attempt = ScriptAttempt {
            subtask: self.subtask.ordinal,
            attempt_no,
            outcome,
            error_kind,
            error,
            path: draft.path,
            source: draft.source,
        };
        match &attempt.error {
            Some(e) => tracing::info!(subtask = attempt.subtask, attempt = attempt_no, "attempt failed: {e}"),
            None => tracing::info!(subtask = attempt.subtask, attempt = attempt_no, "attempt succeeded"),
        }
        self.attempts.push(attempt.clone());
        attempt
    }

    fn check_and_run(
        &mut self,
        draft: &Draft,
        runner: &mut dyn ScriptRunner,
    ) -> Result<(), (AttemptOutcome, String, String)> {
        if let Some(e) = &draft.extract_error {
            return Err((AttemptOutcome::CheckFailed, "ExtractError".into(), format!("ExtractError: {e}")));
        }
        let script = wcs::load(&draft.source, &self.setup.api).map_err(|errors| {
            (AttemptOutcome::CheckFailed, errors[0].kind.label().to_string(), wcs::render_errors(&errors))
        })?;
        let script = Arc::new(script);
        let source: Arc<str> = Arc::from(draft.source.as_str());
        self.last_checked = Some((script.clone(), source.clone()));
        runner
            .run(&script, &source, self.expectation().as_ref())
            .map(|_| ())
            .map_err(|e| (AttemptOutcome::RuntimeFailed, e.kind.clone(), e.to_string()))
    }

    /// Runs the last successful script again on `runner`. If it fails there,
    /// the attempt is downgraded and its error becomes the next feedback.
    pub fn rerun_last(&mut self, runner: &mut dyn ScriptRunner) -> bool {
        let Some((script, source)) = self.last_checked.clone() else { return false };
        if !self.attempts.last().is_some_and(ScriptAttempt::succeeded) {
            return false;
        }
        match runner.run(&script, &source, self.expectation().as_ref()) {
            Ok(_) => true,
            Err(e) => {
                let last = self.attempts.last_mut().expect("checked above");
                last.outcome = AttemptOutcome::RuntimeFailed;
                last.error_kind = Some(e.kind.clone());
                last.error = Some(e.to_string());
                self.feedback = last.error.clone();
                false
            }
        }
    }

    /// One write, save, check and run cycle.
    pub fn attempt(&mut self, provider: &dyn ChatProvider, runner: &mut dyn ScriptRunner) -> Result<ScriptAttempt, SgaError> {
        let draft = self.draft(provider)?;
        Ok(self.evaluate(draft, runner))
    }

    /// Repeats attempts until one succeeds or the attempt limit is reached.
    /// Attempts already made (for example a speculative draft) count toward
    /// the limit.
    pub fn try_subtask(
        &mut self,
        provider: &dyn ChatProvider,
        runner: &mut dyn ScriptRunner,
    ) -> Result<ScriptAttempt, SgaError> {
        if let Some(last) = self.attempts.last().filter(|a| a.succeeded()) {
            return Ok(last.clone());
        }
        while self.attempts.len() < self.setup.max_attempts.max(1) {
            let attempt = self.attempt(provider, runner)?;
            if attempt.succeeded() {
                return Ok(attempt);
            }
        }
        Err(SgaError::AttemptsExhausted { ordinal: self.subtask.ordinal, attempts: self.attempts.clone() })
    }
}
