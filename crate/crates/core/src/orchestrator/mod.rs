//! The end-to-end run: decompose the task, then drive one script agent per
//! subtask against the live simulation, committing strictly in plan order.
//!
//! With `parallel_sga > 1` the first drafts for the next few subtasks are
//! generated together and test-run on private copies of the predicted
//! state. A draft is committed only if the live state at its turn equals the
//! state it was tested against; otherwise it is thrown away and the subtask
//! is generated again from scratch.

mod report;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::AtomicUsize;
use std::sync::Arc;
use std::time::Instant;

pub use report::{AttemptSummary, PartReport, RunReport, RunStatus, SubtaskReport};

use crate::agent::{AliasTable, ModelSettings};
use crate::library::Library;
use crate::llm::{ChatProvider, CountingProvider, ProviderConfig, ProviderRegistry};
use crate::model::{AssemblySpec, WorkcellSpec};
use crate::sga::{self, ScriptAgent, ScriptAttempt, SgaError, SgaSetup};
use crate::sim::{SimConfig, SimHandle, WorkcellState};
use crate::tda::{SubtaskPlan, SubtaskStatus, TaskDecomposer};
use crate::wcs::ApiCatalog;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub design: PathBuf,
    pub workcell: PathBuf,
    pub task: String,
    pub provider: ProviderConfig,
    pub max_attempts: usize,
    pub parallel_sga: usize,
    pub effect_check: bool,
    pub out_dir: PathBuf,
    pub seed: u64,
    /// Generic names to attach to parts, keyed by part name.
    pub gld_annotations: Option<PathBuf>,
    /// Private term to alias map used to redact prompts.
    pub aliases: Option<PathBuf>,
    /// Example library directory; the built-in library when absent.
    pub library: Option<PathBuf>,
    pub max_reasks: usize,
    pub continue_on_failure: bool,
    pub sim: SimConfig,
}

impl RunConfig {
    pub fn new(design: impl Into<PathBuf>, workcell: impl Into<PathBuf>, task: impl Into<String>, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            design: design.into(),
            workcell: workcell.into(),
            task: task.into(),
            provider: ProviderConfig::default(),
            max_attempts: sga::DEFAULT_MAX_ATTEMPTS,
            parallel_sga: 1,
            effect_check: true,
            out_dir: out_dir.into(),
            seed: 0,
            gld_annotations: None,
            aliases: None,
            library: None,
            max_reasks: crate::tda::DEFAULT_MAX_REASKS,
            continue_on_failure: false,
            sim: SimConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AbortedRun {
    pub cause: String,
    pub report: RunReport,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("run aborted: {}", .0.cause)]
    Aborted(Box<AbortedRun>),
}

impl RunError {
    /// Process exit code: 2 for an aborted run, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Aborted(_) => 2,
            _ => 1,
        }
    }
}

fn config_error(e: impl std::fmt::Display) -> RunError {
    RunError::Config(e.to_string())
}

/// Static inputs of a run, loaded and validated up front.
pub struct RunInputs {
    pub assembly: Arc<AssemblySpec>,
    pub workcell: Arc<WorkcellSpec>,
    pub aliases: Arc<AliasTable>,
    pub library: Arc<Library>,
    pub api: Arc<ApiCatalog>,
}

impl RunInputs {
    pub fn load(config: &RunConfig) -> Result<Self, RunError> {
        let mut assembly = AssemblySpec::from_file(&config.design).map_err(config_error)?;
        if let Some(path) = &config.gld_annotations {
            let text = fs::read_to_string(path).map_err(|source| RunError::Io { path: path.clone(), source })?;
            let map: BTreeMap<String, String> =
                serde_json::from_str(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
            assembly = assembly.annotate_gld(&map).map_err(config_error)?;
        }
        let workcell = WorkcellSpec::from_file(&config.workcell, &assembly).map_err(config_error)?;
        let aliases = match &config.aliases {
            Some(path) => AliasTable::from_file(path).map_err(config_error)?,
            None => AliasTable::default(),
        };
        let library = match &config.library {
            Some(dir) => Library::from_dir(dir).map_err(config_error)?,
            None => Library::builtin(),
        };
        Ok(Self {
            assembly: Arc::new(assembly),
            workcell: Arc::new(workcell),
            aliases: Arc::new(aliases),
            library: Arc::new(library),
            api: Arc::new(ApiCatalog::builtin()),
        })
    }
}

/// Runs pipelines against one provider and counts simulation shutdowns.
pub struct Orchestrator {
    config: RunConfig,
    provider: Arc<dyn ChatProvider>,
    stops: Arc<AtomicUsize>,
}

impl Orchestrator {
    /// Creates the provider named in the config from the built-in registry.
    pub fn new(config: RunConfig) -> Result<Self, RunError> {
        Self::with_registry(config, &ProviderRegistry::with_builtins())
    }

    pub fn with_registry(config: RunConfig, registry: &ProviderRegistry) -> Result<Self, RunError> {
        let provider = registry.create(&config.provider).map_err(config_error)?;
        Ok(Self::with_provider(config, provider))
    }

    pub fn with_provider(config: RunConfig, provider: Arc<dyn ChatProvider>) -> Self {
        Self { config, provider, stops: Arc::new(AtomicUsize::new(0)) }
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    /// How many times a simulation started by this orchestrator has stopped.
    pub fn stop_count(&self) -> usize {
        self.stops.load(std::sync::atomic::Ordering::SeqCst)
    }

    pub fn run(&self) -> Result<RunReport, RunError> {
        let started = Instant::now();
        let config = &self.config;
        if config.max_attempts == 0 {
            return Err(RunError::Config("max_attempts must be at least 1".into()));
        }
        if config.parallel_sga == 0 {
            return Err(RunError::Config("parallel_sga must be at least 1".into()));
        }
        let inputs = RunInputs::load(config)?;
        let out = &config.out_dir;
        fs::create_dir_all(out).map_err(|source| RunError::Io { path: out.clone(), source })?;
        let log = out.join(sga::ATTEMPTS_LOG);
        if log.exists() {
            fs::remove_file(&log).map_err(|source| RunError::Io { path: log.clone(), source })?;
        }
        let provider = CountingProvider::new(self.provider.clone());
        let sim_config = SimConfig { seed: config.seed, ..config.sim.clone() };
        let settings = ModelSettings { model: config.provider.model.clone(), temperature: config.provider.temperature };
        let setup = SgaSetup {
            assembly: inputs.assembly.clone(),
            workcell: inputs.workcell.clone(),
            api: inputs.api.clone(),
            library: inputs.library.clone(),
            aliases: inputs.aliases.clone(),
            settings: settings.clone(),
            out_dir: out.clone(),
            max_attempts: config.max_attempts,
            effect_tolerance: config.effect_check.then_some(sim_config.insert_tolerance),
        };

        let state = WorkcellState::new(inputs.assembly.clone(), inputs.workcell.clone(), sim_config);
        let mut handle = SimHandle::start_counted(state, self.stops.clone());
        let mut run = Run {
            provider: &provider,
            setup: &setup,
            log: &log,
            continue_on_failure: config.continue_on_failure,
            plan: SubtaskPlan { source_task: config.task.clone(), subtasks: vec![] },
            warnings: vec![],
            reports: vec![],
        };
        let outcome = run.drive(&mut handle, &inputs, settings, config).and_then(|()| {
            let failed: Vec<String> = run
                .plan
                .subtasks
                .iter()
                .filter(|s| s.status == SubtaskStatus::Failed)
                .map(|s| s.ordinal.to_string())
                .collect();
            if failed.is_empty() {
                Ok(())
            } else {
                Err(format!("subtasks {} failed", failed.join(", ")))
            }
        });
        let final_state = handle.stop();

        let committed_scripts =
            run.reports.iter().filter(|r| r.status == SubtaskStatus::Done).filter_map(|r| r.script.clone()).collect();
        let (status, abort_reason) = match &outcome {
            Ok(()) => (RunStatus::Complete, None),
            Err(cause) => (RunStatus::Aborted, Some(cause.clone())),
        };
        let report = RunReport {
            task: config.task.clone(),
            status,
            abort_reason,
            plan: run.plan.subtasks,
            warnings: run.warnings,
            subtasks: run.reports,
            committed_scripts,
            provider_calls: provider.calls(),
            final_parts: report::final_parts(&final_state),
            wall_time_ms: started.elapsed().as_millis() as u64,
        };
        report.write(out).map_err(|source| RunError::Io { path: out.clone(), source })?;
        match outcome {
            Ok(()) => Ok(report),
            Err(cause) => Err(RunError::Aborted(Box::new(AbortedRun { cause, report }))),
        }
    }
}

/// Mutable bookkeeping of one pipeline run.
struct Run<'a> {
    provider: &'a CountingProvider,
    setup: &'a SgaSetup,
    log: &'a Path,
    continue_on_failure: bool,
    plan: SubtaskPlan,
    warnings: Vec<String>,
    reports: Vec<SubtaskReport>,
}

/// Result of driving one subtask to completion or exhaustion.
type SubtaskResult = Result<ScriptAttempt, SgaError>;

impl Run<'_> {
    fn drive(
        &mut self,
        handle: &mut SimHandle,
        inputs: &RunInputs,
        settings: ModelSettings,
        config: &RunConfig,
    ) -> Result<(), String> {
        let mut tda = TaskDecomposer::new(inputs.assembly.clone(), &inputs.library, inputs.aliases.clone(), settings)
            .map_err(|e| e.to_string())?
            .with_max_reasks(config.max_reasks);
        let decomposition =
            tda.decompose(self.provider, &config.task).map_err(|e| format!("task decomposition failed: {e}"))?;
        self.plan = decomposition.plan;
        self.warnings = decomposition.warnings.iter().map(ToString::to_string).collect();
        let plan_path = config.out_dir.join("plan.json");
        fs::write(&plan_path, self.plan.to_plan_json() + "\n").map_err(|e| format!("{}: {e}", plan_path.display()))?;
        tracing::info!(subtasks = self.plan.len(), "plan ready");

        if config.parallel_sga <= 1 {
            while let Ok((subtask, _, _)) = self.plan.get_next() {
                let mut agent = ScriptAgent::new(self.setup, subtask).map_err(|e| e.to_string())?;
                let result = agent.try_subtask(self.provider, handle);
                self.settle(agent, result)?;
            }
            return Ok(());
        }
        self.drive_speculative(handle, config.parallel_sga)
    }

    fn drive_speculative(&mut self, handle: &mut SimHandle, k: usize) -> Result<(), String> {
        loop {
            let window: Vec<_> = self
                .plan
                .subtasks
                .iter()
                .filter(|s| s.status == SubtaskStatus::Pending)
                .take(k)
                .cloned()
                .collect();
            if window.is_empty() {
                return Ok(());
            }
            let mut agents = window
                .iter()
                .map(|s| ScriptAgent::new(self.setup, s))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| e.to_string())?;
            let drafts = self.draft_all(&mut agents)?;

            // test each draft on the state the previous drafts predict
            let mut predicted = handle.snapshot();
            let mut pre_states = Vec::with_capacity(agents.len());
            for (agent, draft) in agents.iter_mut().zip(drafts) {
                pre_states.push(predicted.clone());
                agent.evaluate(draft, &mut predicted);
            }

            let mut queue = agents.into_iter().zip(pre_states);
            while let Some((mut agent, pre)) = queue.next() {
                let result = if handle.snapshot() != pre {
                    tracing::info!(subtask = agent.subtask().ordinal, "draft tested against a stale state; regenerating");
                    let subtask = agent.subtask().clone();
                    agent = ScriptAgent::new(self.setup, &subtask).map_err(|e| e.to_string())?;
                    agent.try_subtask(self.provider, handle)
                } else if agent.attempts().last().is_some_and(ScriptAttempt::succeeded) && agent.rerun_last(handle) {
                    Ok(agent.attempts().last().cloned().expect("draft attempt recorded"))
                } else {
                    agent.try_subtask(self.provider, handle)
                };
                if let Err(cause) = self.settle(agent, result) {
                    // drafts that will never be committed leave no files behind
                    for (rest, _) in queue {
                        for a in rest.attempts() {
                            let _ = fs::remove_file(self.setup.out_dir.join(&a.path));
                        }
                    }
                    return Err(cause);
                }
            }
        }
    }

    /// First drafts for every agent, concurrently unless the provider needs
    /// a fixed call order.
    fn draft_all(&self, agents: &mut [ScriptAgent]) -> Result<Vec<sga::Draft>, String> {
        let provider = self.provider;
        let results: Vec<_> = if provider.requires_ordered_calls() {
            agents.iter_mut().map(|a| a.draft(provider)).collect()
        } else {
            std::thread::scope(|scope| {
                let handles: Vec<_> = agents.iter_mut().map(|a| scope.spawn(move || a.draft(provider))).collect();
                handles.into_iter().map(|h| h.join().expect("draft thread panicked")).collect()
            })
        };
        results.into_iter().map(|r| r.map_err(|e| e.to_string())).collect()
    }

    /// Records a subtask's outcome; returns the abort cause if the run must stop.
    fn settle(&mut self, agent: ScriptAgent, result: SubtaskResult) -> Result<(), String> {
        let subtask = agent.subtask().clone();
        let attempts = agent.into_attempts();
        sga::append_attempts_log(self.log, &attempts).map_err(|e| e.to_string())?;
        let summaries: Vec<AttemptSummary> = attempts.iter().map(AttemptSummary::from).collect();
        let mut report = SubtaskReport {
            ordinal: subtask.ordinal,
            description: subtask.description.clone(),
            behavior: subtask.behavior,
            status: SubtaskStatus::Done,
            attempts: summaries,
            script: None,
        };
        match result {
            Ok(attempt) => {
                self.plan.mark_done(subtask.ordinal);
                report.script = Some(attempt.path);
                self.reports.push(report);
                Ok(())
            }
            Err(SgaError::AttemptsExhausted { attempts, .. }) => {
                let last = attempts.last().and_then(|a| a.error.clone()).unwrap_or_default();
                self.plan.mark_failed(subtask.ordinal, last.clone());
                report.status = SubtaskStatus::Failed;
                self.reports.push(report);
                let cause = format!(
                    "subtask {} ({}) failed after {} attempts; last error:\n{last}",
                    subtask.ordinal,
                    subtask.description,
                    attempts.len()
                );
                if self.continue_on_failure {
                    tracing::warn!("{cause}");
                    Ok(())
                } else {
                    Err(cause)
                }
            }
            Err(e) => {
                self.plan.mark_failed(subtask.ordinal, e.to_string());
                report.status = SubtaskStatus::Failed;
                self.reports.push(report);
                Err(format!("subtask {} ({}): {e}", subtask.ordinal, subtask.description))
            }
        }
    }
}

/// Runs the pipeline with the provider named in `config`.
pub fn run_pipeline(config: RunConfig) -> Result<RunReport, RunError> {
    Orchestrator::new(config)?.run()
}
