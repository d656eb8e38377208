use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use asmgen_core::agent::ModelSettings;
use asmgen_core::llm::{ProviderConfig, ProviderRegistry};
use asmgen_core::model::{AssemblySpec, WorkcellSpec};
use asmgen_core::orchestrator::{run_pipeline, RunConfig, RunError, RunInputs, RunReport};
use asmgen_core::sim::{run_script, SimConfig, StateDump, WorkcellState};
use asmgen_core::tda::TaskDecomposer;
use asmgen_core::wcs::{self, ApiCatalog};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "asmgen", version, about = "Generate and run robot assembly scripts with a language model")]
struct Cli {
    /// More log output on stderr (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decompose a task into behavior-labeled subtasks and write the plan.
    Decompose {
        #[command(flatten)]
        inputs: Inputs,
        /// Where to write the plan JSON; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full pipeline: decompose, then generate and execute a script per subtask.
    Run {
        #[command(flatten)]
        inputs: Inputs,
        /// Output directory for scripts, plan and report.
        #[arg(long)]
        out: PathBuf,
        /// Script attempts per subtask before giving up.
        #[arg(long, default_value_t = asmgen_core::sga::DEFAULT_MAX_ATTEMPTS)]
        max_attempts: usize,
        /// Number of subtasks whose scripts are drafted ahead of execution.
        #[arg(long, default_value_t = 1)]
        parallel_sga: usize,
        /// Accept any script that runs without error, whatever it did.
        #[arg(long)]
        no_effect_check: bool,
        /// Keep going after a subtask runs out of attempts.
        #[arg(long)]
        continue_on_failure: bool,
    },
    /// Check and run a single script against a fresh or saved simulator state.
    Exec {
        script: PathBuf,
        #[arg(long)]
        design: PathBuf,
        #[arg(long)]
        workcell: PathBuf,
        /// Start from a state dump instead of the workcell's initial layout.
        #[arg(long)]
        state: Option<PathBuf>,
        /// Write the final state dump here.
        #[arg(long)]
        save_state: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct Inputs {
    /// Assembly description (JSON).
    #[arg(long)]
    design: PathBuf,
    /// Workcell description (JSON).
    #[arg(long)]
    workcell: PathBuf,
    #[arg(long)]
    task: String,
    /// Language model backend: `http:[URL]`, `replay:PATH` or `record:PATH`.
    #[arg(long, default_value = "http:")]
    provider: String,
    /// Model name sent to the backend.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    temperature: Option<f64>,
    /// Generic part names to add to the assembly, as a JSON object keyed by part name.
    #[arg(long)]
    gld: Option<PathBuf>,
    /// Term-to-alias table used to redact prompts.
    #[arg(long)]
    aliases: Option<PathBuf>,
    /// Example library directory replacing the built-in one.
    #[arg(long)]
    library: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl Inputs {
    fn config(&self, out: &Path) -> Result<RunConfig, String> {
        let mut provider = ProviderConfig::from_selector(&self.provider).map_err(|e| e.to_string())?;
        if let Some(model) = &self.model {
            provider.model = model.clone();
        }
        provider.temperature = self.temperature;
        let mut config = RunConfig::new(&self.design, &self.workcell, &self.task, out);
        config.provider = provider;
        config.gld_annotations = self.gld.clone();
        config.aliases = self.aliases.clone();
        config.library = self.library.clone();
        config.seed = self.seed;
        Ok(config)
    }
}

fn init_logging(verbose: u8) {
    let default = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(default));
    tracing_subscriber::fmt().with_env_filter(filter).with_writer(std::io::stderr).init();
}

fn decompose(inputs: &Inputs, out: Option<&Path>) -> Result<(), String> {
    let config = inputs.config(Path::new("."))?;
    let loaded = RunInputs::load(&config).map_err(|e| e.to_string())?;
    let provider = ProviderRegistry::with_builtins().create(&config.provider).map_err(|e| e.to_string())?;
    let settings = ModelSettings { model: config.provider.model.clone(), temperature: config.provider.temperature };
    let mut tda = TaskDecomposer::new(loaded.assembly.clone(), &loaded.library, loaded.aliases.clone(), settings)
        .map_err(|e| e.to_string())?;
    let result = tda.decompose(provider.as_ref(), &inputs.task).map_err(|e| e.to_string())?;
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    let json = result.plan.to_plan_json();
    match out {
        Some(path) => {
            fs::write(path, json + "\n").map_err(|e| format!("{}: {e}", path.display()))?;
            eprintln!("wrote {} subtasks to {}", result.plan.len(), path.display());
        }
        None => println!("{json}"),
    }
    Ok(())
}

fn summarize(report: &RunReport, out: &Path) {
    let status = if report.is_complete() { "complete" } else { "aborted" };
    println!(
        "{status}: {}/{} subtasks committed, {} provider calls, max design error {:.2e} m",
        report.committed_scripts.len(),
        report.plan.len(),
        report.provider_calls,
        report.max_design_error()
    );
    println!("report: {}", out.join("report.md").display());
}

fn state_summary(state: &WorkcellState) -> String {
    let mut out = String::from("robots:\n");
    for (name, r) in state.robots() {
        out.push_str(&format!("  {name}: tcp {}", r.tcp_pose));
        if let Some(g) = &r.gripper {
            out.push_str(&format!(", gripper {g}"));
        }
        if let Some(p) = &r.held_part {
            out.push_str(&format!(", holding {p}"));
        }
        out.push('\n');
    }
    out.push_str("parts:\n");
    for (name, p) in state.parts() {
        out.push_str(&format!("  {name}: {}", p.pose));
        if let Some(h) = &p.held_by {
            out.push_str(&format!(", held by {}", h.robot));
        }
        out.push('\n');
    }
    out
}

fn exec(
    script: &Path,
    design: &Path,
    workcell: &Path,
    state_file: Option<&Path>,
    save_state: Option<&Path>,
    seed: u64,
) -> Result<(), String> {
    let read = |p: &Path| fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()));
    let assembly = AssemblySpec::from_file(design).map_err(|e| e.to_string())?;
    let cell = WorkcellSpec::from_file(workcell, &assembly).map_err(|e| e.to_string())?;
    let mut state = WorkcellState::new(Arc::new(assembly), Arc::new(cell), SimConfig { seed, ..SimConfig::default() });
    if let Some(path) = state_file {
        let dump: StateDump = serde_json::from_str(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))?;
        state.load_dump(dump).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    let source = read(script)?;
    let parsed = match wcs::load(&source, &ApiCatalog::builtin()) {
        Ok(s) => s,
        Err(errors) => {
            let rendered: Vec<String> = errors
                .iter()
                .map(|e| {
                    format!(
                        "{}: {}\n at line {}, column {}:\n{}",
                        e.kind.label(),
                        e.message,
                        e.span.line,
                        e.span.column,
                        e.caret()
                    )
                })
                .collect();
            return Err(rendered.join("\n\n"));
        }
    };
    let trace = run_script(&parsed, &source, &mut state, None).map_err(|e| e.to_string())?;
    for line in &trace.printed {
        println!("{line}");
    }
    print!("{}", state_summary(&state));
    if let Some(path) = save_state {
        fs::write(path, state.dump_json() + "\n").map_err(|e| format!("{}: {e}", path.display()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    init_logging(cli.verbose);
    let result = match &cli.command {
        Command::Decompose { inputs, out } => decompose(inputs, out.as_deref()).map_err(|e| (e, 1)),
        Command::Run { inputs, out, max_attempts, parallel_sga, no_effect_check, continue_on_failure } => {
            match inputs.config(out) {
                Err(e) => Err((e, 1)),
                Ok(mut config) => {
                    config.max_attempts = *max_attempts;
                    config.parallel_sga = *parallel_sga;
                    config.effect_check = !no_effect_check;
                    config.continue_on_failure = *continue_on_failure;
                    match run_pipeline(config) {
                        Ok(report) => {
                            summarize(&report, out);
                            Ok(())
                        }
                        Err(RunError::Aborted(aborted)) => {
                            summarize(&aborted.report, out);
                            Err((aborted.cause, 2))
                        }
                        Err(e) => {
                            let code = e.exit_code();
                            Err((e.to_string(), code))
                        }
                    }
                }
            }
        }
        Command::Exec { script, design, workcell, state, save_state, seed } => {
            exec(script, design, workcell, state.as_deref(), save_state.as_deref(), *seed).map_err(|e| (e, 1))
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err((message, code)) => {
            eprintln!("error: {message}");
            ExitCode::from(code as u8)
        }
    }
}
