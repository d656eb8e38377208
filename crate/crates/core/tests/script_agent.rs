mod common;

use std::fs;
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use asmgen_core::agent::{AliasTable, EntryGroup, ModelSettings, Role};
use asmgen_core::library::Library;
use asmgen_core::llm::{ChatProvider, CompletionRequest, ProviderError, ReplayProvider, TranscriptEntry};
use asmgen_core::model::{AssemblySpec, WorkcellSpec};
use asmgen_core::sga::{build_sga_context, AttemptOutcome, ScriptAgent, SgaError, SgaSetup};
use asmgen_core::sim::{SimConfig, WorkcellState};
use asmgen_core::tda::{Behavior, Subtask, SubtaskStatus};
use asmgen_core::wcs::{self, ApiCatalog};
use common::*;

fn setup(out: &Path) -> SgaSetup {
    let assembly = AssemblySpec::from_file(&fixture("truck_assembly.json")).unwrap();
    let workcell = WorkcellSpec::from_file(&fixture("truck_workcell.json"), &assembly).unwrap();
    SgaSetup {
        assembly: Arc::new(assembly),
        workcell: Arc::new(workcell),
        api: Arc::new(ApiCatalog::builtin()),
        library: Arc::new(Library::builtin()),
        aliases: Arc::new(AliasTable::default()),
        settings: ModelSettings::default(),
        out_dir: out.to_path_buf(),
        max_attempts: 5,
        effect_tolerance: Some(1e-6),
    }
}

fn state(setup: &SgaSetup) -> WorkcellState {
    WorkcellState::new(setup.assembly.clone(), setup.workcell.clone(), SimConfig::default())
}

fn subtask(ordinal: usize, description: &str, behavior: Behavior, parts: &[&str]) -> Subtask {
    Subtask {
        ordinal,
        description: description.into(),
        behavior,
        parts: parts.iter().map(|p| p.to_string()).collect(),
        status: SubtaskStatus::Pending,
        last_error: None,
    }
}

/// Records every request and answers from a fixed list.
struct Scripted {
    replies: Mutex<Vec<String>>,
    seen: Mutex<Vec<CompletionRequest>>,
}

impl Scripted {
    fn new(replies: &[&str]) -> Self {
        let mut r: Vec<String> = replies.iter().map(|s| s.to_string()).collect();
        r.reverse();
        Self { replies: Mutex::new(r), seen: Mutex::new(vec![]) }
    }

    fn last_prompt(&self) -> String {
        self.seen.lock().unwrap().last().unwrap().messages.last().unwrap().content.clone()
    }
}

impl ChatProvider for Scripted {
    fn name(&self) -> &str {
        "scripted"
    }

    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError> {
        self.seen.lock().unwrap().push(request.clone());
        self.replies.lock().unwrap().pop().ok_or(ProviderError::TranscriptExhausted { consumed: 0 })
    }
}

const PICK_AXLE: &str = "```wcs
def main(workcell):
    \"\"\"Pick the Axle.\"\"\"
    let robot = workcell.get_robot(\"robot_left\")
    robot.attach_gripper(\"All-Purpose Gripper\")
    let grasp = workcell.grasp_pose(\"Axle\", \"All-Purpose Gripper\")
    robot.move_cartesian(translation(0, 0, 0.15) @ grasp)
    robot.move_cartesian(grasp)
    robot.pick(\"Axle\")
```";

#[test]
fn context_order_and_examples() {
    let dir = tempfile::tempdir().unwrap();
    let s = setup(dir.path());
    let mut library = Library::builtin();
    let extra = library.examples_for(Behavior::Pick)[0].clone();
    library.scripts.push(asmgen_core::library::ScriptExample { name: "03_extra".into(), ..extra });
    let history = build_sga_context(Behavior::Pick, &s.assembly, &s.workcell, &s.api, &library).unwrap();
    let context: Vec<_> = history.task_context().collect();
    assert_eq!(context.len(), 6);
    assert!(context[0].content.starts_with("assembly: Skateboard Truck"));
    assert!(context[1].content.starts_with("robots: 2"));
    assert!(context[2].content.contains("move_cartesian"));
    assert!(context[3..].iter().all(|e| e.content.starts_with("Example ") && e.content.contains("(Pick)")));
    assert_eq!(history.entries().iter().filter(|e| e.group == EntryGroup::SystemGuidelines).count(), 2);

    let empty = library.without_examples(Behavior::Insert);
    let err = build_sga_context(Behavior::Insert, &s.assembly, &s.workcell, &s.api, &empty).unwrap_err();
    assert!(matches!(err, SgaError::MissingExample(Behavior::Insert)));
}

#[test]
fn aliased_context_shows_generic_names() {
    let dld = AssemblySpec::from_file(&fixture("truck_assembly_dld.json")).unwrap();
    let annotations: std::collections::BTreeMap<String, String> =
        serde_json::from_str(&fs::read_to_string(fixture("truck_gld_annotations.json")).unwrap()).unwrap();
    let assembly = dld.annotate_gld(&annotations).unwrap();
    let workcell = WorkcellSpec::from_file(&fixture("truck_workcell_dld.json"), &assembly).unwrap();
    let api = ApiCatalog::builtin();
    let history = build_sga_context(Behavior::Pick, &assembly, &workcell, &api, &Library::builtin()).unwrap();
    let aliases = AliasTable::from_file(&fixture("aliases.json")).unwrap();
    let rendered = history.render_messages(&aliases).unwrap();
    let assembly_text = &rendered.iter().find(|m| m.content.starts_with("assembly:")).unwrap().content;
    assert!(assembly_text.contains("gld: Kingpin"));
    assert!(assembly_text.contains("KINGPIN_P1"));
    assert!(!assembly_text.contains("91257A662"));
}

#[test]
fn write_prompt_carries_subtask_and_error() {
    let dir = tempfile::tempdir().unwrap();
    let s = setup(dir.path());
    let provider = Scripted::new(&["def main(workcell):\n    pass", "```\ndef main(workcell):\n    return\n```"]);
    let mut agent = ScriptAgent::new(&s, &subtask(1, "Pick the baseplate", Behavior::Pick, &["Base"])).unwrap();
    let source = agent.write(&provider, None).unwrap().unwrap();
    assert_eq!(source, "def main(workcell):\n    pass");
    let prompt = provider.last_prompt();
    assert!(prompt.contains("Pick the baseplate") && prompt.contains("Pick"));
    let error = "MotionException: unreachable position at line 7";
    agent.write(&provider, Some(error)).unwrap().unwrap();
    assert!(provider.last_prompt().contains(error));
}

#[test]
fn check_failure_then_success() {
    let dir = tempfile::tempdir().unwrap();
    let s = setup(dir.path());
    let broken = "```\ndef main(workcell):\n    workcell.grab_part(\"Axle\")\n```";
    let provider = Scripted::new(&[broken, PICK_AXLE]);
    let mut sim = state(&s);
    let mut agent = ScriptAgent::new(&s, &subtask(2, "Pick Axle", Behavior::Pick, &["Axle"])).unwrap();
    let done = agent.try_subtask(&provider, &mut sim).unwrap();
    assert_eq!(done.attempt_no, 2);
    let attempts = agent.attempts();
    assert_eq!(attempts[0].outcome, AttemptOutcome::CheckFailed);
    assert!(attempts[0].error.as_deref().unwrap().contains("unknown API function 'grab_part'"));
    assert_eq!(sim.part("Axle").unwrap().held_by.as_ref().unwrap().robot, "robot_left");

    // runtime tail: prompt, S1, prompt with X1, S2
    let tail: Vec<_> = agent.history().runtime().collect();
    assert_eq!(tail.len(), 4);
    assert_eq!(tail.iter().map(|e| e.role).collect::<Vec<_>>(), [Role::User, Role::Assistant, Role::User, Role::Assistant]);
    assert!(tail[2].content.contains("unknown API function"));
    assert!(tail[3].content.contains("robot.pick"));

    let saved = fs::read_to_string(dir.path().join("002_pick_pick_axle.wcs")).unwrap();
    assert!(wcs::load(&saved, &s.api).is_ok());
}

#[test]
fn random_motion_debugging_loop() {
    let dir = tempfile::tempdir().unwrap();
    let s = setup(dir.path());
    let provider = ReplayProvider::new(transcript("random_motion.json")).unwrap();
    let mut sim = state(&s);
    let before = sim.clone();
    let started = Instant::now();
    let mut agent =
        ScriptAgent::new(&s, &subtask(1, "Move the robot to 100 random positions", Behavior::Move, &[])).unwrap();
    let done = agent.try_subtask(&provider, &mut sim).unwrap();
    assert!(started.elapsed().as_secs_f64() < 5.0);
    assert_eq!(done.attempt_no, 3);
    let a = agent.attempts();
    assert_eq!(a[0].error_kind.as_deref(), Some("Exception"));
    let first = a[0].error.as_deref().unwrap();
    assert!(first.contains("at line 5"), "{first}");
    assert!(first.contains("raise Exception"), "{first}");
    assert_eq!(a[1].error_kind.as_deref(), Some("MotionException"));
    assert!(a[1].error.as_deref().unwrap().contains("unreachable position"));
    assert_ne!(sim, before);
}

#[test]
fn exhaustion_with_one_attempt() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = setup(dir.path());
    s.max_attempts = 1;
    let entries = transcript("kingpin_exhaustion.json")[1..].to_vec();
    let provider = ReplayProvider::new(entries).unwrap();
    let mut sim = state(&s);
    let before = sim.clone();
    let mut agent = ScriptAgent::new(&s, &subtask(1, "Pick Kingpin Bolt", Behavior::Pick, &["Kingpin"])).unwrap();
    let err = agent.try_subtask(&provider, &mut sim).unwrap_err();
    let SgaError::AttemptsExhausted { attempts, .. } = err else { panic!("{err}") };
    assert_eq!(attempts.len(), 1);
    assert_eq!(attempts[0].error_kind.as_deref(), Some("GripperMismatch"));
    assert_eq!(sim, before);
}

#[test]
fn effect_check_can_be_disabled() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = setup(dir.path());
    let lazy = "```\ndef main(workcell):\n    let robot = workcell.get_robot(\"robot_left\")\n    robot.attach_gripper(\"All-Purpose Gripper\")\n```";
    let provider = Scripted::new(&[lazy, lazy]);
    let task = subtask(1, "Pick Axle", Behavior::Pick, &["Axle"]);
    let mut agent = ScriptAgent::new(&s, &task).unwrap();
    let attempt = agent.attempt(&provider, &mut state(&s)).unwrap();
    assert_eq!(attempt.error_kind.as_deref(), Some("EffectCheckError"));
    assert!(attempt.error.unwrap().contains("not held"));
    s.effect_tolerance = None;
    let mut agent = ScriptAgent::new(&s, &task).unwrap();
    assert!(agent.attempt(&provider, &mut state(&s)).unwrap().succeeded());
}

#[test]
fn empty_block_is_a_check_failure() {
    let dir = tempfile::tempdir().unwrap();
    let s = setup(dir.path());
    let provider = Scripted::new(&["```\n```", PICK_AXLE]);
    let mut agent = ScriptAgent::new(&s, &subtask(1, "Pick Axle", Behavior::Pick, &["Axle"])).unwrap();
    agent.try_subtask(&provider, &mut state(&s)).unwrap();
    assert_eq!(agent.attempts()[0].outcome, AttemptOutcome::CheckFailed);
    assert_eq!(agent.attempts()[0].error_kind.as_deref(), Some("ExtractError"));
}

#[test]
fn replay_is_deterministic() {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let s = setup(dir.path());
        let provider = ReplayProvider::new(transcript("random_motion.json")).unwrap();
        let mut sim = state(&s);
        let mut agent =
            ScriptAgent::new(&s, &subtask(1, "Move the robot to 100 random positions", Behavior::Move, &[])).unwrap();
        agent.try_subtask(&provider, &mut sim).unwrap();
        let file = fs::read(dir.path().join("001_move_move_the_robot_to_100_random_positions.wcs")).unwrap();
        (agent.attempts().to_vec(), sim, file)
    };
    assert_eq!(run(), run());
}

#[test]
fn transcript_mismatch_is_a_provider_error() {
    let dir = tempfile::tempdir().unwrap();
    let s = setup(dir.path());
    let provider = ReplayProvider::new(vec![TranscriptEntry {
        expect_contains: vec!["Subtask: Pick Wheel".into()],
        response: PICK_AXLE.into(),
    }])
    .unwrap();
    let mut agent = ScriptAgent::new(&s, &subtask(1, "Pick Axle", Behavior::Pick, &["Axle"])).unwrap();
    assert!(matches!(agent.try_subtask(&provider, &mut state(&s)), Err(SgaError::Agent(_))));
}
