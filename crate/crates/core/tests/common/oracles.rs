//! Independent checks shared by the property suites and the acceptance target.

use std::sync::Arc;
use std::time::{Duration, Instant};

use asmgen_core::model::{AssemblySpec, Pose, WorkcellSpec};
use asmgen_core::sim::{run_script, SimConfig, SimErrorKind, SimHandle, WorkcellState};
use asmgen_core::wcs::{self, extract_code_block, ApiCatalog};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{assets, fixture, transcript};

pub fn truck_state() -> WorkcellState {
    let assembly = AssemblySpec::from_file(&fixture("truck_assembly.json")).unwrap();
    let workcell = WorkcellSpec::from_file(&fixture("truck_workcell.json"), &assembly).unwrap();
    WorkcellState::new(Arc::new(assembly), Arc::new(workcell), SimConfig::default())
}

const PREFIX_OPS: &[&str] = &[
    "robot.move_cartesian(translation(0, 0, 0.05) @ robot.tcp_pose)",
    "robot.move_cartesian(translation(0.05, 0, 0) @ robot.tcp_pose)",
    "robot.attach_gripper(\"All-Purpose Gripper\")",
    "let seen = workcell.detect(\"Axle\")",
    "print(\"step\", random_uniform(0, 1))",
    "robot.retract()",
];

const FAILING_OPS: &[&str] = &[
    "raise Exception(\"deliberate failure\")",
    "robot.move_cartesian(pose(5, 0, 0.5, 0, 0, 0))",
    "robot.move_cartesian(pose(0, -0.4, 0.01, 0, 0, 0))",
    "let missing = workcell.detect(\"Deck\")",
    "let ratio = 1 / 0",
    "robot.pick(\"Wheel\")",
    "robot.attach_gripper(\"Welding Torch\")",
    "robot.place(\"Wheel\", robot.tcp_pose)",
    "robot.insert(\"Wheel\", \"Nut\")",
];

/// A script that does some successful work, then fails.
pub fn failing_script(rng: &mut impl Rng) -> String {
    let mut body = vec!["    let robot = workcell.get_robot(\"robot_left\")".to_string()];
    for _ in 0..rng.random_range(0..6) {
        body.push(format!("    {}", PREFIX_OPS.choose(rng).unwrap()));
    }
    if rng.random_bool(0.3) {
        body.push("    robot.attach_gripper(\"All-Purpose Gripper\")".into());
        body.push("    let grasp = workcell.grasp_pose(\"Axle\", \"All-Purpose Gripper\")".into());
        body.push("    robot.move_cartesian(translation(0, 0, 0.1) @ grasp)".into());
        body.push("    robot.move_cartesian(grasp)".into());
        body.push("    robot.pick(\"Axle\")".into());
        body.push("    robot.move_cartesian(translation(0, 0, 0.2) @ robot.tcp_pose)".into());
    }
    let fail = FAILING_OPS.choose(rng).unwrap();
    if rng.random_bool(0.3) {
        body.push("    for i in range(3):".into());
        body.push(format!("        {}", PREFIX_OPS[0]));
        body.push("        if i == 2:".into());
        body.push(format!("            {fail}"));
    } else {
        body.push(format!("    {fail}"));
    }
    format!("def main(workcell):\n{}\n", body.join("\n"))
}

/// Runs `count` failing scripts from random reachable states and returns how
/// many left the state exactly as it was on entry.
pub fn failure_atomicity(count: usize, seed: u64) -> usize {
    let api = ApiCatalog::builtin();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = truck_state();
    let handle = SimHandle::start(truck_state());
    let mut atomic = 0;
    for i in 0..count {
        let source = failing_script(&mut rng);
        let script = wcs::load(&source, &api).unwrap_or_else(|e| panic!("{source}\n{}", wcs::render_errors(&e)));
        if i % 10 == 0 {
            let before = handle.snapshot();
            let failed = handle.run(Arc::new(script.clone()), Arc::from(source.as_str()), None).is_err();
            if failed && handle.snapshot() == before {
                atomic += 1;
            }
        } else {
            let before = state.clone();
            let failed = run_script(&script, &source, &mut state, None).is_err();
            if failed && state == before {
                atomic += 1;
            }
        }
        // wander to a new entry state now and then
        if rng.random_bool(0.2) {
            let [x, y, z] = state.robot("robot_left").unwrap().tcp_pose.xyz();
            let _ = state.move_cartesian("robot_left", Pose::from_translation(x, y + 0.05, z.max(0.4)));
        }
    }
    handle.stop();
    atomic
}

#[derive(Debug, Default)]
pub struct CollisionTally {
    pub motions: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub disagreements: usize,
}

/// Brute force: test the lifted body cube at every sample of the straight
/// line against every obstacle.
pub fn brute_force_collides(state: &WorkcellState, robot: &str, target: [f64; 3]) -> bool {
    let from = state.robot(robot).unwrap().tcp_pose.xyz();
    let cfg = state.config();
    let steps = cfg.sweep_steps;
    let half = cfg.body_size / 2.0;
    let obstacles = state.obstacles_for(robot);
    (1..=steps).any(|k| {
        let t = k as f64 / steps as f64;
        let p: Vec<f64> = (0..3).map(|i| from[i] + (target[i] - from[i]) * t).collect();
        let center = [p[0], p[1], p[2] + cfg.body_lift];
        obstacles.iter().any(|(_, b)| (0..3).all(|i| center[i] - half < b.max[i] && b.min[i] < center[i] + half))
    })
}

fn random_target(rng: &mut impl Rng, state: &WorkcellState, robot: &str) -> [f64; 3] {
    let ws = state.robot(robot).unwrap().workspace;
    let obstacles = state.obstacles_for(robot);
    let mut p = if rng.random_bool(0.5) {
        let (_, b) = obstacles.choose(rng).unwrap();
        let c = b.center();
        [0, 1, 2].map(|i| c[i] + rng.random_range(-0.25..0.25))
    } else {
        [0, 1, 2].map(|i| rng.random_range(ws.min[i]..ws.max[i]))
    };
    for (i, v) in p.iter_mut().enumerate() {
        *v = v.clamp(ws.min[i], ws.max[i]);
    }
    p
}

/// Compares the simulator's accept/reject decision with the brute-force
/// oracle on `count` random motions.
pub fn collision_oracle(count: usize, seed: u64) -> CollisionTally {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = CollisionTally::default();
    while tally.motions < count {
        let mut state = truck_state();
        for robot in ["robot_left", "robot_right"] {
            let t = random_target(&mut rng, &state, robot);
            let _ = state.move_cartesian(robot, Pose::from_translation(t[0], t[1], t[2]));
        }
        let robot = if rng.random_bool(0.5) { "robot_left" } else { "robot_right" };
        for _ in 0..5 {
            let target = random_target(&mut rng, &state, robot);
            let expected = brute_force_collides(&state, robot, target);
            let result = state.move_cartesian(robot, Pose::from_translation(target[0], target[1], target[2]));
            let rejected = matches!(&result, Err(e) if e.kind == SimErrorKind::CollisionError);
            if let Err(e) = &result {
                assert_eq!(e.kind, SimErrorKind::CollisionError, "{e}");
            }
            tally.motions += 1;
            if rejected {
                tally.rejected += 1;
            } else {
                tally.accepted += 1;
            }
            if rejected != expected {
                tally.disagreements += 1;
            }
        }
    }
    tally
}

/// Picks the Axle, then makes random moves; returns the number of steps
/// checked and the number where the held part was not exactly at
/// `tcp ∘ grasp_offset`.
pub fn held_rigidity(moves: usize, seed: u64) -> (usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = truck_state();
    let robot = "robot_left";
    state.attach_gripper(robot, "All-Purpose Gripper").unwrap();
    let grasp = state.grasp_pose("Axle", "All-Purpose Gripper").unwrap();
    state.move_cartesian(robot, Pose::from_translation(0.0, 0.0, 0.1).compose(&grasp)).unwrap();
    state.move_cartesian(robot, grasp).unwrap();
    state.pick(robot, "Axle").unwrap();
    let mut checked = 0;
    let mut broken = 0;
    for _ in 0..moves {
        let t = random_target(&mut rng, &state, robot);
        let yaw = rng.random_range(-3.0..3.0);
        let _ = state.move_cartesian(robot, Pose::from_xyz_rpy(t[0], t[1], t[2], 0.0, 0.0, yaw));
        let tcp = state.robot(robot).unwrap().tcp_pose;
        let part = state.part("Axle").unwrap();
        let hold = part.held_by.as_ref().unwrap();
        checked += 1;
        if part.pose != tcp.compose(&hold.grasp_offset) {
            broken += 1;
        }
    }
    (checked, broken)
}

fn random_pose(rng: &mut impl Rng) -> Pose {
    let mut r = || rng.random_range(-3.0..3.0);
    Pose::from_xyz_rpy(r(), r(), r(), r(), r(), r())
}

/// Largest deviation seen over `count` random triples for associativity,
/// inverse, identity and the translation formula.
pub fn pose_identities(count: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let id = Pose::identity();
    let mut worst = 0.0f64;
    for _ in 0..count {
        let (a, b, c) = (random_pose(&mut rng), random_pose(&mut rng), random_pose(&mut rng));
        worst = worst.max(a.compose(&b).compose(&c).max_abs_diff(&a.compose(&b.compose(&c))));
        worst = worst.max(a.compose(&a.inverse()).max_abs_diff(&id));
        worst = worst.max(a.inverse().compose(&a).max_abs_diff(&id));
        worst = worst.max(a.inverse().inverse().max_abs_diff(&a));
        worst = worst.max(id.compose(&a).max_abs_diff(&a).max(a.compose(&id).max_abs_diff(&a)));
        worst = worst.max(a.compose(&b).inverse().max_abs_diff(&b.inverse().compose(&a.inverse())));
        // translation of a ∘ b is R_a t_b + t_a
        let expected = a.rotation() * b.translation() + a.translation();
        worst = worst.max((a.compose(&b).translation() - expected).abs().max());
    }
    worst
}

/// Every script in the built-in library, the transcripts and the library
/// directory on disk, with a label.
pub fn script_corpus() -> Vec<(String, String)> {
    let mut corpus = Vec::new();
    for entry in walk(&assets().join("library")) {
        if entry.extension().is_some_and(|e| e == "wcs") {
            corpus.push((entry.display().to_string(), std::fs::read_to_string(&entry).unwrap()));
        }
    }
    for name in [
        "golden_truck.json",
        "random_motion.json",
        "pick_parts_gld.json",
        "pick_parts_dld.json",
        "kingpin_sequence.json",
        "kingpin_exhaustion.json",
        "stale_draft.json",
    ] {
        for (i, entry) in transcript(name).into_iter().enumerate() {
            if entry.response.contains("```wcs") {
                corpus.push((format!("{name}[{i}]"), extract_code_block(&entry.response).unwrap()));
            }
        }
    }
    corpus
}

fn walk(dir: &std::path::Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            out.extend(walk(&path));
        } else {
            out.push(path);
        }
    }
    out.sort();
    out
}

/// Checks parse ∘ format ∘ parse structural equality over the corpus;
/// returns the number of scripts checked.
pub fn format_round_trip() -> Result<usize, String> {
    let corpus = script_corpus();
    for (label, source) in &corpus {
        let first = wcs::parse(source).map_err(|e| format!("{label}: {e}"))?;
        let formatted = wcs::format(&first);
        let second = wcs::parse(&formatted).map_err(|e| format!("{label} (formatted): {e}\n{formatted}"))?;
        if first.without_spans() != second.without_spans() {
            return Err(format!("{label}: structure changed after formatting"));
        }
        if wcs::format(&second) != formatted {
            return Err(format!("{label}: formatting is not idempotent"));
        }
    }
    Ok(corpus.len())
}

const FRAGMENTS: &[&str] = &[
    "def ", "main", "(", ")", ":", "\n", "    ", "\t", "let ", "x", " = ", "1", "0.5", "\"s\"", "\"unterminated",
    "for ", " in ", "range(", "if ", "else", "elif ", "while ", "try", "except", " as ", "raise ", "return", "@",
    "+", "-", "*", "/", "==", "[", "]", "{", "}", ",", ".", "workcell", "robot.move_cartesian", "#", "\"\"\"",
    "\\", "é", "\r\n", "!", "$", "and ", "not ", "True", "None", "pass",
];

/// A random input of roughly `len` bytes made of language fragments and
/// arbitrary characters.
pub fn fuzz_input(rng: &mut impl Rng, len: usize) -> String {
    let mut s = String::with_capacity(len + 16);
    while s.len() < len {
        if rng.random_bool(0.85) {
            s.push_str(FRAGMENTS.choose(rng).unwrap());
        } else {
            s.push(rng.random::<char>());
        }
    }
    s
}

/// Loads each fuzz input, returning the slowest load and every error seen
/// together with its source.
pub fn fuzz_language(inputs: usize, len: usize, seed: u64) -> (Duration, Vec<(String, wcs::ScriptError)>) {
    let api = ApiCatalog::builtin();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut slowest = Duration::ZERO;
    let mut errors = Vec::new();
    for _ in 0..inputs {
        let source = fuzz_input(&mut rng, len);
        let started = Instant::now();
        let result = wcs::load(&source, &api);
        slowest = slowest.max(started.elapsed());
        if let Err(es) = result {
            for e in es.into_iter().take(3) {
                errors.push((source.clone(), e));
            }
        }
    }
    (slowest, errors)
}

/// Mutations of valid corpus scripts: one line replaced by junk.
pub fn mutated_corpus(seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (_, source) in script_corpus() {
        let mut lines: Vec<String> = source.lines().map(String::from).collect();
        for _ in 0..4 {
            let mut copy = lines.clone();
            let i = rng.random_range(0..copy.len());
            copy[i] = format!("{}{}", copy[i], fuzz_input(&mut rng, 6));
            out.push(copy.join("\n"));
        }
        lines.insert(rng.random_range(0..lines.len()), "    robot.grab_part(1)".into());
        out.push(lines.join("\n"));
    }
    out
}

/// The excerpt an error on `line` must carry.
pub fn expected_excerpt(source: &str, line: u32) -> &str {
    source.lines().nth(line as usize - 1).unwrap_or("")
}

/// A valid script of at least `len` bytes.
pub fn large_valid_script(len: usize) -> String {
    let mut s = String::from("def main(workcell):\n    let robot = workcell.get_robot(\"robot_left\")\n    let total = 0\n");
    let mut i = 0;
    while s.len() < len {
        s.push_str(&format!(
            "    for k{i} in range(3):\n        if k{i} == 1:\n            total = total + (k{i} * 2 - 1) / 3\n        else:\n            print(\"k\", k{i}, robot.tcp_pose.z)\n"
        ));
        i += 1;
    }
    s
}
