use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn assets() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/assets")
}

fn fixture(name: &str) -> String {
    assets().join("fixtures").join(name).display().to_string()
}

fn transcript(name: &str) -> String {
    format!("replay:{}", assets().join("transcripts").join(name).display())
}

fn asmgen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_asmgen")).args(args).output().unwrap()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn extract_script(transcript_file: &str, index: usize) -> String {
    let path = assets().join("transcripts").join(transcript_file);
    let entries: serde_json::Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    let response = entries[index]["response"].as_str().unwrap();
    let start = response.find("```wcs\n").unwrap() + "```wcs\n".len();
    let end = start + response[start..].find("```").unwrap();
    response[start..end].to_string()
}

#[test]
fn decompose_writes_a_plan() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.json");
    let out = asmgen(&[
        "decompose",
        "--design",
        &fixture("truck_assembly.json"),
        "--workcell",
        &fixture("truck_workcell.json"),
        "--task",
        "Assemble the Skateboard Truck",
        "--provider",
        &transcript("golden_truck.json"),
        "--out",
        plan.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let entries: Vec<serde_json::Value> = serde_json::from_str(&fs::read_to_string(&plan).unwrap()).unwrap();
    assert_eq!(entries.len(), 17);
    assert_eq!(entries[0]["behavior"], "Detect");
    assert!(!text(&out.stderr).contains("warning"));
}

#[test]
fn decompose_prints_warnings_and_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let tx = dir.path().join("tx.json");
    fs::write(
        &tx,
        r#"[{"expect_contains": ["Task: Pick the Kingpin"],
            "response": "[{\"subtask\": \"Pick Kingpin\", \"behavior\": \"Pick\", \"parts\": [\"Kingpin\"]}]"}]"#,
    )
    .unwrap();
    let out = asmgen(&[
        "decompose",
        "--design",
        &fixture("truck_assembly.json"),
        "--workcell",
        &fixture("truck_workcell.json"),
        "--task",
        "Pick the Kingpin",
        "--provider",
        &format!("replay:{}", tx.display()),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let stderr = text(&out.stderr);
    assert!(stderr.contains("warning:") && stderr.contains("Kingpin"), "{stderr}");
    assert!(text(&out.stdout).contains("\"Pick Kingpin\""));
}

#[test]
fn usage_errors_exit_with_one() {
    let out = asmgen(&["decompose", "--workcell", &fixture("truck_workcell.json"), "--task", "x"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("--design"));
    let out = asmgen(&[
        "decompose",
        "--design",
        &fixture("truck_assembly.json"),
        "--workcell",
        &fixture("truck_workcell.json"),
        "--task",
        "x",
        "--provider",
        "carrier-pigeon:coop",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("carrier-pigeon"));
    assert_eq!(asmgen(&["--help"]).status.code(), Some(0));
}

#[test]
fn run_golden_truck() {
    let dir = tempfile::tempdir().unwrap();
    let out = asmgen(&[
        "run",
        "--design",
        &fixture("truck_assembly.json"),
        "--workcell",
        &fixture("truck_workcell.json"),
        "--task",
        "Assemble the Skateboard Truck",
        "--provider",
        &transcript("golden_truck.json"),
        "--parallel-sga",
        "4",
        "--seed",
        "7",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert!(text(&out.stdout).starts_with("complete: 17/17 subtasks committed"));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["status"], "complete");
    assert!(dir.path().join("017_insert_insert_nut_onto_kingpin_bolt.wcs").is_file());
    assert!(dir.path().join("plan.json").is_file());
}

#[test]
fn run_exhaustion_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = asmgen(&[
        "run",
        "--design",
        &fixture("truck_assembly.json"),
        "--workcell",
        &fixture("truck_workcell.json"),
        "--task",
        "Mount the kingpin",
        "--provider",
        &transcript("kingpin_exhaustion.json"),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("failed after 5 attempts"));
    assert!(text(&out.stdout).starts_with("aborted:"));
    assert!(dir.path().join("report.md").is_file());
}

fn exec(script: &str, extra: &[&str]) -> Output {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("script.wcs");
    fs::write(&path, script).unwrap();
    let mut args = vec![
        "exec".to_string(),
        path.display().to_string(),
        "--design".into(),
        fixture("truck_assembly.json"),
        "--workcell".into(),
        fixture("truck_workcell.json"),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    asmgen(&refs)
}

#[test]
fn exec_pick_script() {
    let out = exec(&extract_script("pick_parts_gld.json", 11), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("holding Axle"), "{stdout}");
    assert!(stdout.contains("Axle: xyz=") && stdout.contains("held by robot_"));
}

#[test]
fn exec_reports_check_errors_with_caret() {
    let out = exec("def main(workcell):\n    let robot = workcell.get_robot(\"robot_left\")\n    robot.grab_part(\"Axle\")\n", &[]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = text(&out.stderr);
    assert!(stderr.contains("CheckError: unknown API function 'grab_part'"), "{stderr}");
    assert!(stderr.contains("at line 3"));
    assert!(stderr.contains("    robot.grab_part(\"Axle\")\n          ^"), "{stderr}");
}

#[test]
fn exec_reports_unreachable_positions() {
    let out = exec(&extract_script("random_motion.json", 1), &[]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = text(&out.stderr);
    assert!(stderr.contains("MotionException: unreachable position"), "{stderr}");
    assert!(stderr.contains("at line "));
}

#[test]
fn exec_state_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("state.json");
    let out = exec(&extract_script("pick_parts_gld.json", 11), &["--save-state", state.to_str().unwrap()]);
    assert!(out.status.success());
    let lift = "def main(workcell):\n    let robot = workcell.get_robot(\"robot_left\")\n    robot.move_cartesian(translation(0, 0, 0.1) @ robot.tcp_pose)\n";
    let out = exec(lift, &["--state", state.to_str().unwrap()]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert!(text(&out.stdout).contains("holding Axle"));
}
