mod common;

use asmgen_core::model::Pose;
use common::oracles::*;

#[test]
fn failed_scripts_leave_no_trace() {
    assert_eq!(failure_atomicity(200, 11), 200);
}

#[test]
fn collision_matches_brute_force() {
    let tally = collision_oracle(600, 12);
    assert_eq!(tally.disagreements, 0, "{tally:?}");
    assert!(tally.accepted > 50 && tally.rejected > 50, "{tally:?}");
}

#[test]
fn held_part_stays_rigid() {
    let (checked, broken) = held_rigidity(300, 13);
    assert_eq!((checked, broken), (300, 0));
}

#[test]
fn pose_algebra() {
    assert!(pose_identities(500, 14) < 1e-9);
}

#[test]
fn grazing_motion_is_not_a_collision() {
    let mut state = truck_state();
    let body = state.config().body();
    // vise top face at z = 0.15; body bottom sits at tcp.z + lift - size / 2
    let touching_z = 0.15 - body.lift + body.size / 2.0;
    let target = [0.0, 0.4, touching_z + 1e-9];
    assert!(!brute_force_collides(&state, "robot_left", target));
    state.move_cartesian("robot_left", Pose::from_translation(target[0], target[1], target[2])).unwrap();
    let below = [0.0, 0.4, touching_z - 0.001];
    assert!(brute_force_collides(&state, "robot_left", below));
    assert!(state.move_cartesian("robot_left", Pose::from_translation(below[0], below[1], below[2])).is_err());
}

