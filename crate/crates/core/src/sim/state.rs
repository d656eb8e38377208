use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::collision::{first_hit, sample_point, BodyGeometry};
use crate::model::{Aabb, AssemblySpec, GripperSpec, Pose, WorkcellSpec};

/// Tunable simulator parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Max distance (m) between the tool and a part's grasp point for `pick`.
    pub grasp_tolerance: f64,
    /// Max residual (m) allowed after `place`/`insert`.
    pub insert_tolerance: f64,
    pub sweep_steps: u32,
    pub body_size: f64,
    pub body_lift: f64,
    /// Standard deviation (m) of the translation noise added by `detect`.
    pub detect_sigma: f64,
    /// Statement budget for one script run.
    pub max_steps: u64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            grasp_tolerance: 0.005,
            insert_tolerance: 1e-6,
            sweep_steps: 64,
            body_size: 0.15,
            body_lift: 0.12,
            detect_sigma: 0.0,
            max_steps: 1_000_000,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn body(&self) -> BodyGeometry {
        BodyGeometry { size: self.body_size, lift: self.body_lift }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SimErrorKind {
    MotionException,
    CollisionError,
    GripperMismatch,
    GraspFault,
    StateError,
}

impl SimErrorKind {
    pub fn name(self) -> &'static str {
        match self {
            SimErrorKind::MotionException => "MotionException",
            SimErrorKind::CollisionError => "CollisionError",
            SimErrorKind::GripperMismatch => "GripperMismatch",
            SimErrorKind::GraspFault => "GraspFault",
            SimErrorKind::StateError => "StateError",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimError {
    pub kind: SimErrorKind,
    pub message: String,
}

impl SimError {
    fn new(kind: SimErrorKind, message: impl Into<String>) -> Self {
        Self { kind, message: message.into() }
    }

    fn state(message: impl Into<String>) -> Self {
        Self::new(SimErrorKind::StateError, message)
    }
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind.name(), self.message)
    }
}

impl std::error::Error for SimError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub name: String,
    pub tcp_pose: Pose,
    pub workspace: Aabb,
    pub gripper: Option<String>,
    pub held_part: Option<String>,
    pub retract_pose: Pose,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hold {
    pub robot: String,
    pub grasp_offset: Pose,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartState {
    pub pose: Pose,
    pub held_by: Option<Hold>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GripperLocation {
    /// Parked in the rack slot with this index.
    Rack { slot: usize },
    Mounted { robot: String },
}

/// The dynamic part of the simulation, serialized by the state dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDump {
    pub robots: BTreeMap<String, RobotState>,
    pub grippers: BTreeMap<String, GripperLocation>,
    pub parts: BTreeMap<String, PartState>,
    pub step_counter: u64,
}

/// Complete simulator state. Cloning produces an independent deep copy.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkcellState {
    assembly: Arc<AssemblySpec>,
    workcell: Arc<WorkcellSpec>,
    config: SimConfig,
    robots: BTreeMap<String, RobotState>,
    grippers: BTreeMap<String, GripperLocation>,
    parts: BTreeMap<String, PartState>,
    step_counter: u64,
    rng: ChaCha8Rng,
}

/// An immutable snapshot that `restore` turns back into a live state.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub label: String,
    state: Arc<WorkcellState>,
}

impl Checkpoint {
    pub fn state(&self) -> &WorkcellState {
        &self.state
    }
}

impl WorkcellState {
    /// Fresh state: every robot at its retract pose with no gripper, every
    /// gripper in its rack slot, every part at its initial location.
    pub fn new(assembly: Arc<AssemblySpec>, workcell: Arc<WorkcellSpec>, config: SimConfig) -> Self {
        let robots = workcell
            .robots
            .iter()
            .map(|r| {
                let state = RobotState {
                    name: r.name.clone(),
                    tcp_pose: r.retract(),
                    workspace: r.workspace,
                    gripper: None,
                    held_part: None,
                    retract_pose: r.retract(),
                };
                (r.name.clone(), state)
            })
            .collect();
        let grippers = workcell
            .tool_rack
            .iter()
            .enumerate()
            .map(|(slot, s)| (s.gripper.name.clone(), GripperLocation::Rack { slot }))
            .collect();
        let parts = assembly
            .parts
            .iter()
            .map(|p| {
                let pose = workcell.initial_part_locations.get(&p.name).copied().unwrap_or(p.design_pose);
                (p.name.clone(), PartState { pose, held_by: None })
            })
            .collect();
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Self { assembly, workcell, config, robots, grippers, parts, step_counter: 0, rng }
    }

    pub fn assembly(&self) -> &AssemblySpec {
        &self.assembly
    }

    pub fn workcell(&self) -> &WorkcellSpec {
        &self.workcell
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn robots(&self) -> &BTreeMap<String, RobotState> {
        &self.robots
    }

    pub fn parts(&self) -> &BTreeMap<String, PartState> {
        &self.parts
    }

    pub fn grippers(&self) -> &BTreeMap<String, GripperLocation> {
        &self.grippers
    }

    pub fn step_counter(&self) -> u64 {
        self.step_counter
    }

    pub fn checkpoint(&self, label: impl Into<String>) -> Checkpoint {
        Checkpoint { label: label.into(), state: Arc::new(self.clone()) }
    }

    pub fn restore(checkpoint: &Checkpoint) -> WorkcellState {
        (*checkpoint.state).clone()
    }

    pub fn dump(&self) -> StateDump {
        StateDump {
            robots: self.robots.clone(),
            grippers: self.grippers.clone(),
            parts: self.parts.clone(),
            step_counter: self.step_counter,
        }
    }

    pub fn dump_json(&self) -> String {
        serde_json::to_string_pretty(&self.dump()).expect("state dump serializes")
    }

    /// Replaces the dynamic state with a previously dumped one.
    pub fn load_dump(&mut self, dump: StateDump) -> Result<(), SimError> {
        let mut next = self.clone();
        next.robots = dump.robots;
        next.grippers = dump.grippers;
        next.parts = dump.parts;
        next.step_counter = dump.step_counter;
        let same_keys = next.robots.keys().eq(self.robots.keys())
            && next.grippers.keys().eq(self.grippers.keys())
            && next.parts.keys().eq(self.parts.keys());
        if !same_keys {
            return Err(SimError::state("state dump does not match the workcell and assembly"));
        }
        next.check_invariants().map_err(SimError::state)?;
        *self = next;
        Ok(())
    }

    /// Verifies the structural invariants; used by tests and `load_dump`.
    pub fn check_invariants(&self) -> Result<(), String> {
        for (name, part) in &self.parts {
            if let Some(hold) = &part.held_by {
                let robot = self.robots.get(&hold.robot).ok_or(format!("{name} held by unknown robot"))?;
                if robot.held_part.as_deref() != Some(name) {
                    return Err(format!("{name} held by {} but the robot disagrees", hold.robot));
                }
                if part.pose != robot.tcp_pose.compose(&hold.grasp_offset) {
                    return Err(format!("{name} is not rigidly attached to {}", hold.robot));
                }
            }
        }
        for (name, robot) in &self.robots {
            if let Some(p) = &robot.held_part {
                let held_by = self.parts.get(p).and_then(|s| s.held_by.as_ref()).map(|h| h.robot.as_str());
                if held_by != Some(name.as_str()) {
                    return Err(format!("{name} claims to hold {p}"));
                }
                if robot.gripper.is_none() {
                    return Err(format!("{name} holds {p} without a gripper"));
                }
            }
            if let Some(g) = &robot.gripper {
                if self.grippers.get(g) != Some(&GripperLocation::Mounted { robot: name.clone() }) {
                    return Err(format!("{name} mounts {g} but the rack disagrees"));
                }
            }
            if !robot.workspace.contains(robot.tcp_pose.xyz()) {
                return Err(format!("{name} is outside its workspace"));
            }
        }
        let mut slots = std::collections::BTreeSet::new();
        for (g, loc) in &self.grippers {
            match loc {
                GripperLocation::Rack { slot } => {
                    if !slots.insert(*slot) || *slot >= self.workcell.tool_rack.len() {
                        return Err(format!("{g} is in an invalid or shared slot"));
                    }
                }
                GripperLocation::Mounted { robot } => {
                    if self.robots.get(robot).and_then(|r| r.gripper.as_deref()) != Some(g) {
                        return Err(format!("{g} mounted on {robot} but the robot disagrees"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn robot(&self, name: &str) -> Result<&RobotState, SimError> {
        self.robots.get(name).ok_or_else(|| {
            let names: Vec<&str> = self.robots.keys().map(String::as_str).collect();
            SimError::state(format!("unknown robot '{name}' (available: {})", names.join(", ")))
        })
    }

    pub fn part(&self, name: &str) -> Result<&PartState, SimError> {
        self.parts.get(name).ok_or_else(|| SimError::state(format!("unknown part '{name}'")))
    }

    fn gripper_spec(&self, name: &str) -> Result<&GripperSpec, SimError> {
        self.workcell.gripper(name).ok_or_else(|| {
            let names: Vec<&str> = self.workcell.tool_rack.iter().map(|s| s.gripper.name.as_str()).collect();
            SimError::state(format!("unknown gripper '{name}' (available: {})", names.join(", ")))
        })
    }

    /// World pose of the assembly frame.
    pub fn anchor_pose(&self) -> Pose {
        let anchor = self.workcell.anchor_station().map(|s| s.pose).unwrap_or_default();
        anchor.compose(&self.assembly.origin_frame)
    }

    /// World pose a part has in the finished assembly.
    pub fn design_pose(&self, part: &str) -> Result<Pose, SimError> {
        let spec = self.assembly.part(part).ok_or_else(|| SimError::state(format!("unknown part '{part}'")))?;
        Ok(self.anchor_pose().compose(&spec.design_pose))
    }

    /// Where `part` must go when inserted into (or placed relative to)
    /// `target`, given where `target` currently is.
    pub fn design_relative_pose(&self, part: &str, target: &str) -> Result<Pose, SimError> {
        let part_design = self.assembly.part(part).ok_or_else(|| SimError::state(format!("unknown part '{part}'")))?;
        let target_design =
            self.assembly.part(target).ok_or_else(|| SimError::state(format!("unknown part '{target}'")))?;
        let target_now = self.part(target)?.pose;
        Ok(target_now.compose(&target_design.design_pose.inverse()).compose(&part_design.design_pose))
    }

    pub fn station_pose(&self, station: &str) -> Result<Pose, SimError> {
        self.workcell
            .station(station)
            .map(|s| s.pose)
            .ok_or_else(|| SimError::state(format!("unknown station '{station}'")))
    }

    /// Tool pose at which `gripper` grasps `part` where it currently lies.
    pub fn grasp_pose(&self, part: &str, gripper: &str) -> Result<Pose, SimError> {
        let offset = self.gripper_spec(gripper)?.grasp_offset;
        Ok(self.part(part)?.pose.compose(&offset.inverse()))
    }

    pub fn part_aabb(&self, name: &str) -> Option<Aabb> {
        let state = self.parts.get(name)?;
        let spec = self.assembly.part(name)?;
        let half = Vector3::new(spec.size[0], spec.size[1], spec.size[2]) / 2.0;
        let extent = state.pose.rotation().abs() * half;
        Some(Aabb::from_center(state.pose.xyz(), [extent.x * 2.0, extent.y * 2.0, extent.z * 2.0]))
    }

    /// Everything `robot` can collide with, in a fixed order.
    pub fn obstacles_for(&self, robot: &str) -> Vec<(String, Aabb)> {
        let mut out: Vec<(String, Aabb)> =
            self.workcell.stations.iter().map(|s| (s.name.clone(), s.aabb())).collect();
        for (name, part) in &self.parts {
            if part.held_by.as_ref().is_some_and(|h| h.robot == robot) {
                continue;
            }
            if let Some(b) = self.part_aabb(name) {
                out.push((name.clone(), b));
            }
        }
        let body = self.config.body();
        for (name, other) in &self.robots {
            if name != robot {
                out.push((name.clone(), body.at(other.tcp_pose.xyz())));
            }
        }
        out
    }

    /// First obstacle hit when moving `robot`'s tool in a straight line to
    /// `target`, with the sample index of the hit.
    pub fn sweep(&self, robot: &str, target: [f64; 3]) -> Option<(String, u32)> {
        let from = self.robots.get(robot)?.tcp_pose.xyz();
        let body = self.config.body();
        let steps = self.config.sweep_steps.max(1);
        let mut best: Option<(String, u32)> = None;
        for (name, aabb) in self.obstacles_for(robot) {
            if let Some(k) = first_hit(&body, from, target, steps, &aabb) {
                if best.as_ref().is_none_or(|(_, bk)| k < *bk) {
                    best = Some((name, k));
                }
            }
        }
        best
    }

    pub fn move_cartesian(&mut self, robot: &str, target: Pose) -> Result<(), SimError> {
        let state = self.robot(robot)?;
        let [x, y, z] = target.xyz();
        if !state.workspace.contains([x, y, z]) {
            return Err(SimError::new(
                SimErrorKind::MotionException,
                format!("unreachable position ({x:.4}, {y:.4}, {z:.4}) for {robot}"),
            ));
        }
        if let Some((obstacle, k)) = self.sweep(robot, [x, y, z]) {
            let from = state.tcp_pose.xyz();
            let at = sample_point(from, [x, y, z], k, self.config.sweep_steps.max(1));
            return Err(SimError::new(
                SimErrorKind::CollisionError,
                format!(
                    "collision between {robot} and {obstacle} near ({:.4}, {:.4}, {:.4})",
                    at[0], at[1], at[2]
                ),
            ));
        }
        let state = self.robots.get_mut(robot).expect("checked above");
        state.tcp_pose = target;
        if let Some(part) = state.held_part.clone() {
            let p = self.parts.get_mut(&part).expect("held part exists");
            let offset = p.held_by.as_ref().expect("held part has a hold").grasp_offset;
            p.pose = target.compose(&offset);
        }
        self.step_counter += 1;
        Ok(())
    }

    pub fn retract(&mut self, robot: &str) -> Result<(), SimError> {
        let target = self.robot(robot)?.retract_pose;
        self.move_cartesian(robot, target)
    }

    pub fn attach_gripper(&mut self, robot: &str, gripper: &str) -> Result<(), SimError> {
        let state = self.robot(robot)?;
        self.gripper_spec(gripper)?;
        if let Some(part) = &state.held_part {
            return Err(SimError::new(
                SimErrorKind::GraspFault,
                format!("{robot} cannot change grippers while holding {part}"),
            ));
        }
        match self.grippers.get(gripper) {
            Some(GripperLocation::Mounted { robot: owner }) if owner == robot => return Ok(()),
            Some(GripperLocation::Mounted { robot: owner }) => {
                return Err(SimError::state(format!("gripper '{gripper}' is already mounted on {owner}")))
            }
            _ => {}
        }
        if let Some(current) = state.gripper.clone() {
            let slot = self
                .workcell
                .tool_rack
                .iter()
                .position(|s| s.gripper.name == current)
                .expect("mounted gripper comes from the rack");
            self.grippers.insert(current, GripperLocation::Rack { slot });
        }
        self.grippers.insert(gripper.to_string(), GripperLocation::Mounted { robot: robot.to_string() });
        self.robots.get_mut(robot).expect("checked").gripper = Some(gripper.to_string());
        self.step_counter += 1;
        Ok(())
    }

    pub fn pick(&mut self, robot: &str, part: &str) -> Result<(), SimError> {
        let state = self.robot(robot)?;
        let part_state = self.part(part)?;
        if let Some(held) = &state.held_part {
            return Err(SimError::new(SimErrorKind::GraspFault, format!("{robot} is already holding {held}")));
        }
        if let Some(hold) = &part_state.held_by {
            return Err(SimError::new(SimErrorKind::GraspFault, format!("{part} is already held by {}", hold.robot)));
        }
        let Some(gripper) = state.gripper.as_deref() else {
            return Err(SimError::state(format!("{robot} has no gripper mounted; call attach_gripper first")));
        };
        let spec = self.gripper_spec(gripper)?;
        let class = &self.assembly.part(part).expect("parts mirror the assembly").part_class;
        if !spec.compatible_classes.iter().any(|c| c == class) {
            return Err(SimError::new(
                SimErrorKind::GripperMismatch,
                format!(
                    "gripper '{gripper}' cannot grasp part '{part}' of class '{class}' (it handles: {})",
                    spec.compatible_classes.join(", ")
                ),
            ));
        }
        let grasp_point = part_state.pose.compose(&spec.grasp_offset.inverse());
        let distance = state.tcp_pose.distance(&grasp_point);
        if distance > self.config.grasp_tolerance {
            return Err(SimError::new(
                SimErrorKind::GraspFault,
                format!(
                    "not within grasp tolerance: the tool is {distance:.4} m from the grasp pose of {part} (tolerance {} m)",
                    self.config.grasp_tolerance
                ),
            ));
        }
        let tcp = state.tcp_pose;
        let offset = tcp.inverse().compose(&part_state.pose);
        let p = self.parts.get_mut(part).expect("checked");
        p.pose = tcp.compose(&offset);
        p.held_by = Some(Hold { robot: robot.to_string(), grasp_offset: offset });
        self.robots.get_mut(robot).expect("checked").held_part = Some(part.to_string());
        self.step_counter += 1;
        Ok(())
    }

    fn holding(&self, robot: &str, part: &str) -> Result<Pose, SimError> {
        let state = self.robot(robot)?;
        self.part(part)?;
        if state.held_part.as_deref() != Some(part) {
            return Err(SimError::state(format!("{robot} is not holding {part}")));
        }
        Ok(self.parts[part].held_by.as_ref().expect("consistent hold").grasp_offset)
    }

    fn release_at(&mut self, robot: &str, part: &str, target: Pose) -> Result<(), SimError> {
        let offset = self.holding(robot, part)?;
        self.move_cartesian(robot, target.compose(&offset.inverse()))?;
        let residual = self.parts[part].pose.distance(&target);
        if residual > self.config.insert_tolerance {
            return Err(SimError::new(
                SimErrorKind::MotionException,
                format!("{part} ended {residual:.2e} m from its target"),
            ));
        }
        let p = self.parts.get_mut(part).expect("checked");
        p.held_by = None;
        self.robots.get_mut(robot).expect("checked").held_part = None;
        Ok(())
    }

    pub fn place(&mut self, robot: &str, part: &str, target: Pose) -> Result<(), SimError> {
        self.release_at(robot, part, target)
    }

    pub fn insert(&mut self, robot: &str, part: &str, target_part: &str) -> Result<(), SimError> {
        self.holding(robot, part)?;
        self.part(target_part)?;
        if part == target_part || !self.assembly.are_adjacent(part, target_part) {
            return Err(SimError::state(format!("{part} is not adjacent to {target_part} in the assembly")));
        }
        let target = self.design_relative_pose(part, target_part)?;
        self.release_at(robot, part, target)
    }

    pub fn detect(&mut self, part: &str) -> Result<Pose, SimError> {
        let pose = self.part(part)?.pose;
        let sigma = self.config.detect_sigma;
        if sigma <= 0.0 {
            return Ok(pose);
        }
        let normal = Normal::new(0.0, sigma).map_err(|e| SimError::state(e.to_string()))?;
        let [x, y, z] = pose.xyz();
        let noise: [f64; 3] = [0; 3].map(|_| normal.sample(&mut self.rng));
        Ok(pose.with_translation(x + noise[0], y + noise[1], z + noise[2]))
    }

    /// Uniform draw from the state's seeded generator.
    pub fn random_uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.rng.random::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn truck() -> WorkcellState {
        let assembly = AssemblySpec::from_json(include_str!("../../assets/fixtures/truck_assembly.json")).unwrap();
        let workcell =
            WorkcellSpec::from_json(include_str!("../../assets/fixtures/truck_workcell.json"), &assembly).unwrap();
        WorkcellState::new(Arc::new(assembly), Arc::new(workcell), SimConfig::default())
    }

    fn above(p: Pose, dz: f64) -> Pose {
        let [x, y, z] = p.xyz();
        p.with_translation(x, y, z + dz)
    }

    #[test]
    fn initial_state_matches_fixture() {
        let s = truck();
        for (name, loc) in &s.workcell().initial_part_locations {
            assert_eq!(s.parts()[name].pose, *loc);
        }
        assert!(s.check_invariants().is_ok());
        let cp = s.checkpoint("initial");
        assert_eq!(WorkcellState::restore(&cp), s);
    }

    #[test]
    fn checkpoint_restore_after_mutation() {
        let mut s = truck();
        let cp = s.checkpoint("before");
        s.attach_gripper("robot_left", "All-Purpose Gripper").unwrap();
        s.move_cartesian("robot_left", Pose::from_translation(-0.2, 0.0, 0.4)).unwrap();
        assert_ne!(s, *cp.state());
        let a = WorkcellState::restore(&cp);
        let b = WorkcellState::restore(&cp);
        assert_eq!(a, b);
        assert_eq!(a, *cp.state());
    }

    #[test]
    fn far_target_is_unreachable() {
        let mut s = truck();
        let e = s.move_cartesian("robot_left", Pose::from_translation(0.0, 0.0, 10.0)).unwrap_err();
        assert_eq!(e.kind, SimErrorKind::MotionException);
        assert!(e.message.contains("unreachable position"));
    }

    #[test]
    fn sweeping_through_the_vise_collides() {
        let mut s = truck();
        s.move_cartesian("robot_left", Pose::from_translation(-0.3, 0.4, 0.05)).unwrap();
        let e = s.move_cartesian("robot_left", Pose::from_translation(0.3, 0.4, 0.05)).unwrap_err();
        assert_eq!(e.kind, SimErrorKind::CollisionError);
        assert!(e.message.contains("robot_left and vise"), "{e}");
    }

    #[test]
    fn pick_rules() {
        let mut s = truck();
        let kingpin = s.parts()["Kingpin"].pose;
        let e = s.pick("robot_left", "Kingpin").unwrap_err();
        assert_eq!(e.kind, SimErrorKind::StateError);

        s.attach_gripper("robot_left", "All-Purpose Gripper").unwrap();
        s.move_cartesian("robot_left", above(kingpin, 0.1)).unwrap();
        s.move_cartesian("robot_left", kingpin).unwrap();
        let e = s.pick("robot_left", "Kingpin").unwrap_err();
        assert_eq!(e.kind, SimErrorKind::GripperMismatch);
        for word in ["All-Purpose Gripper", "Kingpin", "kingpin_bolt"] {
            assert!(e.message.contains(word));
        }

        s.attach_gripper("robot_left", "Custom Kingpin Gripper").unwrap();
        assert_eq!(s.grippers()["All-Purpose Gripper"], GripperLocation::Rack { slot: 1 });
        s.move_cartesian("robot_left", above(kingpin, 0.1)).unwrap();
        let e = s.pick("robot_left", "Kingpin").unwrap_err();
        assert_eq!(e.kind, SimErrorKind::GraspFault);
        assert!(e.message.contains("not within grasp tolerance"));

        s.move_cartesian("robot_left", kingpin).unwrap();
        s.pick("robot_left", "Kingpin").unwrap();
        assert_eq!(s.parts()["Kingpin"].held_by.as_ref().unwrap().robot, "robot_left");
        let e = s.attach_gripper("robot_left", "All-Purpose Gripper").unwrap_err();
        assert_eq!(e.kind, SimErrorKind::GraspFault);
        assert!(s.check_invariants().is_ok());
    }

    #[test]
    fn gripper_on_other_robot() {
        let mut s = truck();
        s.attach_gripper("robot_right", "Ratcheting Gripper").unwrap();
        let e = s.attach_gripper("robot_left", "Ratcheting Gripper").unwrap_err();
        assert_eq!(e.kind, SimErrorKind::StateError);
    }

    #[test]
    fn detect_exact_and_unknown() {
        let mut s = truck();
        assert_eq!(s.detect("Axle").unwrap(), s.workcell().initial_part_locations["Axle"]);
        assert_eq!(s.detect("Deck").unwrap_err().kind, SimErrorKind::StateError);
    }

    #[test]
    fn detect_noise_statistics() {
        let mut s = truck();
        s.config.detect_sigma = 0.001;
        let truth = s.parts()["Axle"].pose.translation();
        let mut sum = Vector3::zeros();
        for _ in 0..1000 {
            let d = s.detect("Axle").unwrap().translation() - truth;
            assert!(d.amax() < 0.006);
            sum += d;
        }
        assert!((sum / 1000.0).norm() < 0.0002);
    }

    #[test]
    fn insert_requires_adjacency() {
        let mut s = truck();
        let nut = s.parts()["Nut"].pose;
        s.attach_gripper("robot_left", "Ratcheting Gripper").unwrap();
        s.move_cartesian("robot_left", above(nut, 0.1)).unwrap();
        s.move_cartesian("robot_left", nut).unwrap();
        s.pick("robot_left", "Nut").unwrap();
        let e = s.insert("robot_left", "Nut", "Wheel").unwrap_err();
        assert_eq!(e.kind, SimErrorKind::StateError);
        assert!(e.message.contains("not adjacent"));
    }

    #[test]
    fn retract_is_idempotent() {
        let mut s = truck();
        s.retract("robot_left").unwrap();
        assert_eq!(s.robots()["robot_left"].tcp_pose, s.robots()["robot_left"].retract_pose);
    }

    #[test]
    fn dump_round_trip() {
        let mut s = truck();
        s.attach_gripper("robot_right", "Ratcheting Gripper").unwrap();
        let json = s.dump_json();
        let dump: StateDump = serde_json::from_str(&json).unwrap();
        let mut fresh = truck();
        fresh.load_dump(dump).unwrap();
        assert_eq!(fresh.dump(), s.dump());
    }
}
