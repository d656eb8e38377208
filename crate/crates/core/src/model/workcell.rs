//! Static description of the robot cell: robots, tool rack, stations and
//! where each part starts out.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::assembly::AssemblySpec;
use super::pose::Pose;
use super::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Aabb {
    pub fn from_center(center: [f64; 3], size: [f64; 3]) -> Self {
        Self {
            min: [0, 1, 2].map(|i| center[i] - size[i] / 2.0),
            max: [0, 1, 2].map(|i| center[i] + size[i] / 2.0),
        }
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    /// Strict overlap: touching faces do not count.
    pub fn overlaps(&self, other: &Aabb) -> bool {
        (0..3).all(|i| self.min[i] < other.max[i] && other.min[i] < self.max[i])
    }

    pub fn center(&self) -> [f64; 3] {
        [0, 1, 2].map(|i| (self.min[i] + self.max[i]) / 2.0)
    }

    pub fn half_extents(&self) -> [f64; 3] {
        [0, 1, 2].map(|i| (self.max[i] - self.min[i]) / 2.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotSpec {
    pub name: String,
    pub base_pose: Pose,
    pub workspace: Aabb,
    /// Safe pose the robot returns to; also its starting TCP pose.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retract_pose: Option<Pose>,
}

impl RobotSpec {
    pub fn retract(&self) -> Pose {
        self.retract_pose.unwrap_or_else(|| {
            self.base_pose.compose(&Pose::from_translation(0.0, 0.0, 0.5))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GripperSpec {
    pub name: String,
    pub description: String,
    pub compatible_classes: Vec<String>,
    /// TCP→part transform expected when a part is grasped.
    #[serde(default)]
    pub grasp_offset: Pose,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RackSlot {
    pub slot_pose: Pose,
    pub gripper: GripperSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StationKind {
    Bin,
    Kit,
    Vise,
    Rack,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationSpec {
    pub name: String,
    pub pose: Pose,
    pub kind: StationKind,
    /// Collision box extents centered on `pose`.
    #[serde(default = "default_station_size")]
    pub size: [f64; 3],
}

fn default_station_size() -> [f64; 3] {
    [0.2, 0.2, 0.1]
}

impl StationSpec {
    pub fn aabb(&self) -> Aabb {
        Aabb::from_center(self.pose.xyz(), self.size)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkcellSpec {
    pub robots: Vec<RobotSpec>,
    pub tool_rack: Vec<RackSlot>,
    pub stations: Vec<StationSpec>,
    pub initial_part_locations: BTreeMap<String, Pose>,
    /// Station whose pose anchors the assembly frame. Defaults to the first vise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assembly_station: Option<String>,
}

impl WorkcellSpec {
    /// Parses a workcell document and validates it against its companion assembly.
    pub fn from_json(document: &str, assembly: &AssemblySpec) -> Result<Self, ModelError> {
        let de = &mut serde_json::Deserializer::from_str(document);
        let spec: WorkcellSpec = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if inner.is_syntax() || inner.is_eof() {
                ModelError::Json(inner)
            } else {
                ModelError::Schema { path, message: inner.to_string() }
            }
        })?;
        spec.validate(assembly)?;
        Ok(spec)
    }

    pub fn from_file(path: &std::path::Path, assembly: &AssemblySpec) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ModelError::Io { path: path.display().to_string(), source: e })?;
        Self::from_json(&text, assembly)
    }

    pub fn validate(&self, assembly: &AssemblySpec) -> Result<(), ModelError> {
        let mut robots = HashSet::new();
        for (i, r) in self.robots.iter().enumerate() {
            if !robots.insert(r.name.as_str()) {
                return Err(ModelError::Schema {
                    path: format!("robots[{i}].name"),
                    message: format!("duplicate robot name '{}'", r.name),
                });
            }
            if (0..3).any(|k| r.workspace.min[k] > r.workspace.max[k]) {
                return Err(ModelError::Schema {
                    path: format!("robots[{i}].workspace"),
                    message: "workspace min exceeds max".into(),
                });
            }
        }
        let mut grippers = HashSet::new();
        for (i, slot) in self.tool_rack.iter().enumerate() {
            if !grippers.insert(slot.gripper.name.as_str()) {
                return Err(ModelError::Schema {
                    path: format!("tool_rack[{i}].gripper.name"),
                    message: format!("duplicate gripper name '{}'", slot.gripper.name),
                });
            }
        }
        let mut stations = HashSet::new();
        for (i, s) in self.stations.iter().enumerate() {
            if !stations.insert(s.name.as_str()) {
                return Err(ModelError::Schema {
                    path: format!("stations[{i}].name"),
                    message: format!("duplicate station name '{}'", s.name),
                });
            }
        }
        if let Some(anchor) = &self.assembly_station {
            if !stations.contains(anchor.as_str()) {
                return Err(ModelError::Reference {
                    path: "assembly_station".into(),
                    message: format!("unknown station '{anchor}'"),
                });
            }
        }
        for name in self.initial_part_locations.keys() {
            if assembly.part(name).is_none() {
                return Err(ModelError::Reference {
                    path: format!("initial_part_locations.{name}"),
                    message: format!("part '{name}' is not in assembly '{}'", assembly.assembly_name),
                });
            }
        }
        Ok(())
    }

    pub fn gripper(&self, name: &str) -> Option<&GripperSpec> {
        self.tool_rack.iter().map(|s| &s.gripper).find(|g| g.name == name)
    }

    pub fn station(&self, name: &str) -> Option<&StationSpec> {
        self.stations.iter().find(|s| s.name == name)
    }

    /// The station the assembly frame is anchored to.
    pub fn anchor_station(&self) -> Option<&StationSpec> {
        match &self.assembly_station {
            Some(name) => self.station(name),
            None => self.stations.iter().find(|s| s.kind == StationKind::Vise),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("workcell serializes")
    }

    pub fn render_context(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("robots: {}\n", self.robots.len()));
        for r in &self.robots {
            out.push_str(&format!("- name: {}\n", r.name));
            out.push_str(&format!("  base_pose: {}\n", r.base_pose));
            out.push_str(&format!("  retract_pose: {}\n", r.retract()));
            out.push_str(&format!(
                "  workspace_m: min {:?} max {:?}\n",
                r.workspace.min, r.workspace.max
            ));
        }
        out.push_str(&format!("grippers: {}\n", self.tool_rack.len()));
        for slot in &self.tool_rack {
            let g = &slot.gripper;
            out.push_str(&format!("- name: {}\n", g.name));
            out.push_str(&format!("  description: {}\n", g.description));
            out.push_str(&format!("  compatible_classes: [{}]\n", g.compatible_classes.join(", ")));
            out.push_str(&format!("  grasp_offset: {}\n", g.grasp_offset));
            out.push_str(&format!("  slot_pose: {}\n", slot.slot_pose));
        }
        out.push_str(&format!("stations: {}\n", self.stations.len()));
        for s in &self.stations {
            let kind = serde_json::to_value(s.kind).expect("kind serializes");
            out.push_str(&format!("- name: {}\n", s.name));
            out.push_str(&format!("  kind: {}\n", kind.as_str().unwrap_or_default()));
            out.push_str(&format!("  pose: {}\n", s.pose));
        }
        if let Some(anchor) = self.anchor_station() {
            out.push_str(&format!("assembly_station: {}\n", anchor.name));
        }
        out.push_str("initial_part_locations:\n");
        for (name, pose) in &self.initial_part_locations {
            out.push_str(&format!("  {name}: {pose}\n"));
        }
        out
    }
}
