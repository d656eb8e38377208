//! The CAD-derived assembly dictionary.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::pose::Pose;
use super::ModelError;

fn default_part_size() -> [f64; 3] {
    [0.05, 0.05, 0.05]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Joint {
    pub part: String,
    pub kind: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartSpec {
    /// CAD-derived identifier.
    pub name: String,
    /// Generic language description; falls back to `name` when the document omits it.
    #[serde(default)]
    pub gld: String,
    #[serde(default)]
    pub part_class: String,
    #[serde(default)]
    pub mass: f64,
    pub design_pose: Pose,
    #[serde(default)]
    pub adjacent: Vec<String>,
    #[serde(default)]
    pub joints: Vec<Joint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subassembly: Option<String>,
    /// Axis-aligned bounding box extents in meters, used for collision checks.
    #[serde(default = "default_part_size")]
    pub size: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssemblySpec {
    pub assembly_name: String,
    pub origin_frame: Pose,
    pub parts: Vec<PartSpec>,
}

impl AssemblySpec {
    /// Parses and validates an assembly document.
    pub fn from_json(document: &str) -> Result<Self, ModelError> {
        let de = &mut serde_json::Deserializer::from_str(document);
        let mut spec: AssemblySpec = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if inner.is_syntax() || inner.is_eof() {
                ModelError::Json(inner)
            } else {
                ModelError::Schema { path, message: inner.to_string() }
            }
        })?;
        for part in &mut spec.parts {
            if part.gld.trim().is_empty() {
                part.gld = part.name.clone();
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ModelError::Io { path: path.display().to_string(), source: e })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("assembly serializes")
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let mut seen = HashSet::new();
        for (i, part) in self.parts.iter().enumerate() {
            if part.name.trim().is_empty() {
                return Err(ModelError::Schema {
                    path: format!("parts[{i}].name"),
                    message: "part name must be nonempty".into(),
                });
            }
            if !seen.insert(part.name.as_str()) {
                return Err(ModelError::Schema {
                    path: format!("parts[{i}].name"),
                    message: format!("duplicate part name '{}'", part.name),
                });
            }
            if part.mass.is_nan() || part.mass < 0.0 {
                return Err(ModelError::Schema {
                    path: format!("parts[{i}].mass"),
                    message: "mass must be a nonnegative number of kilograms".into(),
                });
            }
            if part.size.iter().any(|s| s.is_nan() || *s < 0.0) {
                return Err(ModelError::Schema {
                    path: format!("parts[{i}].size"),
                    message: "size extents must be nonnegative".into(),
                });
            }
        }

        let adjacency: HashMap<&str, &[String]> =
            self.parts.iter().map(|p| (p.name.as_str(), p.adjacent.as_slice())).collect();
        for (i, part) in self.parts.iter().enumerate() {
            for (j, other) in part.adjacent.iter().enumerate() {
                let path = format!("parts[{i}].adjacent[{j}]");
                let Some(back) = adjacency.get(other.as_str()) else {
                    return Err(ModelError::Reference {
                        path,
                        message: format!("unknown part '{other}'"),
                    });
                };
                if !back.iter().any(|n| n == &part.name) {
                    return Err(ModelError::Reference {
                        path,
                        message: format!(
                            "'{}' lists '{other}' as adjacent but '{other}' does not list '{}'",
                            part.name, part.name
                        ),
                    });
                }
            }
            for (j, joint) in part.joints.iter().enumerate() {
                if !adjacency.contains_key(joint.part.as_str()) {
                    return Err(ModelError::Reference {
                        path: format!("parts[{i}].joints[{j}].part"),
                        message: format!("unknown part '{}'", joint.part),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn part(&self, name: &str) -> Option<&PartSpec> {
        self.parts.iter().find(|p| p.name == name)
    }

    pub fn part_names(&self) -> Vec<&str> {
        self.parts.iter().map(|p| p.name.as_str()).collect()
    }

    pub fn are_adjacent(&self, a: &str, b: &str) -> bool {
        self.part(a).is_some_and(|p| p.adjacent.iter().any(|n| n == b))
    }

    /// Replaces the generic description of each named part.
    pub fn annotate_gld(&self, annotations: &BTreeMap<String, String>) -> Result<Self, ModelError> {
        let mut out = self.clone();
        for (name, gld) in annotations {
            let part = out
                .parts
                .iter_mut()
                .find(|p| &p.name == name)
                .ok_or_else(|| ModelError::UnknownPart(name.clone()))?;
            part.gld = gld.clone();
        }
        Ok(out)
    }

    /// Stable textual dictionary handed to the language model.
    pub fn render_context(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("assembly: {}\n", self.assembly_name));
        out.push_str(&format!("origin_frame: {}\n", self.origin_frame));
        out.push_str(&format!("parts: {}\n", self.parts.len()));
        for part in &self.parts {
            out.push_str(&format!("- name: {}\n", part.name));
            out.push_str(&format!("  gld: {}\n", part.gld));
            out.push_str(&format!("  class: {}\n", part.part_class));
            out.push_str(&format!("  mass_kg: {}\n", part.mass));
            out.push_str(&format!("  design_pose: {}\n", part.design_pose));
            out.push_str(&format!(
                "  size_m: [{}, {}, {}]\n",
                part.size[0], part.size[1], part.size[2]
            ));
            out.push_str(&format!("  adjacent: [{}]\n", part.adjacent.join(", ")));
            let joints: Vec<String> =
                part.joints.iter().map(|j| format!("{} ({})", j.part, j.kind)).collect();
            out.push_str(&format!("  joints: [{}]\n", joints.join(", ")));
            if let Some(group) = &part.subassembly {
                out.push_str(&format!("  subassembly: {group}\n"));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRUCK: &str = include_str!("../../assets/fixtures/truck_assembly.json");

    #[test]
    fn loads_truck() {
        let spec = AssemblySpec::from_json(TRUCK).unwrap();
        assert_eq!(
            spec.part_names(),
            ["Kingpin", "Wheel", "Bearing", "Nut", "Base", "Axle", "Hanger"]
        );
    }

    #[test]
    fn loads_empty() {
        let doc = format!(
            r#"{{"assembly_name":"empty","origin_frame":{},"parts":[]}}"#,
            serde_json::to_string(&Pose::identity()).unwrap()
        );
        let spec = AssemblySpec::from_json(&doc).unwrap();
        assert!(spec.parts.is_empty());
        assert_eq!(spec.render_context(), format!(
            "assembly: empty\norigin_frame: {}\nparts: 0\n",
            Pose::identity()
        ));
    }

    #[test]
    fn dangling_adjacency_names_its_path() {
        let mut value: serde_json::Value = serde_json::from_str(TRUCK).unwrap();
        value["parts"][5]["adjacent"][0] = "Hangar".into();
        let err = AssemblySpec::from_json(&value.to_string()).unwrap_err();
        match err {
            ModelError::Reference { path, message } => {
                assert_eq!(path, "parts[5].adjacent[0]");
                assert!(message.contains("Hangar"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn asymmetric_adjacency_rejected() {
        let mut value: serde_json::Value = serde_json::from_str(TRUCK).unwrap();
        // Wheel drops Bearing, Bearing still lists Wheel
        let wheel = value["parts"][1]["adjacent"].as_array_mut().unwrap();
        wheel.retain(|n| n != "Bearing");
        let err = AssemblySpec::from_json(&value.to_string()).unwrap_err();
        assert!(matches!(err, ModelError::Reference { .. }), "{err:?}");
    }

    #[test]
    fn schema_errors_carry_paths() {
        let mut value: serde_json::Value = serde_json::from_str(TRUCK).unwrap();
        value["parts"][2]["design_pose"] = serde_json::json!([1, 2, 3]);
        match AssemblySpec::from_json(&value.to_string()).unwrap_err() {
            ModelError::Schema { path, .. } => assert_eq!(path, "parts[2].design_pose"),
            other => panic!("unexpected {other:?}"),
        }
        let mut value: serde_json::Value = serde_json::from_str(TRUCK).unwrap();
        value["parts"][0].as_object_mut().unwrap().remove("name");
        match AssemblySpec::from_json(&value.to_string()).unwrap_err() {
            ModelError::Schema { path, message } => {
                assert_eq!(path, "parts[0]");
                assert!(message.contains("name"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let mut value: serde_json::Value = serde_json::from_str(TRUCK).unwrap();
        value["parts"][3]["mass"] = (-1.0).into();
        match AssemblySpec::from_json(&value.to_string()).unwrap_err() {
            ModelError::Schema { path, .. } => assert_eq!(path, "parts[3].mass"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_names_rejected() {
        let mut value: serde_json::Value = serde_json::from_str(TRUCK).unwrap();
        value["parts"][1]["name"] = "Kingpin".into();
        assert!(AssemblySpec::from_json(&value.to_string()).is_err());
    }

    #[test]
    fn defaults_fill_in() {
        let mut value: serde_json::Value = serde_json::from_str(TRUCK).unwrap();
        let nut = value["parts"][3].as_object_mut().unwrap();
        nut.remove("gld");
        nut.remove("mass");
        let spec = AssemblySpec::from_json(&value.to_string()).unwrap();
        assert_eq!(spec.parts[3].gld, "Nut");
        assert_eq!(spec.parts[3].mass, 0.0);
    }

    #[test]
    fn json_round_trip() {
        let spec = AssemblySpec::from_json(TRUCK).unwrap();
        let again = AssemblySpec::from_json(&spec.to_json()).unwrap();
        assert_eq!(spec, again);
    }

    #[test]
    fn annotate_replaces_gld() {
        let dld = AssemblySpec::from_json(include_str!(
            "../../assets/fixtures/truck_assembly_dld.json"
        ))
        .unwrap();
        let name = "Kingpin-Bolt-91257A662-Zinc-Plated-Hex-Head-Screw";
        assert_eq!(dld.part(name).unwrap().gld, name);
        let mut map = BTreeMap::new();
        map.insert(name.to_string(), "Kingpin".to_string());
        let annotated = dld.annotate_gld(&map).unwrap();
        assert_eq!(annotated.part(name).unwrap().gld, "Kingpin");
        // others untouched
        assert_eq!(annotated.parts[1], dld.parts[1]);

        assert_eq!(dld.annotate_gld(&BTreeMap::new()).unwrap(), dld);

        let mut bad = BTreeMap::new();
        bad.insert("NoSuchPart".to_string(), "x".to_string());
        assert!(matches!(dld.annotate_gld(&bad), Err(ModelError::UnknownPart(n)) if n == "NoSuchPart"));
    }

    #[test]
    fn render_matches_golden() {
        let spec = AssemblySpec::from_json(TRUCK).unwrap();
        let text = spec.render_context();
        assert_eq!(text, spec.render_context());
        assert_eq!(text, include_str!("../../assets/fixtures/truck_assembly.context.txt"));
    }
}
