//! JSON model files.

use std::collections::BTreeSet;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::{spatial_inertia, BodySpec, JointKind, JointSpec, RobotModel};
use crate::error::{Error, Result};
use crate::liegroup::Pose;
use crate::STANDARD_GRAVITY;

/// On-disk representation of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    #[serde(default = "default_gravity")]
    pub gravity: f64,
    pub bodies: Vec<BodyEntry>,
}

fn default_gravity() -> f64 {
    STANDARD_GRAVITY
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyEntry {
    pub id: usize,
    pub parent: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joint: Option<JointEntry>,
    #[serde(rename = "A")]
    pub a: PoseEntry,
    pub inertia: InertiaEntry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointEntry {
    pub kind: JointKind,
    pub axis: [f64; 3],
    #[serde(default)]
    pub point: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rpy: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotmat: Option<[[f64; 3]; 3]>,
    #[serde(default)]
    pub xyz: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InertiaEntry {
    pub mass: f64,
    #[serde(default)]
    pub com_offset: [f64; 3],
    #[serde(rename = "J")]
    pub j: [[f64; 3]; 3],
}

fn parse_err(path: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        message: message.into(),
    }
}

impl ModelFile {
    /// Converts to body specs, reporting malformed entries with their body id.
    pub fn to_specs(&self, path: &str) -> Result<Vec<BodySpec>> {
        let mut seen = BTreeSet::new();
        let mut specs = Vec::with_capacity(self.bodies.len());
        for (idx, b) in self.bodies.iter().enumerate() {
            if !seen.insert(b.id) {
                return Err(parse_err(path, format!("bodies[{idx}]: duplicate body id {}", b.id)));
            }
            if b.com_offset_nonzero() {
                return Err(parse_err(
                    path,
                    format!("bodies[{idx}].inertia.com_offset: body {} must have its frame at the CoM", b.id),
                ));
            }
            let rotation = match (&b.a.rpy, &b.a.rotmat) {
                (Some(_), Some(_)) => {
                    return Err(parse_err(path, format!("bodies[{idx}].A: give either rpy or rotmat, not both")))
                }
                (Some(rpy), None) => Pose::from_rpy(rpy[0], rpy[1], rpy[2], Vector3::zeros()).rotation,
                (None, Some(m)) => Matrix3::from_fn(|r, c| m[r][c]),
                (None, None) => Matrix3::identity(),
            };
            let home = Pose::new(rotation, Vector3::from(b.a.xyz));
            let joint = b.joint.as_ref().map(|j| JointSpec {
                kind: j.kind,
                axis: Vector3::from(j.axis),
                point: match j.kind {
                    JointKind::Revolute => Vector3::from(j.point),
                    JointKind::Prismatic => Vector3::zeros(),
                },
            });
            let j = Matrix3::from_fn(|r, c| b.inertia.j[r][c]);
            specs.push(BodySpec {
                id: b.id,
                parent: b.parent,
                joint,
                home,
                inertia: spatial_inertia(b.inertia.mass, &j),
            });
        }
        Ok(specs)
    }

    /// Canonical form of a model: rotation matrices, bodies sorted by id.
    pub fn from_model(model: &RobotModel) -> Self {
        let bodies = model
            .bodies()
            .iter()
            .map(|b| {
                let r = b.home.rotation;
                let m = &b.inertia;
                BodyEntry {
                    id: b.id,
                    parent: b.parent,
                    joint: b.joint.map(|j| JointEntry {
                        kind: j.kind,
                        axis: j.axis.into(),
                        point: j.point.into(),
                    }),
                    a: PoseEntry {
                        rpy: None,
                        rotmat: Some(std::array::from_fn(|i| std::array::from_fn(|k| r[(i, k)]))),
                        xyz: b.home.translation.into(),
                    },
                    inertia: InertiaEntry {
                        mass: m[(3, 3)],
                        com_offset: [0.0; 3],
                        j: std::array::from_fn(|i| std::array::from_fn(|k| m[(i, k)])),
                    },
                }
            })
            .collect();
        Self {
            gravity: model.gravity(),
            bodies,
        }
    }
}

impl BodyEntry {
    fn com_offset_nonzero(&self) -> bool {
        self.inertia.com_offset.iter().any(|&x| x != 0.0)
    }
}

/// Parses and builds a model from JSON text; `path` is used in messages.
pub fn model_from_json(text: &str, path: &str) -> Result<RobotModel> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| {
        parse_err(path, format!("line {} column {}: {e}", e.line(), e.column()))
    })?;
    let specs = file.to_specs(path)?;
    RobotModel::build(specs, file.gravity)
}

pub fn model_to_json(model: &RobotModel) -> String {
    let mut s = serde_json::to_string_pretty(&ModelFile::from_model(model))
        .expect("model file serialization cannot fail");
    s.push('\n');
    s
}

pub fn load_model(path: impl AsRef<Path>) -> Result<RobotModel> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path)
        .map_err(|e| parse_err(&shown, format!("cannot read: {e}")))?;
    model_from_json(&text, &shown)
}

pub fn save_model(model: &RobotModel, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, model_to_json(model))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_LINK: &str = r#"{
      "gravity": 9.81,
      "bodies": [
        {"id": 1, "parent": 0, "A": {"xyz": [0, 0, 0]},
         "inertia": {"mass": 2.0, "J": [[0.1, 0, 0], [0, 0.1, 0], [0, 0, 0.2]]}},
        {"id": 2, "parent": 1,
         "joint": {"kind": "revolute", "axis": [0, 1, 0], "point": [0, 0, 0.05]},
         "A": {"rpy": [0.1, -0.2, 0.3], "xyz": [0.1, 0, -0.1]},
         "inertia": {"mass": 0.5, "com_offset": [0, 0, 0], "J": [[0.01, 0, 0], [0, 0.01, 0], [0, 0, 0.005]]}}
      ]
    }"#;

    #[test]
    fn parses_and_round_trips() {
        let m = model_from_json(TWO_LINK, "two_link.json").unwrap();
        assert_eq!(m.n_bodies(), 2);
        let first = model_to_json(&m);
        let again = model_to_json(&model_from_json(&first, "x").unwrap());
        assert_eq!(first, again);
    }

    #[test]
    fn duplicate_id_is_a_parse_error() {
        let text = TWO_LINK.replace("\"id\": 2", "\"id\": 1");
        let err = model_from_json(&text, "dup.json").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
        assert!(err.to_string().contains("duplicate body id 1"));
    }

    #[test]
    fn syntax_error_reports_location() {
        let err = model_from_json("{\"gravity\": 9.81,\n \"bodies\": [}", "bad.json").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bad.json") && msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn rejects_com_offset() {
        let text = TWO_LINK.replace("\"com_offset\": [0, 0, 0]", "\"com_offset\": [0, 0, 0.1]");
        assert!(model_from_json(&text, "x").is_err());
    }
}
