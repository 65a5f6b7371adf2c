//! Scene JSON.
//!
//! ```json
//! {
//!   "format": "depthpose-scene",
//!   "version": 1,
//!   "units": { "length": "mm", "image": "px" },
//!   "camera": { "f": 500.0, "cx": 416.0, "cy": 256.0, "w": 832.0, "h": 512.0 },
//!   "skeleton": "body15",
//!   "people": [
//!     { "joints": [ { "name": "pelvis", "X": 0.0, "Y": 0.0, "Z": 3000.0, "visible": true } ] }
//!   ],
//!   "distractors": [],
//!   "provenance": {}
//! }
//! ```
//!
//! Joints are matched to the skeleton by name, so their order in the file is
//! free. Every skeleton joint must be listed once. Visible joints need
//! finite coordinates and `Z > 0`. `distractors` and `provenance` are
//! optional; provenance is free-form and records how the file was made.

use crate::geometry::{CameraIntrinsics, Point3D};
use crate::pose::{AbsolutePose3D, Distractor, Joint3D, Scene};
use crate::skeleton::SkeletonSpec;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::path::Path;
use thiserror::Error;

pub const FORMAT: &str = "depthpose-scene";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl SceneError {
    fn at(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Schema {
            path: path.into(),
            message: message.into(),
        }
    }

    /// JSON path of the offending value, if the error is about content.
    pub fn path(&self) -> Option<&str> {
        match self {
            Self::Schema { path, .. } => Some(path),
            Self::Io(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Units {
    pub length: String,
    pub image: String,
}

impl Default for Units {
    fn default() -> Self {
        Self {
            length: "mm".into(),
            image: "px".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointRecord {
    pub name: String,
    #[serde(rename = "X")]
    pub x: f64,
    #[serde(rename = "Y")]
    pub y: f64,
    #[serde(rename = "Z")]
    pub z: f64,
    pub visible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PersonRecord {
    pub joints: Vec<JointRecord>,
}

/// The on-disk form of a [`Scene`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub format: String,
    pub version: u32,
    #[serde(default)]
    pub units: Units,
    pub camera: CameraIntrinsics,
    pub skeleton: String,
    pub people: Vec<PersonRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub distractors: Vec<Distractor>,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub provenance: Value,
}

impl SceneFile {
    pub fn from_scene(scene: &Scene, spec: &SkeletonSpec, provenance: Value) -> Self {
        Self {
            format: FORMAT.into(),
            version: VERSION,
            units: Units::default(),
            camera: scene.cam,
            skeleton: spec.name().to_string(),
            people: scene
                .people
                .iter()
                .map(|p| PersonRecord {
                    joints: p
                        .joints
                        .iter()
                        .zip(spec.joint_names())
                        .map(|(j, name)| JointRecord {
                            name: name.clone(),
                            x: j.pos.x,
                            y: j.pos.y,
                            z: j.pos.z,
                            visible: j.visible,
                        })
                        .collect(),
                })
                .collect(),
            distractors: scene.distractors.clone(),
            provenance,
        }
    }

    /// Checks the document against `spec` and builds the scene.
    pub fn to_scene(&self, spec: &SkeletonSpec) -> Result<Scene, SceneError> {
        if self.format != FORMAT {
            return Err(SceneError::at(
                "format",
                format!("expected \"{FORMAT}\", got \"{}\"", self.format),
            ));
        }
        if self.version != VERSION {
            return Err(SceneError::at(
                "version",
                format!("unsupported version {}", self.version),
            ));
        }
        if self.units != Units::default() {
            return Err(SceneError::at("units", "only millimeters and pixels are supported"));
        }
        self.camera
            .validate()
            .map_err(|e| SceneError::at("camera", e.to_string()))?;
        if self.skeleton != spec.name() {
            return Err(SceneError::at(
                "skeleton",
                format!(
                    "file uses \"{}\" but the loaded skeleton is \"{}\"",
                    self.skeleton,
                    spec.name()
                ),
            ));
        }
        let people = self
            .people
            .iter()
            .enumerate()
            .map(|(i, p)| person_from_record(p, spec, &format!("people[{i}]")))
            .collect::<Result<Vec<_>, _>>()?;
        for (i, d) in self.distractors.iter().enumerate() {
            check_distractor(d, spec, people.len()).map_err(|m| SceneError::at(format!("distractors[{i}]"), m))?;
        }
        Ok(Scene {
            cam: self.camera,
            people,
            distractors: self.distractors.clone(),
        })
    }
}

fn person_from_record(p: &PersonRecord, spec: &SkeletonSpec, path: &str) -> Result<AbsolutePose3D, SceneError> {
    let mut joints: Vec<Option<Joint3D>> = vec![None; spec.joint_count()];
    for (k, j) in p.joints.iter().enumerate() {
        let here = format!("{path}.joints[{k}]");
        let idx = spec
            .joint_index(&j.name)
            .ok_or_else(|| SceneError::at(format!("{here}.name"), format!("unknown joint \"{}\"", j.name)))?;
        if joints[idx].is_some() {
            return Err(SceneError::at(
                format!("{here}.name"),
                format!("joint \"{}\" listed twice", j.name),
            ));
        }
        if j.visible {
            for (field, v) in [("X", j.x), ("Y", j.y), ("Z", j.z)] {
                if !v.is_finite() {
                    return Err(SceneError::at(
                        format!("{here}.{field}"),
                        "visible joint needs finite coordinates",
                    ));
                }
            }
            if !(j.z > 0.0) {
                return Err(SceneError::at(
                    format!("{here}.Z"),
                    format!("visible joint needs Z > 0, got {}", j.z),
                ));
            }
        }
        joints[idx] = Some(Joint3D {
            pos: Point3D::new(j.x, j.y, j.z),
            visible: j.visible,
        });
    }
    let missing: Vec<&str> = joints
        .iter()
        .zip(spec.joint_names())
        .filter(|(j, _)| j.is_none())
        .map(|(_, n)| n.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(SceneError::at(
            format!("{path}.joints"),
            format!("missing joints {missing:?}"),
        ));
    }
    Ok(AbsolutePose3D::new(joints.into_iter().map(Option::unwrap).collect()))
}

fn check_distractor(d: &Distractor, spec: &SkeletonSpec, people: usize) -> Result<(), String> {
    match *d {
        Distractor::SpuriousKeypoint { joint, .. } if joint >= spec.joint_count() => {
            Err(format!("joint {joint} out of range"))
        }
        Distractor::SpuriousLimb { part, .. } | Distractor::LimbAttenuation { part, .. }
            if part >= spec.part_count() =>
        {
            Err(format!("part {part} out of range"))
        }
        Distractor::LimbAttenuation { person, .. } if person >= people => Err(format!("person {person} out of range")),
        Distractor::LimbAttenuation { factor, .. } if !(0.0..=1.0).contains(&factor) => {
            Err(format!("factor {factor} must be in [0, 1]"))
        }
        _ => Ok(()),
    }
}

/// Deserializes JSON, reporting the path of the first offending value.
pub fn parse_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, SceneError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        SceneError::at(
            if path == "." { "$".to_string() } else { path },
            e.into_inner().to_string(),
        )
    })
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: impl AsRef<Path>) -> Result<T, SceneError> {
    parse_json(&std::fs::read_to_string(path)?)
}

/// Pretty JSON with a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<(), SceneError> {
    std::fs::write(path, to_json_string(value))?;
    Ok(())
}

pub fn parse_scene(text: &str, spec: &SkeletonSpec) -> Result<(Scene, Value), SceneError> {
    let file: SceneFile = parse_json(text)?;
    Ok((file.to_scene(spec)?, file.provenance))
}

pub fn read_scene(path: impl AsRef<Path>, spec: &SkeletonSpec) -> Result<(Scene, Value), SceneError> {
    parse_scene(&std::fs::read_to_string(path)?, spec)
}

pub fn write_scene(
    path: impl AsRef<Path>,
    scene: &Scene,
    spec: &SkeletonSpec,
    provenance: Value,
) -> Result<(), SceneError> {
    write_json(path, &SceneFile::from_scene(scene, spec, provenance))
}

/// Intrinsics from either a bare camera object or any document with a
/// top-level `camera` field, such as a scene file.
pub fn parse_camera(text: &str) -> Result<CameraIntrinsics, SceneError> {
    #[derive(Deserialize)]
    struct Wrapped {
        camera: CameraIntrinsics,
    }
    let v: Value = parse_json(text)?;
    let cam: CameraIntrinsics = if v.get("camera").is_some() {
        parse_json::<Wrapped>(text)?.camera
    } else {
        parse_json(text)?
    };
    cam.validate().map_err(|e| SceneError::at("camera", e.to_string()))?;
    Ok(cam)
}
