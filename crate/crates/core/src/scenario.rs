//! Scenario files: robots, paths, carried objects and contacts in one JSON
//! document. Model and waypoint files are resolved relative to the scenario.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::contact::{ContactModel, FrictionParams};
use crate::dynamics::{ObjectModel, DEFAULT_GRAVITY};
use crate::lie::{Vec3, Vec6};
use crate::path::{JointPath, SplineBoundary};
use crate::robot::{inertia_from_entries, DerivativeMethod, PoseSpec, RobotSpec};
use crate::system::{Attachment, ContactInstance, ContactKind, ObjectInstance, RobotInstance, System};
use crate::transcription::BoundarySpeeds;
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub schema_version: u32,
    pub name: String,
    #[serde(default)]
    pub description: Option<String>,
    #[serde(default = "default_gravity")]
    pub gravity: [f64; 3],
    pub grid: usize,
    /// `[ṡ(0), ṡ(T)]`; a null end leaves the final speed free.
    #[serde(default = "rest")]
    pub boundary_sdot: (f64, Option<f64>),
    #[serde(default)]
    pub limit_scaling: LimitScaling,
    #[serde(default)]
    pub jacobian_derivative: DerivativeMethod,
    pub robots: Vec<RobotEntry>,
    #[serde(default)]
    pub objects: Vec<ObjectSpec>,
}

fn default_gravity() -> [f64; 3] {
    DEFAULT_GRAVITY
}

fn rest() -> (f64, Option<f64>) {
    (0.0, Some(0.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitScaling {
    #[serde(default = "one")]
    pub torque: f64,
    #[serde(default = "one")]
    pub velocity: f64,
    #[serde(default = "one")]
    pub acceleration: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for LimitScaling {
    fn default() -> Self {
        Self {
            torque: 1.0,
            velocity: 1.0,
            acceleration: 1.0,
        }
    }
}

/// A file reference or an inline value.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FileOr<T> {
    File(String),
    Inline(T),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotEntry {
    pub model: FileOr<RobotSpec>,
    pub path: FileOr<PathSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSpec {
    pub waypoints: Vec<Vec<f64>>,
    #[serde(default)]
    pub boundary: SplineBoundary,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    pub name: String,
    pub mass: f64,
    /// `[ixx, iyy, izz, ixy, ixz, iyz]` about the center of mass.
    pub inertia: [f64; 6],
    pub frame: FrameSpec,
    /// Extra wrench in the object frame, added to gravity.
    #[serde(default)]
    pub external_wrench: [f64; 6],
    #[serde(default)]
    pub contacts: Vec<ContactSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameSpec {
    #[serde(default)]
    pub robot: Option<usize>,
    #[serde(default)]
    pub object: Option<usize>,
    #[serde(default)]
    pub offset: PoseSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContactKindName {
    Manipulator,
    Environment,
    Support,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactSpec {
    pub name: String,
    pub kind: ContactKindName,
    /// Manipulator contacts: the robot whose flange touches the object.
    #[serde(default)]
    pub robot: Option<usize>,
    /// Environment contacts: fixed world direction of the contact normal.
    #[serde(default)]
    pub world_normal: Option<[f64; 3]>,
    /// Support contacts: the object underneath.
    #[serde(default)]
    pub from_object: Option<usize>,
    /// Contact frame in the object frame, z-axis along the inward normal.
    #[serde(default)]
    pub pose: PoseSpec,
    pub model: ContactModel,
    pub friction: FrictionParams,
    #[serde(default)]
    pub normal_force_max: Option<f64>,
}

/// A loaded and validated scenario.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub spec: ScenarioSpec,
    pub system: System,
    pub grid: usize,
    pub boundary: BoundarySpeeds,
    pub base_dir: PathBuf,
}

fn parse<T: DeserializeOwned>(value: Value, origin: &Path) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let at = e.path().to_string();
        Error::Schema {
            path: origin.display().to_string(),
            message: if at == "." { e.inner().to_string() } else { format!("{at}: {}", e.inner()) },
        }
    })
}

fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::schema(path, e))
}

fn resolve<T: DeserializeOwned + Clone>(entry: &FileOr<T>, base: &Path) -> Result<(T, PathBuf)> {
    match entry {
        FileOr::Inline(v) => Ok((v.clone(), base.to_path_buf())),
        FileOr::File(f) => {
            let p = base.join(f);
            Ok((parse(read_json(&p)?, &p)?, p))
        }
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let value = read_json(path)?;
    let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    Scenario::from_value(value, path, &base)
}

/// Sets the entry at a dotted path such as `objects.0.mass` or
/// `robots.0.path.waypoints.1.5`.
pub fn set_json_path(root: &mut Value, dotted: &str, new: Value) -> Result<()> {
    let mut cur = root;
    for key in dotted.split('.') {
        let next = match cur {
            Value::Object(map) => map.get_mut(key),
            Value::Array(items) => key.parse::<usize>().ok().and_then(|i| items.get_mut(i)),
            _ => None,
        };
        cur = next.ok_or_else(|| Error::Schema {
            path: dotted.to_string(),
            message: format!("no entry `{key}`"),
        })?;
    }
    *cur = new;
    Ok(())
}

impl Scenario {
    /// Builds from a parsed JSON document; `origin` names it in errors and
    /// `base` anchors relative file references.
    pub fn from_value(value: Value, origin: &Path, base: &Path) -> Result<Self> {
        let spec: ScenarioSpec = parse(value, origin)?;
        Self::from_spec(spec, origin, base)
    }

    pub fn from_spec(spec: ScenarioSpec, origin: &Path, base: &Path) -> Result<Self> {
        let field = |f: String, m: String| Error::Schema {
            path: origin.display().to_string(),
            message: format!("{f}: {m}"),
        };
        if spec.schema_version != SCHEMA_VERSION {
            return Err(field(
                "schema_version".into(),
                format!("unsupported version {} (expected {SCHEMA_VERSION})", spec.schema_version),
            ));
        }
        if spec.grid < 1 {
            return Err(field("grid".into(), "must be at least 1".into()));
        }
        let ls = spec.limit_scaling;
        for (v, n) in [(ls.torque, "torque"), (ls.velocity, "velocity"), (ls.acceleration, "acceleration")] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(field(format!("limit_scaling.{n}"), "must be positive".into()));
            }
        }

        let mut robots = Vec::with_capacity(spec.robots.len());
        for (i, r) in spec.robots.iter().enumerate() {
            let (model_spec, model_origin) = resolve(&r.model, base)?;
            let model = model_spec
                .build()
                .map_err(|e| field(format!("robots[{i}].model ({})", model_origin.display()), e.to_string()))?;
            let (path_spec, _) = resolve(&r.path, base)?;
            let path = JointPath::new(&path_spec.waypoints, path_spec.boundary)
                .map_err(|e| field(format!("robots[{i}].path"), e.to_string()))?;
            let limits = model.scaled_limits(ls.torque, ls.velocity, ls.acceleration);
            robots.push(RobotInstance { model, path, limits });
        }

        let mut objects = Vec::with_capacity(spec.objects.len());
        let mut contacts = Vec::new();
        for (o, os) in spec.objects.iter().enumerate() {
            let offset = os
                .frame
                .offset
                .to_pose()
                .map_err(|e| field(format!("objects[{o}].frame.offset"), e.to_string()))?;
            let attachment = match (os.frame.robot, os.frame.object) {
                (Some(robot), None) => Attachment::Robot { robot, offset },
                (None, Some(object)) => Attachment::Object { object, offset },
                _ => {
                    return Err(field(
                        format!("objects[{o}].frame"),
                        "exactly one of `robot` or `object` is required".into(),
                    ))
                }
            };
            objects.push(ObjectInstance {
                model: ObjectModel {
                    name: os.name.clone(),
                    mass: os.mass,
                    inertia: inertia_from_entries(&os.inertia),
                    extra_wrench: Vec6::from(os.external_wrench),
                },
                attachment,
            });
            for (j, cs) in os.contacts.iter().enumerate() {
                let at = format!("objects[{o}].contacts[{j}]");
                let kind = match (cs.kind, cs.robot, cs.from_object) {
                    (ContactKindName::Manipulator, Some(robot), None) if cs.world_normal.is_none() => {
                        ContactKind::Manipulator { robot }
                    }
                    (ContactKindName::Environment, None, None) => ContactKind::Environment {
                        world_normal: cs.world_normal.map(Vec3::from),
                    },
                    (ContactKindName::Support, None, Some(from_object)) if cs.world_normal.is_none() => {
                        ContactKind::Support { from_object }
                    }
                    (ContactKindName::Manipulator, ..) => {
                        return Err(field(at, "manipulator contacts take exactly `robot`".into()))
                    }
                    (ContactKindName::Environment, ..) => {
                        return Err(field(at, "environment contacts take only `world_normal`".into()))
                    }
                    (ContactKindName::Support, ..) => {
                        return Err(field(at, "support contacts take exactly `from_object`".into()))
                    }
                };
                contacts.push(ContactInstance {
                    name: cs.name.clone(),
                    object: o,
                    kind,
                    pose: cs.pose.to_pose().map_err(|e| field(format!("{at}.pose"), e.to_string()))?,
                    model: cs.model,
                    friction: cs.friction,
                    normal_force_max: cs.normal_force_max,
                });
            }
        }

        let system = System {
            name: spec.name.clone(),
            robots,
            objects,
            contacts,
            gravity: Vec3::from(spec.gravity),
            derivative: spec.jacobian_derivative,
        };
        system.validate().map_err(|e| field(spec.name.clone(), e.to_string()))?;
        let boundary = BoundarySpeeds {
            start: spec.boundary_sdot.0,
            end: spec.boundary_sdot.1,
        };
        if !(boundary.start >= 0.0) || boundary.end.is_some_and(|e| !(e >= 0.0)) {
            return Err(field("boundary_sdot".into(), "speeds must be nonnegative".into()));
        }
        Ok(Self {
            grid: spec.grid,
            spec,
            system,
            boundary,
            base_dir: base.to_path_buf(),
        })
    }
}
