//! A fully resolved multi-body task: manipulators with their paths, rigidly
//! carried objects and the contacts coupling them, plus sampling of every
//! path-dependent coefficient at one path coordinate.

use nalgebra::{DMatrix, DVector};

use crate::contact::{ContactModel, FrictionParams};
use crate::dynamics::{grasp_map, robot_path_sample, ObjectModel, RobotPathSample};
use crate::lie::{Mat3, Mat6, Pose, Vec3, Vec6};
use crate::path::JointPath;
use crate::robot::{to_dmatrix, DerivativeMethod, JointLimits, RobotModel};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct RobotInstance {
    pub model: RobotModel,
    pub path: JointPath,
    /// Limits after scenario scaling.
    pub limits: Vec<JointLimits>,
}

/// Where an object's body frame sits.
#[derive(Clone, Debug, PartialEq)]
pub enum Attachment {
    /// Rigidly offset from a manipulator flange.
    Robot { robot: usize, offset: Pose },
    /// Rigidly offset from another object's frame.
    Object { object: usize, offset: Pose },
}

#[derive(Clone, Debug)]
pub struct ObjectInstance {
    pub model: ObjectModel,
    pub attachment: Attachment,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ContactKind {
    /// Hand contact with a manipulator flange; the reaction acts on the arm.
    Manipulator { robot: usize },
    /// Contact with the fixed world. With `world_normal` the contact frame
    /// keeps its z-axis along that world direction while the object moves.
    Environment { world_normal: Option<Vec3> },
    /// Contact with a supporting object, which receives the reaction.
    Support { from_object: usize },
}

#[derive(Clone, Debug)]
pub struct ContactInstance {
    pub name: String,
    /// Object receiving the contact wrench.
    pub object: usize,
    pub kind: ContactKind,
    /// Contact frame in the receiving object's frame.
    pub pose: Pose,
    pub model: ContactModel,
    pub friction: FrictionParams,
    pub normal_force_max: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct System {
    pub name: String,
    pub robots: Vec<RobotInstance>,
    pub objects: Vec<ObjectInstance>,
    pub contacts: Vec<ContactInstance>,
    pub gravity: Vec3,
    pub derivative: DerivativeMethod,
}

impl System {
    pub fn dof(&self) -> usize {
        self.robots.iter().map(|r| r.model.dof()).sum()
    }

    /// Start of each robot's joints in the stacked joint vector.
    pub fn joint_offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.robots.len());
        let mut off = 0;
        for r in &self.robots {
            out.push(off);
            off += r.model.dof();
        }
        out
    }

    /// Contacts counted as point contacts (environment and object support).
    pub fn num_point_contacts(&self) -> usize {
        self.contacts
            .iter()
            .filter(|c| !matches!(c.kind, ContactKind::Manipulator { .. }))
            .count()
    }

    pub fn num_manipulator_contacts(&self) -> usize {
        self.contacts.len() - self.num_point_contacts()
    }

    pub fn validate(&self) -> Result<()> {
        if self.robots.is_empty() {
            return Err(Error::Model("at least one robot is required".into()));
        }
        for (i, r) in self.robots.iter().enumerate() {
            r.model.validate()?;
            if r.path.num_joints() != r.model.dof() {
                return Err(Error::Dimension(format!(
                    "robot {i}: path has {} joints, model has {}",
                    r.path.num_joints(),
                    r.model.dof()
                )));
            }
            for (k, l) in r.limits.iter().enumerate() {
                if !(l.torque.0 < l.torque.1 && l.acceleration.0 < l.acceleration.1 && l.velocity > 0.0) {
                    return Err(Error::Model(format!("robot {i} joint {}: empty scaled limits", k + 1)));
                }
            }
        }
        for (i, o) in self.objects.iter().enumerate() {
            if !(o.model.mass > 0.0 && o.model.mass.is_finite()) {
                return Err(Error::Model(format!("object {}: mass must be positive", o.model.name)));
            }
            crate::robot::check_inertia(&o.model.inertia, &format!("object {}", o.model.name))?;
            self.root_of(i)?;
        }
        for c in &self.contacts {
            if c.object >= self.objects.len() {
                return Err(Error::Model(format!("contact {}: unknown object {}", c.name, c.object)));
            }
            c.friction.validate()?;
            if let Some(f) = c.normal_force_max {
                if f.is_nan() || f <= 0.0 {
                    return Err(Error::Model(format!("contact {}: normal force bound must be positive", c.name)));
                }
            }
            match &c.kind {
                ContactKind::Manipulator { robot } if *robot >= self.robots.len() => {
                    return Err(Error::Model(format!("contact {}: unknown robot {robot}", c.name)));
                }
                ContactKind::Support { from_object } if *from_object >= self.objects.len() || *from_object == c.object => {
                    return Err(Error::Model(format!("contact {}: invalid supporting object", c.name)));
                }
                ContactKind::Environment { world_normal: Some(n) } if !(n.norm() > 1e-12) => {
                    return Err(Error::Model(format!("contact {}: world normal must be nonzero", c.name)));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Robot whose flange carries object `o` and the object frame relative
    /// to that flange.
    pub fn root_of(&self, o: usize) -> Result<(usize, Pose)> {
        let mut offset = Pose::identity();
        let mut cur = o;
        for _ in 0..=self.objects.len() {
            match &self.objects[cur].attachment {
                Attachment::Robot { robot, offset: off } => {
                    if *robot >= self.robots.len() {
                        return Err(Error::Model(format!("object {o}: unknown robot {robot}")));
                    }
                    return Ok((*robot, off.mul(&offset)));
                }
                Attachment::Object { object, offset: off } => {
                    if *object >= self.objects.len() {
                        return Err(Error::Model(format!("object {o}: unknown parent object {object}")));
                    }
                    offset = off.mul(&offset);
                    cur = *object;
                }
            }
        }
        Err(Error::Model(format!("object {o}: attachment chain contains a cycle")))
    }

    /// World pose of every object for the given stacked configuration.
    pub fn object_poses(&self, flanges: &[Pose]) -> Result<Vec<Pose>> {
        (0..self.objects.len())
            .map(|o| {
                let (r, off) = self.root_of(o)?;
                Ok(flanges[r].mul(&off))
            })
            .collect()
    }

    /// Contact frame in its receiving object's frame at the given object pose.
    pub fn contact_pose(&self, c: usize, object_world: &Pose) -> Pose {
        let ct = &self.contacts[c];
        match &ct.kind {
            ContactKind::Environment { world_normal: Some(n) } => {
                let r_wc = frame_from_normal(n);
                Pose::new(object_world.rotation.transpose() * r_wc, ct.pose.translation)
            }
            _ => ct.pose,
        }
    }
}

/// Rotation whose z-axis is `n`; x is the projection of the world x-axis
/// (or y-axis when `n` is nearly parallel to x).
pub fn frame_from_normal(n: &Vec3) -> Mat3 {
    let z = n.normalize();
    let seed = if z.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let x = (seed - z * z.dot(&seed)).normalize();
    let y = z.cross(&x);
    Mat3::from_columns(&[x, y, z])
}

#[derive(Clone, Debug)]
pub struct ObjectSample {
    pub pose: Pose,
    pub jo: Vec6,
    pub jop: Vec6,
    /// Coefficient of `s̈` in the net wrench.
    pub a: Vec6,
    /// Coefficient of `ṡ²` in the net wrench.
    pub b: Vec6,
    pub external: Vec6,
}

#[derive(Clone, Debug)]
pub struct ContactSample {
    /// Contact frame in the receiving object's frame.
    pub pose: Pose,
    /// Grasp map into the receiving object.
    pub grasp: Mat6,
    /// `(supporting object, grasp map into it)` for object-object contacts.
    pub reaction: Option<(usize, Mat6)>,
    /// `(robot, J_cᵀ)` for hand contacts; `J_c` is the arm's body Jacobian
    /// at the contact frame.
    pub jacobian_t: Option<(usize, DMatrix<f64>)>,
}

/// Every path-dependent coefficient the transcription consumes at one `s`.
#[derive(Clone, Debug)]
pub struct PathDynamicsSample {
    pub s: f64,
    pub robots: Vec<RobotPathSample>,
    pub flanges: Vec<Pose>,
    pub objects: Vec<ObjectSample>,
    pub contacts: Vec<ContactSample>,
}

impl PathDynamicsSample {
    fn stack(&self, f: impl Fn(&RobotPathSample) -> &DVector<f64>) -> DVector<f64> {
        let n: usize = self.robots.iter().map(|r| r.q.len()).sum();
        let mut out = DVector::zeros(n);
        let mut off = 0;
        for r in &self.robots {
            let v = f(r);
            out.rows_mut(off, v.len()).copy_from(v);
            off += v.len();
        }
        out
    }

    /// Stacked `𝓜_M`.
    pub fn m(&self) -> DVector<f64> {
        self.stack(|r| &r.m)
    }

    /// Stacked `𝓒_M`.
    pub fn c(&self) -> DVector<f64> {
        self.stack(|r| &r.c)
    }

    /// Stacked `𝓖_M`.
    pub fn g(&self) -> DVector<f64> {
        self.stack(|r| &r.g)
    }

    /// Block matrix `𝓙_M` (n × 6v) of contact Jacobian transposes, one
    /// column block per hand contact in contact order.
    pub fn jacobian_transpose_block(&self, system: &System) -> DMatrix<f64> {
        let offsets = system.joint_offsets();
        let hand: Vec<&ContactSample> = self.contacts.iter().filter(|c| c.jacobian_t.is_some()).collect();
        let mut out = DMatrix::zeros(system.dof(), 6 * hand.len());
        for (k, c) in hand.iter().enumerate() {
            let (r, jt) = c.jacobian_t.as_ref().unwrap();
            out.view_mut((offsets[*r], 6 * k), (jt.nrows(), 6)).copy_from(jt);
        }
        out
    }
}

pub fn stack_dynamics_in_s(system: &System, s: f64) -> Result<PathDynamicsSample> {
    let robots = system
        .robots
        .iter()
        .map(|r| robot_path_sample(&r.model, &r.path, s, &system.gravity))
        .collect::<Result<Vec<_>>>()?;
    let flanges = system
        .robots
        .iter()
        .zip(&robots)
        .map(|(r, smp)| r.model.forward_kinematics(&smp.q))
        .collect::<Result<Vec<_>>>()?;
    let poses = system.object_poses(&flanges)?;

    let mut objects = Vec::with_capacity(system.objects.len());
    for (o, obj) in system.objects.iter().enumerate() {
        let (r, offset) = system.root_of(o)?;
        let robot = &system.robots[r];
        let (jo, jop) = robot.model.object_path_kinematics(&robot.path, s, &offset, system.derivative)?;
        let (a, b) = obj.model.net_wrench_coefficients(&jo, &jop);
        objects.push(ObjectSample {
            pose: poses[o],
            jo,
            jop,
            a,
            b,
            external: obj.model.external_wrench(&poses[o].rotation, &system.gravity),
        });
    }

    let mut contacts = Vec::with_capacity(system.contacts.len());
    for (c, ct) in system.contacts.iter().enumerate() {
        let pose = system.contact_pose(c, &poses[ct.object]);
        let world = poses[ct.object].mul(&pose);
        let reaction = match ct.kind {
            ContactKind::Support { from_object } => {
                Some((from_object, grasp_map(&poses[from_object].inverse().mul(&world))))
            }
            _ => None,
        };
        let jacobian_t = match ct.kind {
            ContactKind::Manipulator { robot } => {
                let in_flange = flanges[robot].inverse().mul(&world);
                let j = system.robots[robot].model.body_jacobian(&robots[robot].q)?;
                let jc = to_dmatrix(&in_flange.inverse().adjoint()) * j;
                Some((robot, jc.transpose()))
            }
            _ => None,
        };
        contacts.push(ContactSample {
            pose,
            grasp: grasp_map(&pose),
            reaction,
            jacobian_t,
        });
    }

    Ok(PathDynamicsSample {
        s,
        robots,
        flanges,
        objects,
        contacts,
    })
}
