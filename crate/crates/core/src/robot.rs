//! Serial manipulators in product-of-exponentials form and their
//! kinematics.
//!
//! Link frames coincide with the base frame at `q = 0`, so link `i` sits at
//! `e^{ξ₁q₁}⋯e^{ξᵢqᵢ}` and link inertias are given in base coordinates at
//! the home configuration. The flange is `e^{ξ₁q₁}⋯e^{ξₙqₙ} X_ref T_tool`.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::lie::{ad, pose_exp, Mat3, Pose, Twist, Vec3, Vec6};
use crate::path::JointPath;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointKind {
    Revolute,
    Prismatic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkInertia {
    pub mass: f64,
    pub com: Vec3,
    /// Rotational inertia about the center of mass.
    pub inertia: Mat3,
}

impl LinkInertia {
    pub fn validate(&self, what: &str) -> Result<()> {
        if !(self.mass >= 0.0 && self.mass.is_finite()) {
            return Err(Error::Model(format!("{what}: mass must be nonnegative")));
        }
        check_inertia(&self.inertia, what)
    }
}

pub(crate) fn check_inertia(i: &Mat3, what: &str) -> Result<()> {
    if (i - i.transpose()).norm() > 1e-12 {
        return Err(Error::Model(format!("{what}: inertia is not symmetric")));
    }
    let eig = i.symmetric_eigenvalues();
    if eig.iter().any(|e| *e < -1e-12 || !e.is_finite()) {
        return Err(Error::Model(format!("{what}: inertia is not positive semidefinite")));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointLimits {
    pub torque: (f64, f64),
    pub velocity: f64,
    pub acceleration: (f64, f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Joint {
    pub kind: JointKind,
    pub twist: Twist,
    pub link: LinkInertia,
    pub limits: JointLimits,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RobotModel {
    pub name: String,
    pub joints: Vec<Joint>,
    pub x_ref: Pose,
    pub tool_offset: Pose,
}

/// How `∂J/∂q` is evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeMethod {
    /// Lie-bracket identity `∂Jᵢ/∂qⱼ = ad_{Jᵢ} Jⱼ` for `j > i`.
    #[default]
    Analytic,
    /// Central differences of the body Jacobian with step `1e-6`.
    CentralDifference,
}

pub const FD_STEP: f64 = 1e-6;

impl RobotModel {
    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.joints.is_empty() {
            return Err(Error::Model(format!("robot {}: no joints", self.name)));
        }
        for (i, j) in self.joints.iter().enumerate() {
            let what = format!("robot {} joint {}", self.name, i + 1);
            match j.kind {
                JointKind::Revolute => {
                    if (j.twist.angular.norm() - 1.0).abs() > 1e-9 {
                        return Err(Error::Model(format!("{what}: revolute axis must have unit norm")));
                    }
                }
                JointKind::Prismatic => {
                    if j.twist.angular.norm() > 1e-12 || (j.twist.linear.norm() - 1.0).abs() > 1e-9 {
                        return Err(Error::Model(format!(
                            "{what}: prismatic twist must be a unit translation"
                        )));
                    }
                }
            }
            j.link.validate(&what)?;
            let l = &j.limits;
            if !(l.torque.0 < l.torque.1 && l.acceleration.0 < l.acceleration.1 && l.velocity > 0.0) {
                return Err(Error::Model(format!("{what}: limits must be nonempty intervals")));
            }
        }
        for (p, what) in [(&self.x_ref, "x_ref"), (&self.tool_offset, "tool_offset")] {
            if !p.is_valid(1e-10) {
                return Err(Error::Model(format!("robot {}: {what} is not a rigid transform", self.name)));
            }
        }
        Ok(())
    }

    fn check_dim(&self, v: &DVector<f64>) -> Result<()> {
        if v.len() != self.dof() {
            return Err(Error::Dimension(format!(
                "robot {} has {} joints, got a vector of length {}",
                self.name,
                self.dof(),
                v.len()
            )));
        }
        Ok(())
    }

    /// Pose of link `i` (0-based): `e^{ξ₁q₁}⋯e^{ξ_{i+1}q_{i+1}}`.
    pub fn link_poses(&self, q: &DVector<f64>) -> Result<Vec<Pose>> {
        self.check_dim(q)?;
        let mut out = Vec::with_capacity(self.dof());
        let mut acc = Pose::identity();
        for (j, qi) in self.joints.iter().zip(q.iter()) {
            acc = acc.mul(&pose_exp(&j.twist, *qi));
            out.push(acc);
        }
        Ok(out)
    }

    /// Flange pose `e^{ξ₁q₁}⋯e^{ξₙqₙ} X_ref T_tool`.
    pub fn forward_kinematics(&self, q: &DVector<f64>) -> Result<Pose> {
        let links = self.link_poses(q)?;
        Ok(links
            .last()
            .copied()
            .unwrap_or_else(Pose::identity)
            .mul(&self.x_ref)
            .mul(&self.tool_offset))
    }

    /// Body Jacobian at the flange.
    pub fn body_jacobian(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_dim(q)?;
        let n = self.dof();
        let mut j = DMatrix::zeros(6, n);
        // suffix = e^{ξᵢqᵢ}⋯e^{ξₙqₙ} X_ref T_tool, built from the flange end.
        let mut suffix = self.x_ref.mul(&self.tool_offset);
        for i in (0..n).rev() {
            suffix = pose_exp(&self.joints[i].twist, q[i]).mul(&suffix);
            let col = suffix.inverse().adjoint() * self.joints[i].twist.to_vector();
            j.column_mut(i).copy_from(&col);
        }
        Ok(j)
    }

    /// Body Jacobian of the frame `flange · offset`.
    pub fn body_jacobian_at(&self, q: &DVector<f64>, offset: &Pose) -> Result<DMatrix<f64>> {
        let j = self.body_jacobian(q)?;
        Ok(to_dmatrix(&offset.inverse().adjoint()) * j)
    }

    /// `Σⱼ ∂J/∂qⱼ · dq[j]` at the flange, i.e. the directional derivative of
    /// the body Jacobian along `dq`.
    pub fn jacobian_directional_derivative(
        &self,
        q: &DVector<f64>,
        dq: &DVector<f64>,
        method: DerivativeMethod,
    ) -> Result<DMatrix<f64>> {
        self.check_dim(dq)?;
        let n = self.dof();
        match method {
            DerivativeMethod::Analytic => {
                let j = self.body_jacobian(q)?;
                let mut out = DMatrix::zeros(6, n);
                // Column i: ad_{Jᵢ} Σ_{j>i} Jⱼ dqⱼ
                let mut tail = Vec6::zeros();
                for i in (0..n).rev() {
                    let ji: Vec6 = j.fixed_view::<6, 1>(0, i).into();
                    out.column_mut(i).copy_from(&(ad(&ji) * tail));
                    tail += ji * dq[i];
                }
                Ok(out)
            }
            DerivativeMethod::CentralDifference => {
                let mut out = DMatrix::zeros(6, n);
                for k in 0..n {
                    if dq[k] == 0.0 {
                        continue;
                    }
                    let mut qp = q.clone();
                    let mut qm = q.clone();
                    qp[k] += FD_STEP;
                    qm[k] -= FD_STEP;
                    let d = (self.body_jacobian(&qp)? - self.body_jacobian(&qm)?) / (2.0 * FD_STEP);
                    out += d * dq[k];
                }
                Ok(out)
            }
        }
    }

    /// `dJ/ds` along a path (chain rule over joints).
    pub fn jacobian_path_derivative(&self, path: &JointPath, s: f64, method: DerivativeMethod) -> Result<DMatrix<f64>> {
        let pt = path.eval(s)?;
        self.jacobian_directional_derivative(&pt.q, &pt.dq, method)
    }

    /// `(J_O, J_O′)` of the frame `flange · offset` along a path, so that the
    /// frame's body velocity is `J_O ṡ` and its acceleration `J_O′ṡ² + J_O s̈`.
    pub fn object_path_kinematics(
        &self,
        path: &JointPath,
        s: f64,
        offset: &Pose,
        method: DerivativeMethod,
    ) -> Result<(Vec6, Vec6)> {
        let pt = path.eval(s)?;
        let adj = to_dmatrix(&offset.inverse().adjoint());
        let j = &adj * self.body_jacobian(&pt.q)?;
        let dj = &adj * self.jacobian_directional_derivative(&pt.q, &pt.dq, method)?;
        let jo = &j * &pt.dq;
        let jop = dj * &pt.dq + &j * &pt.ddq;
        Ok((Vec6::from_column_slice(jo.as_slice()), Vec6::from_column_slice(jop.as_slice())))
    }

    /// Limits scaled by the scenario factors.
    pub fn scaled_limits(&self, torque: f64, velocity: f64, acceleration: f64) -> Vec<JointLimits> {
        self.joints
            .iter()
            .map(|j| JointLimits {
                torque: (j.limits.torque.0 * torque, j.limits.torque.1 * torque),
                velocity: j.limits.velocity * velocity,
                acceleration: (j.limits.acceleration.0 * acceleration, j.limits.acceleration.1 * acceleration),
            })
            .collect()
    }
}

pub(crate) fn to_dmatrix(m: &crate::lie::Mat6) -> DMatrix<f64> {
    DMatrix::from_column_slice(6, 6, m.as_slice())
}

/// Pose as stored in JSON files.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseSpec {
    /// Unit quaternion `[w, x, y, z]`.
    #[serde(default = "identity_quaternion")]
    pub rotation: [f64; 4],
    #[serde(default)]
    pub translation: [f64; 3],
}

fn identity_quaternion() -> [f64; 4] {
    [1.0, 0.0, 0.0, 0.0]
}

impl Default for PoseSpec {
    fn default() -> Self {
        Self {
            rotation: identity_quaternion(),
            translation: [0.0; 3],
        }
    }
}

impl PoseSpec {
    pub fn to_pose(&self) -> Result<Pose> {
        let qn: f64 = self.rotation.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(qn.is_finite() && (qn - 1.0).abs() <= 1e-6) {
            return Err(Error::Model(format!("quaternion {:?} is not unit length", self.rotation)));
        }
        Ok(Pose::from_quaternion(self.rotation, Vec3::from(self.translation)))
    }
}

/// Inertia as `[ixx, iyy, izz, ixy, ixz, iyz]`.
pub(crate) fn inertia_from_entries(e: &[f64; 6]) -> Mat3 {
    Mat3::new(e[0], e[3], e[4], e[3], e[1], e[5], e[4], e[5], e[2])
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub mass: f64,
    #[serde(default)]
    pub com: [f64; 3],
    pub inertia: [f64; 6],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitSpec {
    pub torque: [f64; 2],
    pub velocity: f64,
    pub acceleration: [f64; 2],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointSpec {
    #[serde(rename = "type")]
    pub kind: JointKind,
    /// `[vx, vy, vz, wx, wy, wz]`
    pub twist: [f64; 6],
    pub link: LinkSpec,
    pub limits: LimitSpec,
}

/// On-disk robot description.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotSpec {
    pub name: String,
    #[serde(default)]
    pub description: Option<String>,
    pub joints: Vec<JointSpec>,
    #[serde(default)]
    pub x_ref: PoseSpec,
    #[serde(default)]
    pub tool_offset: PoseSpec,
}

impl RobotSpec {
    pub fn build(&self) -> Result<RobotModel> {
        let joints = self
            .joints
            .iter()
            .map(|j| Joint {
                kind: j.kind,
                twist: Twist::new(
                    Vec3::new(j.twist[0], j.twist[1], j.twist[2]),
                    Vec3::new(j.twist[3], j.twist[4], j.twist[5]),
                ),
                link: LinkInertia {
                    mass: j.link.mass,
                    com: Vec3::from(j.link.com),
                    inertia: inertia_from_entries(&j.link.inertia),
                },
                limits: JointLimits {
                    torque: (j.limits.torque[0], j.limits.torque[1]),
                    velocity: j.limits.velocity,
                    acceleration: (j.limits.acceleration[0], j.limits.acceleration[1]),
                },
            })
            .collect();
        let model = RobotModel {
            name: self.name.clone(),
            joints,
            x_ref: self.x_ref.to_pose()?,
            tool_offset: self.tool_offset.to_pose()?,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn load(path: &Path) -> Result<RobotModel> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let spec: RobotSpec = serde_json::from_str(&text).map_err(|e| Error::schema(path, e))?;
        spec.build()
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::lie::body_velocity_fd;
    use crate::path::SplineBoundary;
    use std::f64::consts::PI;

    fn link(mass: f64, com: Vec3) -> LinkInertia {
        LinkInertia {
            mass,
            com,
            inertia: Mat3::from_diagonal(&Vec3::new(0.01, 0.02, 0.015)),
        }
    }

    fn limits() -> JointLimits {
        JointLimits {
            torque: (-10.0, 10.0),
            velocity: 2.0,
            acceleration: (-5.0, 5.0),
        }
    }

    /// Planar arm in the xy-plane with unit links and joint axes along z.
    pub(crate) fn planar2() -> RobotModel {
        RobotModel {
            name: "planar2".into(),
            joints: vec![
                Joint {
                    kind: JointKind::Revolute,
                    twist: Twist::revolute(Vec3::z(), Vec3::zeros()),
                    link: link(1.0, Vec3::new(0.5, 0.0, 0.0)),
                    limits: limits(),
                },
                Joint {
                    kind: JointKind::Revolute,
                    twist: Twist::revolute(Vec3::z(), Vec3::new(1.0, 0.0, 0.0)),
                    link: link(1.0, Vec3::new(1.5, 0.0, 0.0)),
                    limits: limits(),
                },
            ],
            x_ref: Pose::from_translation(Vec3::new(2.0, 0.0, 0.0)),
            tool_offset: Pose::identity(),
        }
    }

    /// Spatial 3-DOF chain with skewed axes, for generic checks.
    pub(crate) fn spatial3() -> RobotModel {
        let mut r = planar2();
        r.name = "spatial3".into();
        r.joints[1].twist = Twist::revolute(Vec3::new(0.0, 1.0, 0.3), Vec3::new(0.4, 0.0, 0.1));
        r.joints.push(Joint {
            kind: JointKind::Prismatic,
            twist: Twist::prismatic(Vec3::new(1.0, 0.2, -0.5)),
            link: link(0.7, Vec3::new(1.2, 0.3, -0.1)),
            limits: limits(),
        });
        r.x_ref = Pose::from_quaternion([0.8, 0.2, 0.5, -0.1], Vec3::new(1.5, 0.2, 0.3));
        r.tool_offset = Pose::from_quaternion([0.9, -0.3, 0.1, 0.2], Vec3::new(0.0, 0.05, 0.1));
        r
    }

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    #[test]
    fn home_configuration_returns_reference() {
        let r = spatial3();
        let x = r.forward_kinematics(&dv(&[0.0, 0.0, 0.0])).unwrap();
        let expect = r.x_ref.mul(&r.tool_offset);
        assert!((x.to_matrix() - expect.to_matrix()).norm() < 1e-15);
    }

    #[test]
    fn single_revolute_rotates_reference() {
        let mut r = planar2();
        r.joints.truncate(1);
        let x = r.forward_kinematics(&dv(&[PI])).unwrap();
        let expect = pose_exp(&r.joints[0].twist, PI).mul(&r.x_ref);
        assert!((x.to_matrix() - expect.to_matrix()).norm() < 1e-15);
    }

    #[test]
    fn planar_closed_form() {
        let x = planar2().forward_kinematics(&dv(&[PI / 2.0, -PI / 2.0])).unwrap();
        assert!((x.translation - Vec3::new(1.0, 1.0, 0.0)).norm() < 1e-12);
        assert!((x.rotation - Mat3::identity()).norm() < 1e-12);
    }

    #[test]
    fn point_on_axis_has_no_linear_velocity() {
        let mut r = planar2();
        r.joints.truncate(1);
        r.x_ref = Pose::identity();
        let j = r.body_jacobian(&dv(&[0.7])).unwrap();
        assert!(j.fixed_view::<3, 1>(0, 0).norm() < 1e-15);
        assert!((j[(5, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn prismatic_along_tool_z() {
        let r = RobotModel {
            name: "slider".into(),
            joints: vec![Joint {
                kind: JointKind::Prismatic,
                twist: Twist::prismatic(Vec3::z()),
                link: link(1.0, Vec3::zeros()),
                limits: limits(),
            }],
            x_ref: Pose::identity(),
            tool_offset: Pose::identity(),
        };
        let j = r.body_jacobian(&dv(&[0.3])).unwrap();
        assert_eq!(j.column(0).as_slice(), &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn jacobian_matches_finite_difference_velocity() {
        let r = spatial3();
        let q = dv(&[0.3, -0.8, 0.25]);
        let qd = dv(&[1.1, -0.4, 0.7]);
        let h = 1e-6;
        let v_fd = body_velocity_fd(
            &r.forward_kinematics(&(&q - &qd * h)).unwrap(),
            &r.forward_kinematics(&q).unwrap(),
            &r.forward_kinematics(&(&q + &qd * h)).unwrap(),
            h,
        );
        let v = r.body_jacobian(&q).unwrap() * &qd;
        for k in 0..6 {
            assert!((v[k] - v_fd[k]).abs() < 1e-6 * (1.0 + v[k].abs()), "{v} vs {v_fd}");
        }
    }

    #[test]
    fn analytic_and_difference_derivatives_agree() {
        let r = spatial3();
        let q = dv(&[0.3, -0.8, 0.25]);
        let dq = dv(&[1.1, -0.4, 0.7]);
        let a = r.jacobian_directional_derivative(&q, &dq, DerivativeMethod::Analytic).unwrap();
        let f = r
            .jacobian_directional_derivative(&q, &dq, DerivativeMethod::CentralDifference)
            .unwrap();
        assert!((a - f).amax() < 1e-7);
    }

    #[test]
    fn path_derivative_of_jacobian() {
        let r = spatial3();
        let path = JointPath::new(
            &[vec![0.0, 0.1, 0.0], vec![0.5, -0.6, 0.2], vec![1.0, 0.3, -0.1]],
            SplineBoundary::Natural,
        )
        .unwrap();
        let s = 0.37;
        let h = 1e-6;
        let jp = r.body_jacobian(&path.eval(s + h).unwrap().q).unwrap();
        let jm = r.body_jacobian(&path.eval(s - h).unwrap().q).unwrap();
        let fd = (jp - jm) / (2.0 * h);
        let dj = r.jacobian_path_derivative(&path, s, DerivativeMethod::Analytic).unwrap();
        assert!((dj - fd).amax() < 1e-5);

        // Constant path and single-joint robot give zero.
        let still = JointPath::constant(&[0.2, 0.4, 0.1]).unwrap();
        assert_eq!(
            r.jacobian_path_derivative(&still, 0.5, DerivativeMethod::Analytic).unwrap().amax(),
            0.0
        );
        let mut one = planar2();
        one.joints.truncate(1);
        let p1 = JointPath::new(&[vec![0.0], vec![2.0]], SplineBoundary::Natural).unwrap();
        assert!(one.jacobian_path_derivative(&p1, 0.4, DerivativeMethod::Analytic).unwrap().amax() < 1e-15);
    }

    #[test]
    fn object_kinematics_along_path() {
        let r = spatial3();
        let path = JointPath::new(
            &[vec![0.0, 0.1, 0.0], vec![0.5, -0.6, 0.2], vec![1.0, 0.3, -0.1]],
            SplineBoundary::Clamped,
        )
        .unwrap();
        let offset = Pose::from_quaternion([0.7, 0.1, 0.7, 0.0], Vec3::new(0.1, -0.2, 0.05));
        let s = 0.61;
        let h = 1e-6;
        let (jo, jop) = r.object_path_kinematics(&path, s, &offset, DerivativeMethod::Analytic).unwrap();
        let (jp, _) = r.object_path_kinematics(&path, s + h, &offset, DerivativeMethod::Analytic).unwrap();
        let (jm, _) = r.object_path_kinematics(&path, s - h, &offset, DerivativeMethod::Analytic).unwrap();
        assert!(((jp - jm) / (2.0 * h) - jop).amax() < 1e-5);

        // Linear path on one joint: J_O is the Jacobian column and J_O′ vanishes.
        let mut one = planar2();
        one.joints.truncate(1);
        let line = JointPath::new(&[vec![0.0], vec![1.0]], SplineBoundary::Natural).unwrap();
        let (jo1, jop1) = one
            .object_path_kinematics(&line, 0.3, &Pose::identity(), DerivativeMethod::Analytic)
            .unwrap();
        let col = one.body_jacobian(&dv(&[0.3])).unwrap();
        assert!((jo1 - Vec6::from_column_slice(col.as_slice())).amax() < 1e-15);
        assert!(jop1.amax() < 1e-15);
        assert!(jo.amax() > 0.0);
    }
}
