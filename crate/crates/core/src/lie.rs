//! SE(3) and se(3) arithmetic.
//!
//! Spatial vectors are stacked `[linear; angular]` everywhere, so the
//! adjoint of a pose `T = (R, p)` is `[[R, S(p)R], [0, R]]`.

use nalgebra::{Matrix3, Matrix4, Matrix6, Quaternion, UnitQuaternion, Vector3, Vector6};
use serde::{Deserialize, Serialize};

pub type Vec3 = Vector3<f64>;
pub type Vec6 = Vector6<f64>;
pub type Mat3 = Matrix3<f64>;
pub type Mat6 = Matrix6<f64>;

/// Skew-symmetric matrix with `skew(a) b = a × b`.
pub fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// A twist `[v; ω]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Twist {
    pub linear: Vec3,
    pub angular: Vec3,
}

impl Twist {
    pub fn new(linear: Vec3, angular: Vec3) -> Self {
        Self { linear, angular }
    }

    /// Revolute joint about unit `axis` through `point`.
    pub fn revolute(axis: Vec3, point: Vec3) -> Self {
        let w = axis.normalize();
        Self {
            linear: -w.cross(&point),
            angular: w,
        }
    }

    pub fn prismatic(direction: Vec3) -> Self {
        Self {
            linear: direction.normalize(),
            angular: Vec3::zeros(),
        }
    }

    pub fn from_vector(v: &Vec6) -> Self {
        Self {
            linear: v.fixed_rows::<3>(0).into(),
            angular: v.fixed_rows::<3>(3).into(),
        }
    }

    pub fn to_vector(&self) -> Vec6 {
        let mut out = Vec6::zeros();
        out.fixed_rows_mut::<3>(0).copy_from(&self.linear);
        out.fixed_rows_mut::<3>(3).copy_from(&self.angular);
        out
    }
}

/// A rigid transform `x ↦ R x + p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            rotation: Mat3::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn new(rotation: Mat3, translation: Vec3) -> Self {
        Self { rotation, translation }
    }

    pub fn from_translation(p: Vec3) -> Self {
        Self::new(Mat3::identity(), p)
    }

    /// Quaternion given as `[w, x, y, z]`; it is normalized first.
    pub fn from_quaternion(wxyz: [f64; 4], translation: Vec3) -> Self {
        let q = UnitQuaternion::from_quaternion(Quaternion::new(wxyz[0], wxyz[1], wxyz[2], wxyz[3]));
        Self::new(q.to_rotation_matrix().into_inner(), translation)
    }

    pub fn quaternion_wxyz(&self) -> [f64; 4] {
        let q = UnitQuaternion::from_matrix(&self.rotation);
        [q.w, q.i, q.j, q.k]
    }

    pub fn mul(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    pub fn transform_point(&self, x: &Vec3) -> Vec3 {
        self.rotation * x + self.translation
    }

    /// `Ad_T = [[R, S(p)R], [0, R]]`, mapping twists expressed in the moved
    /// frame to the reference frame.
    pub fn adjoint(&self) -> Mat6 {
        let r = self.rotation;
        let mut out = Mat6::zeros();
        out.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
        out.fixed_view_mut::<3, 3>(0, 3).copy_from(&(skew(&self.translation) * r));
        out.fixed_view_mut::<3, 3>(3, 3).copy_from(&r);
        out
    }

    pub fn to_matrix(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    /// `‖RᵀR - I‖_F` and `det R - 1`, both expected below `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        let r = &self.rotation;
        let orth = (r.transpose() * r - Mat3::identity()).norm();
        orth <= tol && (r.determinant() - 1.0).abs() <= tol && self.translation.iter().all(|v| v.is_finite())
    }
}

/// `exp([ξ] θ)` by the closed-form Rodrigues expressions.
pub fn pose_exp(twist: &Twist, theta: f64) -> Pose {
    let wn = twist.angular.norm();
    if wn < 1e-12 {
        return Pose::from_translation(twist.linear * theta);
    }
    let w = twist.angular / wn;
    let v = twist.linear / wn;
    let phi = wn * theta;
    let s = skew(&w);
    let s2 = s * s;
    let (sin, cos) = phi.sin_cos();
    let rotation = Mat3::identity() + s * sin + s2 * (1.0 - cos);
    let g = Mat3::identity() * phi + s * (1.0 - cos) + s2 * (phi - sin);
    Pose::new(rotation, g * v)
}

/// Lie bracket matrix: `ad_V W = [V, W]` for `V = [v; ω]`,
/// `ad_V = [[S(ω), S(v)], [0, S(ω)]]`.
pub fn ad(v: &Vec6) -> Mat6 {
    let lin: Vec3 = v.fixed_rows::<3>(0).into();
    let ang: Vec3 = v.fixed_rows::<3>(3).into();
    let sw = skew(&ang);
    let mut out = Mat6::zeros();
    out.fixed_view_mut::<3, 3>(0, 0).copy_from(&sw);
    out.fixed_view_mut::<3, 3>(0, 3).copy_from(&skew(&lin));
    out.fixed_view_mut::<3, 3>(3, 3).copy_from(&sw);
    out
}

/// Body velocity `(T⁻¹ Ṫ)^∨` from a central difference of a pose curve.
pub fn body_velocity_fd(minus: &Pose, center: &Pose, plus: &Pose, h: f64) -> Vec6 {
    let rt = center.rotation.transpose();
    let rdot = (plus.rotation - minus.rotation) / (2.0 * h);
    let pdot = (plus.translation - minus.translation) / (2.0 * h);
    let w = rt * rdot;
    let omega = Vec3::new(w[(2, 1)] - w[(1, 2)], w[(0, 2)] - w[(2, 0)], w[(1, 0)] - w[(0, 1)]) * 0.5;
    let lin = rt * pdot;
    let mut out = Vec6::zeros();
    out.fixed_rows_mut::<3>(0).copy_from(&lin);
    out.fixed_rows_mut::<3>(3).copy_from(&omega);
    out
}
