//! Manipulator and object dynamics.
//!
//! Manipulator dynamics use the recursive Newton-Euler algorithm in link
//! frames; `M`, `C q̇` and `g` are assembled from RNEA calls. Object
//! dynamics are written in a body frame at the object's center of mass.

use nalgebra::{DMatrix, DVector};

use crate::lie::{ad, pose_exp, skew, Mat3, Mat6, Pose, Vec3, Vec6};
use crate::path::JointPath;
use crate::robot::{LinkInertia, RobotModel};
use crate::Result;

pub const DEFAULT_GRAVITY: [f64; 3] = [0.0, 0.0, -9.81];

/// 6×6 spatial inertia about the link frame origin,
/// `[[m I, -m S(c)], [m S(c), I_c - m S(c)²]]`.
pub fn spatial_inertia(link: &LinkInertia) -> Mat6 {
    let m = link.mass;
    let sc = skew(&link.com);
    let mut g = Mat6::zeros();
    g.fixed_view_mut::<3, 3>(0, 0).copy_from(&(Mat3::identity() * m));
    g.fixed_view_mut::<3, 3>(0, 3).copy_from(&(-m * sc));
    g.fixed_view_mut::<3, 3>(3, 0).copy_from(&(m * sc));
    g.fixed_view_mut::<3, 3>(3, 3).copy_from(&(link.inertia - m * sc * sc));
    g
}

/// Spatial inertia `G` re-expressed in a frame `F` given the pose of the
/// body frame relative to `F`.
pub fn transform_inertia(g: &Mat6, body_in_frame: &Pose) -> Mat6 {
    let adj = body_in_frame.inverse().adjoint();
    adj.transpose() * g * adj
}

fn linear_acc(gravity: &Vec3) -> Vec6 {
    let mut v = Vec6::zeros();
    v.fixed_rows_mut::<3>(0).copy_from(&(-gravity));
    v
}

/// RNEA with explicit per-link spatial inertias.
pub fn inverse_dynamics_with_inertias(
    model: &RobotModel,
    inertias: &[Mat6],
    q: &DVector<f64>,
    qd: &DVector<f64>,
    qdd: &DVector<f64>,
    gravity: &Vec3,
) -> Result<DVector<f64>> {
    let n = model.dof();
    for v in [q, qd, qdd] {
        if v.len() != n {
            return Err(crate::Error::Dimension(format!(
                "robot {} has {n} joints, got a vector of length {}",
                model.name,
                v.len()
            )));
        }
    }
    let axes: Vec<Vec6> = model.joints.iter().map(|j| j.twist.to_vector()).collect();
    // adjoints[i] = Ad_{T_{i,i-1}} with T_{i,i-1} = e^{-A_i q_i}
    let adjoints: Vec<Mat6> = model
        .joints
        .iter()
        .zip(q.iter())
        .map(|(j, qi)| pose_exp(&j.twist, -qi).adjoint())
        .collect();

    let mut v = vec![Vec6::zeros(); n];
    let mut a = vec![Vec6::zeros(); n];
    let mut v_prev = Vec6::zeros();
    let mut a_prev = linear_acc(gravity);
    for i in 0..n {
        v[i] = adjoints[i] * v_prev + axes[i] * qd[i];
        a[i] = adjoints[i] * a_prev + ad(&v[i]) * axes[i] * qd[i] + axes[i] * qdd[i];
        v_prev = v[i];
        a_prev = a[i];
    }

    let mut tau = DVector::zeros(n);
    let mut f_next = Vec6::zeros();
    for i in (0..n).rev() {
        let mut f = inertias[i] * a[i] - ad(&v[i]).transpose() * (inertias[i] * v[i]);
        if i + 1 < n {
            f += adjoints[i + 1].transpose() * f_next;
        }
        tau[i] = f.dot(&axes[i]);
        f_next = f;
    }
    Ok(tau)
}

/// `M(q) q̈ + C(q, q̇) q̇ + g(q)`.
pub fn inverse_dynamics(
    model: &RobotModel,
    q: &DVector<f64>,
    qd: &DVector<f64>,
    qdd: &DVector<f64>,
    gravity: &Vec3,
) -> Result<DVector<f64>> {
    let inertias: Vec<Mat6> = model.joints.iter().map(|j| spatial_inertia(&j.link)).collect();
    inverse_dynamics_with_inertias(model, &inertias, q, qd, qdd, gravity)
}

pub fn mass_matrix(model: &RobotModel, q: &DVector<f64>) -> Result<DMatrix<f64>> {
    let n = model.dof();
    let zero = DVector::zeros(n);
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut e = DVector::zeros(n);
        e[i] = 1.0;
        let col = inverse_dynamics(model, q, &zero, &e, &Vec3::zeros())?;
        m.column_mut(i).copy_from(&col);
    }
    Ok(m)
}

/// `C(q, q̇) q̇`
pub fn coriolis_vector(model: &RobotModel, q: &DVector<f64>, qd: &DVector<f64>) -> Result<DVector<f64>> {
    let zero = DVector::zeros(model.dof());
    inverse_dynamics(model, q, qd, &zero, &Vec3::zeros())
}

pub fn gravity_vector(model: &RobotModel, q: &DVector<f64>, gravity: &Vec3) -> Result<DVector<f64>> {
    let zero = DVector::zeros(model.dof());
    inverse_dynamics(model, q, &zero, &zero, gravity)
}

/// Dynamics of one manipulator projected on its path at one `s`:
/// `τ = 𝓜 s̈ + 𝓒 ṡ² + 𝓖`.
#[derive(Clone, Debug)]
pub struct RobotPathSample {
    pub q: DVector<f64>,
    pub dq: DVector<f64>,
    pub ddq: DVector<f64>,
    /// `M q′`
    pub m: DVector<f64>,
    /// `M q″ + C(q, q′) q′`
    pub c: DVector<f64>,
    /// `g(q)`
    pub g: DVector<f64>,
}

pub fn robot_path_sample(model: &RobotModel, path: &JointPath, s: f64, gravity: &Vec3) -> Result<RobotPathSample> {
    let pt = path.eval(s)?;
    let mass = mass_matrix(model, &pt.q)?;
    let m = &mass * &pt.dq;
    let c = &mass * &pt.ddq + coriolis_vector(model, &pt.q, &pt.dq)?;
    let g = gravity_vector(model, &pt.q, gravity)?;
    Ok(RobotPathSample {
        q: pt.q,
        dq: pt.dq,
        ddq: pt.ddq,
        m,
        c,
        g,
    })
}

/// Grasp map `[[R, 0], [S(p)R, R]]` of a contact frame given in object
/// coordinates; it carries contact-frame wrenches `[f; τ]` into the object
/// frame.
pub fn grasp_map(contact_in_object: &Pose) -> Mat6 {
    contact_in_object.inverse().adjoint().transpose()
}

/// Rigid object with its body frame at the center of mass.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectModel {
    pub name: String,
    pub mass: f64,
    pub inertia: Mat3,
    /// Additional constant wrench in object coordinates.
    pub extra_wrench: Vec6,
}

impl ObjectModel {
    /// `M_O = diag(m I, I_O)`
    pub fn spatial_inertia(&self) -> Mat6 {
        let mut g = Mat6::zeros();
        g.fixed_view_mut::<3, 3>(0, 0).copy_from(&(Mat3::identity() * self.mass));
        g.fixed_view_mut::<3, 3>(3, 3).copy_from(&self.inertia);
        g
    }

    /// Weight mapped into the object frame plus the extra wrench.
    pub fn external_wrench(&self, rotation_world: &Mat3, gravity: &Vec3) -> Vec6 {
        let mut w = self.extra_wrench;
        let f = rotation_world.transpose() * gravity * self.mass;
        for k in 0..3 {
            w[k] += f[k];
        }
        w
    }

    /// Velocity-product term `[ω × m v; ω × I ω]` for the velocity direction `J_O`.
    pub fn coriolis(&self, jo: &Vec6) -> Vec6 {
        let v: Vec3 = jo.fixed_rows::<3>(0).into();
        let w: Vec3 = jo.fixed_rows::<3>(3).into();
        let lin = w.cross(&(v * self.mass));
        let ang = w.cross(&(self.inertia * w));
        let mut out = Vec6::zeros();
        out.fixed_rows_mut::<3>(0).copy_from(&lin);
        out.fixed_rows_mut::<3>(3).copy_from(&ang);
        out
    }

    /// `(A, B)` with `f_net = A s̈ + B ṡ²`: `A = M_O J_O`,
    /// `B = M_O J_O′ + 𝓒_O`.
    pub fn net_wrench_coefficients(&self, jo: &Vec6, jop: &Vec6) -> (Vec6, Vec6) {
        let m = self.spatial_inertia();
        (m * jo, m * jop + self.coriolis(jo))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::Twist;
    use crate::robot::tests::{planar2, spatial3};
    use crate::robot::{Joint, JointKind, JointLimits};

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    fn g() -> Vec3 {
        Vec3::from(DEFAULT_GRAVITY)
    }

    #[test]
    fn statics_without_load_needs_no_torque() {
        let r = spatial3();
        let t = inverse_dynamics(&r, &dv(&[0.3, 1.0, -0.2]), &dv(&[0.0; 3]), &dv(&[0.0; 3]), &Vec3::zeros()).unwrap();
        assert_eq!(t.amax(), 0.0);
    }

    #[test]
    fn pendulum_holding_torque() {
        let (m, l, gv) = (2.0, 0.75, 9.81);
        let r = RobotModel {
            name: "pendulum".into(),
            joints: vec![Joint {
                kind: JointKind::Revolute,
                twist: Twist::revolute(Vec3::z(), Vec3::zeros()),
                link: LinkInertia {
                    mass: m,
                    com: Vec3::new(l, 0.0, 0.0),
                    inertia: Mat3::zeros(),
                },
                limits: JointLimits {
                    torque: (-1.0, 1.0),
                    velocity: 1.0,
                    acceleration: (-1.0, 1.0),
                },
            }],
            x_ref: Pose::identity(),
            tool_offset: Pose::identity(),
        };
        for q in [0.0, 0.4, 2.0] {
            let t = gravity_vector(&r, &dv(&[q]), &Vec3::new(0.0, -gv, 0.0)).unwrap();
            assert!((t[0] - m * gv * l * f64::cos(q)).abs() < 1e-12);
        }
    }

    #[test]
    fn rnea_matches_column_assembly() {
        let r = spatial3();
        let q = dv(&[0.4, -1.1, 0.3]);
        let qd = dv(&[0.5, 1.2, -0.8]);
        let qdd = dv(&[-0.3, 0.9, 2.0]);
        let full = inverse_dynamics(&r, &q, &qd, &qdd, &g()).unwrap();
        let m = mass_matrix(&r, &q).unwrap();
        let assembled = &m * &qdd + coriolis_vector(&r, &q, &qd).unwrap() + gravity_vector(&r, &q, &g()).unwrap();
        assert!((full - assembled).amax() < 1e-9);
        assert!((&m - m.transpose()).amax() < 1e-10);
        assert!(m.symmetric_eigenvalues().min() > 0.0);
        assert_eq!(coriolis_vector(&r, &q, &dv(&[0.0; 3])).unwrap().amax(), 0.0);
    }

    #[test]
    fn energy_rate_matches_power() {
        // Integrate q̈ = M⁻¹(τ - C q̇ - g) and compare kinetic energy change
        // with the accumulated power q̇ᵀ(τ - g).
        let r = planar2();
        let gv = Vec3::new(0.0, -9.81, 0.0);
        let tau = |t: f64| dv(&[2.0 * f64::sin(3.0 * t), -1.0 + t]);
        let accel = |q: &DVector<f64>, qd: &DVector<f64>, t: f64| {
            let m = mass_matrix(&r, q).unwrap();
            let rhs = tau(t) - coriolis_vector(&r, q, qd).unwrap() - gravity_vector(&r, q, &gv).unwrap();
            m.lu().solve(&rhs).unwrap()
        };
        let kinetic = |q: &DVector<f64>, qd: &DVector<f64>| 0.5 * qd.dot(&(mass_matrix(&r, q).unwrap() * qd));
        let power = |q: &DVector<f64>, qd: &DVector<f64>, t: f64| qd.dot(&(tau(t) - gravity_vector(&r, q, &gv).unwrap()));

        let (mut q, mut qd) = (dv(&[0.2, 0.5]), dv(&[0.3, -0.4]));
        let e0 = kinetic(&q, &qd);
        let mut work = 0.0;
        let h = 1e-3;
        for k in 0..500 {
            let t = k as f64 * h;
            // RK4 on (q, q̇, W)
            let f = |q: &DVector<f64>, qd: &DVector<f64>, t: f64| (qd.clone(), accel(q, qd, t), power(q, qd, t));
            let (k1q, k1v, k1w) = f(&q, &qd, t);
            let (k2q, k2v, k2w) = f(&(&q + &k1q * (h / 2.0)), &(&qd + &k1v * (h / 2.0)), t + h / 2.0);
            let (k3q, k3v, k3w) = f(&(&q + &k2q * (h / 2.0)), &(&qd + &k2v * (h / 2.0)), t + h / 2.0);
            let (k4q, k4v, k4w) = f(&(&q + &k3q * h), &(&qd + &k3v * h), t + h);
            q += (k1q + k2q * 2.0 + k3q * 2.0 + k4q) * (h / 6.0);
            qd += (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (h / 6.0);
            work += (k1w + 2.0 * k2w + 2.0 * k3w + k4w) * (h / 6.0);
        }
        let e1 = kinetic(&q, &qd);
        assert!((e1 - e0 - work).abs() < 1e-8, "{} vs {}", e1 - e0, work);
    }

    #[test]
    fn grasp_map_examples() {
        assert_eq!(grasp_map(&Pose::identity()), Mat6::identity());
        let gm = grasp_map(&Pose::from_translation(Vec3::new(0.0, 0.0, 1.0)));
        let w = gm * Vec6::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        assert!((w - Vec6::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0)).amax() < 1e-15);

        let pose = Pose::from_quaternion([0.6, 0.3, -0.5, 0.2], Vec3::new(0.3, -0.7, 1.1));
        let gm = grasp_map(&pose);
        let r = pose.rotation;
        assert!((gm.fixed_view::<3, 3>(0, 0) - r).amax() < 1e-15);
        assert!((gm.fixed_view::<3, 3>(3, 3) - r).amax() < 1e-15);
        assert!((gm.fixed_view::<3, 3>(3, 0) - skew(&pose.translation) * r).amax() < 1e-15);
        assert_eq!(gm.fixed_view::<3, 3>(0, 3).amax(), 0.0);
        // Force through the grasp map, back through the inverse adjoint.
        let f = Vec6::new(0.4, -1.2, 2.0, 0.0, 0.0, 0.0);
        let back = pose.adjoint().transpose() * (gm * f);
        assert!((back - f).amax() < 1e-12);
    }

    fn cube() -> ObjectModel {
        ObjectModel {
            name: "cube".into(),
            mass: 1.3,
            inertia: Mat3::new(0.02, 0.001, 0.0, 0.001, 0.03, -0.002, 0.0, -0.002, 0.025),
            extra_wrench: Vec6::zeros(),
        }
    }

    #[test]
    fn object_coefficients_trivial_cases() {
        let o = cube();
        let (a, b) = o.net_wrench_coefficients(&Vec6::zeros(), &Vec6::zeros());
        assert_eq!(a.amax() + b.amax(), 0.0);
        let jo = Vec6::new(1.0, -2.0, 0.5, 0.0, 0.0, 0.0);
        let jop = Vec6::new(0.3, 0.1, -0.2, 0.4, 0.0, 1.0);
        let (_, b) = o.net_wrench_coefficients(&jo, &jop);
        assert_eq!(b, o.spatial_inertia() * jop);
    }

    #[test]
    fn object_coefficients_match_newton_euler() {
        let o = cube();
        let jo = Vec6::new(0.3, -0.5, 0.2, 0.7, -0.4, 0.9);
        let jop = Vec6::new(-0.2, 0.1, 0.6, 0.3, 0.5, -0.1);
        let (sd, sdd) = (1.7, -0.6);
        // V(t) = J_O(s(t)) ṡ(t) with J_O affine in s.
        let vel = |t: f64| {
            let ds = sd * t + 0.5 * sdd * t * t;
            let sdot = sd + sdd * t;
            (jo + jop * ds) * sdot
        };
        let h = 1e-5;
        let vdot = (vel(h) - vel(-h)) / (2.0 * h);
        let v = vel(0.0);
        let lin: Vec3 = v.fixed_rows::<3>(0).into();
        let ang: Vec3 = v.fixed_rows::<3>(3).into();
        let mut f = o.spatial_inertia() * vdot;
        let cl = ang.cross(&(lin * o.mass));
        let ca = ang.cross(&(o.inertia * ang));
        for k in 0..3 {
            f[k] += cl[k];
            f[k + 3] += ca[k];
        }
        let (a, b) = o.net_wrench_coefficients(&jo, &jop);
        assert!((a * sdd + b * sd * sd - f).amax() < 1e-6);
    }
}
