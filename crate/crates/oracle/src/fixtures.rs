//! Small programmatic systems shared by tests and the acceptance suite.

use nalgebra::Matrix3;
use topp_core::lie::{Pose, Twist, Vec3};
use topp_core::path::{JointPath, SplineBoundary};
use topp_core::robot::{DerivativeMethod, Joint, JointKind, JointLimits, LinkInertia, RobotModel};
use topp_core::system::{RobotInstance, System};

/// One prismatic joint along x with a link of `mass`, driven along
/// `q(s) = s` under `|τ| ≤ torque`, `|q̈| ≤ accel` and `|q̇| ≤ velocity`.
pub fn slider(mass: f64, torque: f64, velocity: f64, accel: f64) -> System {
    let limits = JointLimits {
        torque: (-torque, torque),
        velocity,
        acceleration: (-accel, accel),
    };
    let model = RobotModel {
        name: "slider".into(),
        joints: vec![Joint {
            kind: JointKind::Prismatic,
            twist: Twist::prismatic(Vec3::x()),
            link: LinkInertia {
                mass,
                com: Vec3::zeros(),
                inertia: Matrix3::identity() * (0.01 * mass),
            },
            limits,
        }],
        x_ref: Pose::identity(),
        tool_offset: Pose::identity(),
    };
    System {
        name: "slider".into(),
        robots: vec![RobotInstance {
            model,
            path: JointPath::new(&[vec![0.0], vec![1.0]], SplineBoundary::Natural).unwrap(),
            limits: vec![limits],
        }],
        objects: vec![],
        contacts: vec![],
        gravity: Vec3::new(0.0, 0.0, -9.81),
        derivative: DerivativeMethod::Analytic,
    }
}

/// Massless double integrator with `|q̈| ≤ 1`.
pub fn double_integrator() -> System {
    slider(0.0, 1.0, 100.0, 1.0)
}
