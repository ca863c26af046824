//! Writes `scenarios/paths/pivoting.json`: joint waypoints of `arm3` that tip
//! a box about its bottom +x edge while the fingers keep their grip.
//!
//! Run with `cargo run -p topp-core --example pivot_waypoints`.

use std::f64::consts::FRAC_PI_2;
use std::path::PathBuf;

use nalgebra::DVector;
use topp_core::lie::{Mat3, Pose, Vec3};
use topp_core::robot::RobotSpec;

/// Box half extents along x and z.
const HALF_X: f64 = 0.05;
const HALF_Z: f64 = 0.1;
/// Box center at rest and the pivot edge, both in the xz-plane.
const CENTER: [f64; 2] = [0.6, HALF_Z];
/// Flange above the box center along the box z-axis.
const GRASP: f64 = 0.15;
const TILT: f64 = 0.5;
const WAYPOINTS: usize = 9;
const LINKS: [f64; 3] = [0.5, 0.4, 0.1];
const SHOULDER_Z: f64 = 0.2;

fn rot_y(a: f64) -> Mat3 {
    Mat3::new(a.cos(), 0.0, a.sin(), 0.0, 1.0, 0.0, -a.sin(), 0.0, a.cos())
}

/// Flange pose when the box has tipped by `theta`.
fn flange_target(theta: f64) -> Pose {
    let edge = Vec3::new(CENTER[0] + HALF_X, 0.0, 0.0);
    let center = Vec3::new(CENTER[0], 0.0, CENTER[1]);
    let r = rot_y(theta);
    let box_pose = Pose::new(r, edge + r * (center - edge));
    let box_in_flange = Pose::new(rot_y(std::f64::consts::PI), Vec3::new(0.0, 0.0, GRASP));
    box_pose.mul(&box_in_flange.inverse())
}

/// Joint angles reaching `target`. A positive rotation about y turns the
/// x-axis towards -z, so link directions are `(cos φ, -sin φ)` in (x, z).
fn inverse_kinematics(target: &Pose, theta: f64) -> [f64; 3] {
    let sum = theta + FRAC_PI_2;
    let wx = target.translation.x - LINKS[2] * sum.cos();
    let wz = target.translation.z + LINKS[2] * sum.sin() - SHOULDER_Z;
    // Planar two-link solution in standard angles α = -q.
    let (l1, l2) = (LINKS[0], LINKS[1]);
    let c2 = (wx * wx + wz * wz - l1 * l1 - l2 * l2) / (2.0 * l1 * l2);
    assert!(c2.abs() <= 1.0, "waypoint out of reach");
    let b2 = -c2.acos();
    let b1 = wz.atan2(wx) - (l2 * b2.sin()).atan2(l1 + l2 * b2.cos());
    let (q1, q2) = (-b1, -b2);
    [q1, q2, sum - q1 - q2]
}

fn main() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let model = RobotSpec::load(&root.join("robots/arm3.json")).expect("arm3 model");
    let mut waypoints = Vec::new();
    for i in 0..WAYPOINTS {
        let theta = TILT * i as f64 / (WAYPOINTS - 1) as f64;
        let target = flange_target(theta);
        let q = inverse_kinematics(&target, theta);
        let reached = model.forward_kinematics(&DVector::from_column_slice(&q)).unwrap();
        let err = (reached.translation - target.translation).norm() + (reached.rotation - target.rotation).norm();
        assert!(err < 1e-12, "forward kinematics disagrees by {err}");
        waypoints.push(q.iter().map(|v| (v * 1e12).round() / 1e12).collect::<Vec<_>>());
    }
    let doc = serde_json::json!({ "waypoints": waypoints, "boundary": "natural" });
    let out = root.join("paths/pivoting.json");
    std::fs::write(&out, serde_json::to_string_pretty(&doc).unwrap() + "\n").unwrap();
    println!("wrote {}", out.display());
}
