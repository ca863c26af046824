//! Resubstitution audit: every constraint of the time-optimal program is
//! recomputed from the robot, path, object and contact models and checked
//! against a solved `(a, b, c, d, τ, F)`.

use std::collections::BTreeMap;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use topp_core::contact::cone_margin;
use topp_core::dynamics::inverse_dynamics;
use topp_core::lie::{Pose, Vec3, Vec6};
use topp_core::system::{frame_from_normal, Attachment, ContactKind, System};
use topp_core::transcription::{BoundarySpeeds, ScalingSolution};

use crate::Result;

/// Largest relative violation accepted per row.
pub const AUDIT_TOL: f64 = 1e-6;

/// Step along `q′` for the directional derivative of the body Jacobian.
const FD_STEP: f64 = 1e-5;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FamilyReport {
    pub rows: usize,
    /// Largest relative violation; zero when every row holds.
    pub max_violation: f64,
    /// Midpoint (or grid point) indices with a violation above the tolerance.
    pub violating: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub families: BTreeMap<String, FamilyReport>,
}

impl AuditReport {
    fn record(&mut self, family: &str, index: usize, violation: f64) {
        let f = self.families.entry(family.to_string()).or_default();
        f.rows += 1;
        let v = violation.max(0.0);
        if v > f.max_violation || v.is_nan() {
            f.max_violation = if v.is_nan() { f64::INFINITY } else { v };
        }
        if (v > AUDIT_TOL || v.is_nan()) && f.violating.last() != Some(&index) {
            f.violating.push(index);
        }
    }

    pub fn max_violation(&self) -> f64 {
        self.families.values().map(|f| f.max_violation).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_violation() <= AUDIT_TOL
    }
}

fn rel_eq(residual: f64, scale: f64) -> f64 {
    residual.abs() / scale.abs().max(1.0)
}

fn rel_upper(value: f64, upper: f64) -> f64 {
    (value - upper) / upper.abs().max(1.0)
}

fn to_vec6(v: &DVector<f64>) -> Vec6 {
    Vec6::from_column_slice(v.as_slice())
}

/// Grasp map `Ad_{T⁻¹}ᵀ` of a contact frame given in a body frame.
fn wrench_map(contact_in_body: &Pose) -> nalgebra::Matrix6<f64> {
    contact_in_body.inverse().adjoint().transpose()
}

pub fn audit(system: &System, boundary: BoundarySpeeds, sol: &ScalingSolution) -> Result<AuditReport> {
    let mut rep = AuditReport::default();
    let kn = sol.a.len();

    for k in 0..kn {
        let s = 0.5 * (sol.s[k] + sol.s[k + 1]);
        let bm = 0.5 * (sol.b[k] + sol.b[k + 1]);
        let a = sol.a[k];
        let sd = bm.max(0.0).sqrt();

        // Kinematics straight from the models.
        let mut pts = Vec::new();
        let mut flanges = Vec::new();
        for r in &system.robots {
            let pt = r.path.eval(s)?;
            flanges.push(r.model.forward_kinematics(&pt.q)?);
            pts.push(pt);
        }
        let mut obj_world = Vec::new();
        let mut obj_root = Vec::new();
        for o in 0..system.objects.len() {
            let mut off = Pose::identity();
            let mut cur = o;
            let robot = loop {
                match &system.objects[cur].attachment {
                    Attachment::Robot { robot, offset } => {
                        off = offset.mul(&off);
                        break *robot;
                    }
                    Attachment::Object { object, offset } => {
                        off = offset.mul(&off);
                        cur = *object;
                    }
                }
            };
            obj_world.push(flanges[robot].mul(&off));
            obj_root.push((robot, off));
        }
        let contact_in_obj: Vec<Pose> = system
            .contacts
            .iter()
            .map(|c| match &c.kind {
                ContactKind::Environment { world_normal: Some(n) } => {
                    Pose::new(obj_world[c.object].rotation.transpose() * frame_from_normal(n), c.pose.translation)
                }
                _ => c.pose,
            })
            .collect();

        // Joint dynamics.
        let mut off = 0;
        for (r, rob) in system.robots.iter().enumerate() {
            let pt = &pts[r];
            let n = pt.q.len();
            let qd = &pt.dq * sd;
            let qdd = &pt.ddq * bm + &pt.dq * a;
            let rnea = inverse_dynamics(&rob.model, &pt.q, &qd, &qdd, &system.gravity)?;
            let mut contact_torque = DVector::zeros(n);
            for (j, c) in system.contacts.iter().enumerate() {
                if c.kind != (ContactKind::Manipulator { robot: r }) {
                    continue;
                }
                let world = obj_world[c.object].mul(&contact_in_obj[j]);
                let in_flange = flanges[r].inverse().mul(&world);
                let jc = rob.model.body_jacobian_at(&pt.q, &in_flange)?;
                contact_torque += jc.transpose() * DVector::from_column_slice(&sol.wrenches[k][j]);
            }
            for i in 0..n {
                let tau = sol.tau[k][off + i];
                let res = tau - rnea[i] - contact_torque[i];
                let scale = tau.abs().max(rnea[i].abs()).max(contact_torque[i].abs());
                rep.record("dynamics", k, rel_eq(res, scale));

                let l = &rob.limits[i];
                rep.record("torque", k, rel_upper(tau, l.torque.1).max(rel_upper(-tau, -l.torque.0)));
                let v2 = pt.dq[i] * pt.dq[i] * bm;
                rep.record("velocity", k, rel_upper(v2, l.velocity * l.velocity));
                let acc = qdd[i];
                rep.record(
                    "acceleration",
                    k,
                    rel_upper(acc, l.acceleration.1).max(rel_upper(-acc, -l.acceleration.0)),
                );
            }
            off += n;
        }

        // Object balance from Newton-Euler in the body frame.
        let mut balance: Vec<Vec6> = Vec::with_capacity(system.objects.len());
        let mut scale: Vec<f64> = Vec::with_capacity(system.objects.len());
        for (o, obj) in system.objects.iter().enumerate() {
            let (r, offset) = obj_root[o];
            let rob = &system.robots[r];
            let pt = &pts[r];
            let ad = offset.inverse().adjoint();
            let j = rob.model.body_jacobian(&pt.q)?;
            let dir = &pt.dq * FD_STEP;
            let jp = rob.model.body_jacobian(&(&pt.q + &dir))?;
            let jm = rob.model.body_jacobian(&(&pt.q - &dir))?;
            let dj = (jp - jm) / (2.0 * FD_STEP);
            let jo = ad * to_vec6(&(&j * &pt.dq));
            let jop = ad * to_vec6(&(&dj * &pt.dq + &j * &pt.ddq));
            let vel = jo * sd;
            let acc = jop * bm + jo * a;
            let (v, w) = (vel.fixed_rows::<3>(0).into_owned(), vel.fixed_rows::<3>(3).into_owned());
            let (vd, wd) = (acc.fixed_rows::<3>(0).into_owned(), acc.fixed_rows::<3>(3).into_owned());
            let m = obj.model.mass;
            let inertia = obj.model.inertia;
            let force = m * (vd + w.cross(&v));
            let torque = inertia * wd + w.cross(&(inertia * w));
            let r_wo = obj_world[o].rotation;
            let gravity: Vec3 = m * r_wo.transpose() * system.gravity;
            let mut bal = Vec6::zeros();
            for i in 0..3 {
                bal[i] = gravity[i] + obj.model.extra_wrench[i] - force[i];
                bal[3 + i] = obj.model.extra_wrench[3 + i] - torque[i];
            }
            scale.push(force.amax().max(torque.amax()).max(gravity.amax()));
            balance.push(bal);
        }
        for (j, c) in system.contacts.iter().enumerate() {
            let f = Vec6::from(sol.wrenches[k][j]);
            let into = wrench_map(&contact_in_obj[j]) * f;
            balance[c.object] += into;
            scale[c.object] = scale[c.object].max(into.amax());
            if let ContactKind::Support { from_object } = c.kind {
                let world = obj_world[c.object].mul(&contact_in_obj[j]);
                let rel = obj_world[from_object].inverse().mul(&world);
                let out = wrench_map(&rel) * f;
                balance[from_object] -= out;
                scale[from_object] = scale[from_object].max(out.amax());
            }
        }
        for (o, bal) in balance.iter().enumerate() {
            for i in 0..6 {
                rep.record("wrench_balance", k, rel_eq(bal[i], scale[o]));
            }
        }

        // Contacts.
        for (j, c) in system.contacts.iter().enumerate() {
            let w = Vec6::from(sol.wrenches[k][j]);
            let wscale = w.amax();
            match cone_margin(&c.friction, c.model, &w) {
                Ok(m) => {
                    rep.record("friction_cone", k, -m / wscale.max(1.0));
                    rep.record("pinned_component", k, 0.0);
                }
                Err(_) => {
                    let worst = c.model.pinned().iter().map(|&i| w[i].abs()).fold(0.0, f64::max);
                    rep.record("pinned_component", k, worst / wscale.max(1.0));
                }
            }
            if let Some(fz) = c.normal_force_max.filter(|f| f.is_finite()) {
                rep.record("normal_force", k, rel_upper(w[2], fz));
            }
        }

        // Scaling variables.
        let ds = sol.s[k + 1] - sol.s[k];
        let coupling = sol.b[k + 1] - sol.b[k] - 2.0 * ds * a;
        rep.record("coupling", k, rel_eq(coupling, sol.b[k].abs().max(sol.b[k + 1].abs())));
        let cs = sol.c[k] + sol.c[k + 1];
        rep.record("epigraph_d", k, 1.0 - sol.d[k] * cs);
    }

    for (i, (&b, &c)) in sol.b.iter().zip(&sol.c).enumerate() {
        for rob in &system.robots {
            let dq = rob.path.eval(sol.s[i])?.dq;
            for (j, l) in rob.limits.iter().enumerate() {
                rep.record("velocity_grid", i, rel_upper(dq[j] * dq[j] * b, l.velocity * l.velocity));
            }
        }
        rep.record("b_nonnegative", i, -b / b.abs().max(1.0));
        rep.record("epigraph_c", i, (c * c - b) / b.abs().max(1.0));
    }
    let start = boundary.start * boundary.start;
    rep.record("boundary", 0, rel_eq(sol.b[0] - start, start));
    if let Some(e) = boundary.end {
        rep.record("boundary", kn, rel_eq(sol.b[kn] - e * e, e * e));
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::slider;
    use topp_core::path::JointPath;
    use topp_core::run::run_system;
    use topp_core::Settings;

    fn solved() -> (System, ScalingSolution) {
        let sys = slider(1.0, 1.0, 100.0, 100.0);
        let r = run_system(&sys, 20, BoundarySpeeds::default(), &Settings::default()).unwrap();
        (sys, r.solution.unwrap())
    }

    #[test]
    fn solved_slider_passes() {
        let (sys, sol) = solved();
        let rep = audit(&sys, BoundarySpeeds::default(), &sol).unwrap();
        assert!(rep.passed(), "{rep:#?}");
        assert_eq!(rep, audit(&sys, BoundarySpeeds::default(), &sol).unwrap());
    }

    #[test]
    fn inflated_torque_flags_saturated_midpoints() {
        let (sys, mut sol) = solved();
        for t in sol.tau.iter_mut() {
            t[0] *= 1.1;
        }
        let expected: Vec<usize> = (0..sol.tau.len()).filter(|&k| sol.tau[k][0].abs() > 1.0 + 1e-6).collect();
        assert!(!expected.is_empty());
        let rep = audit(&sys, BoundarySpeeds::default(), &sol).unwrap();
        assert_eq!(rep.families["torque"].violating, expected);
        assert!(!rep.families["dynamics"].violating.is_empty());
    }

    #[test]
    fn constant_path_has_zero_dynamics_residual() {
        let mut sys = slider(1.0, 1.0, 100.0, 100.0);
        sys.robots[0].path = JointPath::constant(&[0.3]).unwrap();
        let k = 4;
        let sol = ScalingSolution {
            s: (0..=k).map(|i| i as f64 / k as f64).collect(),
            a: vec![0.0; k],
            b: vec![1.0; k + 1],
            c: vec![1.0; k + 1],
            d: vec![0.5; k],
            tau: vec![vec![0.0]; k],
            wrenches: vec![vec![]; k],
        };
        let b = BoundarySpeeds { start: 1.0, end: Some(1.0) };
        let rep = audit(&sys, b, &sol).unwrap();
        assert_eq!(rep.families["dynamics"].max_violation, 0.0);
        assert!(rep.passed());
    }
}
