//! Finite-difference cross-checks of the kinematic and dynamic quantities
//! the transcription consumes, at seeded random points.

use nalgebra::DVector;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use topp_core::dynamics::{inverse_dynamics, robot_path_sample};
use topp_core::lie::body_velocity_fd;
use topp_core::robot::DerivativeMethod;
use topp_core::system::System;

use crate::Result;

/// Tolerance of the finite-difference checks.
pub const FD_TOL: f64 = 1e-5;
/// Tolerance of the substitution identity, which involves no differencing.
pub const SUBSTITUTION_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdOptions {
    pub seed: u64,
    /// Random points per finite-difference check.
    pub points: usize,
    /// Random `(s, ṡ, s̈)` samples for the substitution identity.
    pub substitution_samples: usize,
    /// Multiplies `q″` on the RNEA side; anything but 1 injects a fault.
    pub ddq_sign: f64,
}

impl Default for FdOptions {
    fn default() -> Self {
        Self {
            seed: 20240611,
            points: 20,
            substitution_samples: 50,
            ddq_sign: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdCheck {
    pub name: String,
    pub samples: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdLedger {
    pub scenario: String,
    pub seed: u64,
    pub checks: Vec<FdCheck>,
}

impl FdLedger {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&FdCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn rel(err: f64, scale: f64) -> f64 {
    err / (1.0 + scale)
}

struct Acc {
    name: String,
    samples: usize,
    max: f64,
    tol: f64,
}

impl Acc {
    fn new(name: String, tol: f64) -> Self {
        Self {
            name,
            samples: 0,
            max: 0.0,
            tol,
        }
    }

    fn add(&mut self, e: f64) {
        self.samples += 1;
        self.max = if e.is_nan() { f64::INFINITY } else { self.max.max(e) };
    }

    fn finish(self) -> FdCheck {
        FdCheck {
            passed: self.max <= self.tol,
            name: self.name,
            samples: self.samples,
            max_error: self.max,
            tolerance: self.tol,
        }
    }
}

pub fn fd_suite(system: &System, opts: &FdOptions) -> Result<FdLedger> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut checks = Vec::new();
    let h = 1e-6;
    // Stay inside the domain for the central differences along s.
    let draw_s = |rng: &mut ChaCha8Rng| rng.random_range(0.01..0.99);

    for (r, rob) in system.robots.iter().enumerate() {
        let model = &rob.model;
        let n = model.dof();
        let mut path_d1 = Acc::new(format!("robot{r}.path_first_derivative"), FD_TOL);
        let mut path_d2 = Acc::new(format!("robot{r}.path_second_derivative"), FD_TOL);
        let mut jac = Acc::new(format!("robot{r}.body_jacobian"), FD_TOL);
        let mut jdot = Acc::new(format!("robot{r}.jacobian_path_derivative"), FD_TOL);
        for _ in 0..opts.points {
            let s = draw_s(&mut rng);
            let (lo, c, hi) = (rob.path.eval(s - h)?, rob.path.eval(s)?, rob.path.eval(s + h)?);
            let d1 = (&hi.q - &lo.q) / (2.0 * h);
            path_d1.add(rel((d1 - &c.dq).amax(), c.dq.amax()));
            let d2 = (&hi.dq - &lo.dq) / (2.0 * h);
            path_d2.add(rel((d2 - &c.ddq).amax(), c.ddq.amax()));

            // J q̇ against the body velocity of the flange.
            let qd = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
            let x = model.forward_kinematics(&c.q)?;
            let xp = model.forward_kinematics(&(&c.q + &qd * h))?;
            let xm = model.forward_kinematics(&(&c.q - &qd * h))?;
            let fd = body_velocity_fd(&xm, &x, &xp, h);
            let an = model.body_jacobian(&c.q)? * &qd;
            jac.add(rel((DVector::from_column_slice(fd.as_slice()) - &an).amax(), an.amax()));

            // dJ/ds against central differences of J(q(s)).
            let analytic = model.jacobian_path_derivative(&rob.path, s, DerivativeMethod::Analytic)?;
            let numeric = (model.body_jacobian(&hi.q)? - model.body_jacobian(&lo.q)?) / (2.0 * h);
            jdot.add(rel((analytic - &numeric).amax(), numeric.amax()));
        }
        checks.extend([path_d1.finish(), path_d2.finish(), jac.finish(), jdot.finish()]);

        let mut sub = Acc::new(format!("robot{r}.rnea_substitution"), SUBSTITUTION_TOL);
        for _ in 0..opts.substitution_samples {
            let s = rng.random_range(0.0..=1.0);
            let sd: f64 = rng.random_range(0.0..3.0);
            let sdd: f64 = rng.random_range(-5.0..5.0);
            let smp = robot_path_sample(model, &rob.path, s, &system.gravity)?;
            let lhs = &smp.m * sdd + &smp.c * (sd * sd) + &smp.g;
            let qd = &smp.dq * sd;
            let qdd = &smp.ddq * (opts.ddq_sign * sd * sd) + &smp.dq * sdd;
            let rhs = inverse_dynamics(model, &smp.q, &qd, &qdd, &system.gravity)?;
            sub.add(rel((&lhs - &rhs).amax(), rhs.amax()));
        }
        checks.push(sub.finish());
    }

    for o in 0..system.objects.len() {
        let (r, offset) = system.root_of(o)?;
        let rob = &system.robots[r];
        let mut jo_check = Acc::new(format!("object{o}.velocity_jacobian"), FD_TOL);
        let mut jop_check = Acc::new(format!("object{o}.velocity_jacobian_path_derivative"), FD_TOL);
        for _ in 0..opts.points {
            let s = draw_s(&mut rng);
            let pose = |s: f64| -> Result<_> { Ok(rob.model.forward_kinematics(&rob.path.eval(s)?.q)?.mul(&offset)) };
            let fd = body_velocity_fd(&pose(s - h)?, &pose(s)?, &pose(s + h)?, h);
            let (jo, jop) = rob.model.object_path_kinematics(&rob.path, s, &offset, DerivativeMethod::Analytic)?;
            jo_check.add(rel((fd - jo).amax(), jo.amax()));
            let (jo_hi, _) = rob.model.object_path_kinematics(&rob.path, s + h, &offset, DerivativeMethod::Analytic)?;
            let (jo_lo, _) = rob.model.object_path_kinematics(&rob.path, s - h, &offset, DerivativeMethod::Analytic)?;
            let numeric = (jo_hi - jo_lo) / (2.0 * h);
            jop_check.add(rel((numeric - jop).amax(), jop.amax()));
        }
        checks.extend([jo_check.finish(), jop_check.finish()]);
    }

    Ok(FdLedger {
        scenario: system.name.clone(),
        seed: opts.seed,
        checks,
    })
}
