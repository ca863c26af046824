//! Classic phase-plane time-optimal parameterization for contact-free
//! tasks: maximum velocity curve by bisection, then backward and forward
//! RK4 integration of the extremal accelerations in the `(s, ṡ²)` plane.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use topp_core::dynamics::inverse_dynamics;
use topp_core::lie::Vec3;
use topp_core::system::System;
use topp_core::transcription::BoundarySpeeds;

use crate::{Error, Result};

/// Cap on `ṡ²` where no constraint bounds the speed.
const B_CAP: f64 = 1e12;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PhasePlaneProfile {
    pub s: Vec<f64>,
    /// Maximum velocity curve `ṡ_max(s)`.
    pub mvc: Vec<f64>,
    /// Decelerating field integrated from the end.
    pub backward: Vec<f64>,
    /// Accelerating field integrated from the start, kept under `backward`.
    pub profile: Vec<f64>,
    pub total_time: f64,
}

/// Linear constraints `α s̈ + β ṡ² ≤ γ` at one path coordinate.
struct Rows {
    alpha: Vec<f64>,
    beta: Vec<f64>,
    gamma: Vec<f64>,
}

impl Rows {
    fn push(&mut self, a: f64, b: f64, g: f64) {
        self.alpha.push(a);
        self.beta.push(b);
        self.gamma.push(g);
    }

    /// Admissible `s̈` interval at `ṡ² = b`, `None` when empty.
    fn accel_range(&self, b: f64) -> Option<(f64, f64)> {
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..self.alpha.len() {
            let rhs = self.gamma[i] - self.beta[i] * b;
            let a = self.alpha[i];
            if a.abs() <= 1e-14 {
                if rhs < -1e-12 * (1.0 + self.gamma[i].abs()) {
                    return None;
                }
            } else if a > 0.0 {
                hi = hi.min(rhs / a);
            } else {
                lo = lo.max(rhs / a);
            }
        }
        (lo <= hi + 1e-12 * (1.0 + lo.abs().min(hi.abs()))).then_some((lo, hi))
    }

    /// Largest feasible `ṡ²`.
    fn mvc(&self, s: f64) -> Result<f64> {
        if self.accel_range(0.0).is_none() {
            return Err(Error::BoundaryInfeasible { s, sdot: 0.0 });
        }
        let mut hi = 1.0;
        while self.accel_range(hi).is_some() {
            if hi >= B_CAP {
                return Ok(B_CAP);
            }
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.accel_range(mid).is_some() {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        Ok(lo)
    }
}

fn rows_at(system: &System, s: f64) -> Result<Rows> {
    let mut rows = Rows {
        alpha: vec![],
        beta: vec![],
        gamma: vec![],
    };
    let zero_g = Vec3::zeros();
    for r in &system.robots {
        let pt = r.path.eval(s)?;
        let n = pt.q.len();
        let z = DVector::zeros(n);
        let g = inverse_dynamics(&r.model, &pt.q, &z, &z, &system.gravity)?;
        let m = inverse_dynamics(&r.model, &pt.q, &z, &pt.dq, &zero_g)?;
        let c = inverse_dynamics(&r.model, &pt.q, &pt.dq, &pt.ddq, &zero_g)?;
        for i in 0..n {
            let l = &r.limits[i];
            rows.push(m[i], c[i], l.torque.1 - g[i]);
            rows.push(-m[i], -c[i], g[i] - l.torque.0);
            rows.push(pt.dq[i], pt.ddq[i], l.acceleration.1);
            rows.push(-pt.dq[i], -pt.ddq[i], -l.acceleration.0);
            rows.push(0.0, pt.dq[i] * pt.dq[i], l.velocity * l.velocity);
        }
    }
    Ok(rows)
}

/// `resolution` uniform steps over `[0, 1]`.
pub fn topp_phase_plane(system: &System, boundary: BoundarySpeeds, resolution: usize) -> Result<PhasePlaneProfile> {
    if !system.contacts.is_empty() || !system.objects.is_empty() {
        return Err(Error::HasContacts);
    }
    let n = resolution.max(1);
    let h = 1.0 / n as f64;
    let half: Vec<f64> = (0..=2 * n).map(|j| if j == 2 * n { 1.0 } else { j as f64 * 0.5 * h }).collect();
    let rows = half.iter().map(|&s| rows_at(system, s)).collect::<Result<Vec<_>>>()?;
    let mvc = rows
        .iter()
        .zip(&half)
        .map(|(r, &s)| r.mvc(s))
        .collect::<Result<Vec<_>>>()?;

    let extremal = |j: usize, b: f64, upper: bool| -> Result<f64> {
        let bb = b.clamp(0.0, mvc[j]);
        let (lo, hi) = rows[j].accel_range(bb).unwrap_or_else(|| {
            // Round-off just above the curve: the range has collapsed.
            let r = rows[j].accel_range(bb * (1.0 - 1e-9)).unwrap_or((0.0, 0.0));
            (0.5 * (r.0 + r.1), 0.5 * (r.0 + r.1))
        });
        let a = if upper { hi } else { lo };
        if !a.is_finite() {
            return Err(Error::Singular { s: half[j] });
        }
        Ok(2.0 * a)
    };

    let start = boundary.start * boundary.start;
    if start > mvc[0] * (1.0 + 1e-9) {
        return Err(Error::BoundaryInfeasible {
            s: 0.0,
            sdot: boundary.start,
        });
    }
    let end = match boundary.end {
        Some(e) if e * e > mvc[2 * n] * (1.0 + 1e-9) => return Err(Error::BoundaryInfeasible { s: 1.0, sdot: e }),
        Some(e) => e * e,
        None => mvc[2 * n],
    };

    let mut back = vec![0.0; n + 1];
    back[n] = end;
    for i in (1..=n).rev() {
        let b = back[i];
        let k1 = extremal(2 * i, b, false)?;
        let k2 = extremal(2 * i - 1, b - 0.5 * h * k1, false)?;
        let k3 = extremal(2 * i - 1, b - 0.5 * h * k2, false)?;
        let k4 = extremal(2 * i - 2, b - h * k3, false)?;
        back[i - 1] = (b - h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)).clamp(0.0, mvc[2 * i - 2]);
    }

    let mut fwd = vec![0.0; n + 1];
    fwd[0] = start.min(back[0]);
    for i in 0..n {
        let b = fwd[i];
        let k1 = extremal(2 * i, b, true)?;
        let k2 = extremal(2 * i + 1, b + 0.5 * h * k1, true)?;
        let k3 = extremal(2 * i + 1, b + 0.5 * h * k2, true)?;
        let k4 = extremal(2 * i + 2, b + h * k3, true)?;
        fwd[i + 1] = (b + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)).clamp(0.0, mvc[2 * i + 2].min(back[i + 1]));
    }

    let sdot: Vec<f64> = fwd.iter().map(|b| b.sqrt()).collect();
    let mut total = 0.0;
    for i in 0..n {
        let den = sdot[i] + sdot[i + 1];
        if den <= 0.0 {
            return Err(Error::Core(topp_core::Error::Interval {
                interval: i,
                message: "phase-plane profile stalls".into(),
            }));
        }
        total += 2.0 * h / den;
    }
    Ok(PhasePlaneProfile {
        s: (0..=n).map(|i| i as f64 * h).collect(),
        mvc: (0..=n).map(|i| mvc[2 * i].sqrt()).collect(),
        backward: back.iter().map(|b| b.sqrt()).collect(),
        profile: sdot,
        total_time: total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn massless(velocity: f64) -> System {
        crate::fixtures::slider(0.0, 1.0, velocity, 1.0)
    }

    #[test]
    fn double_integrator_takes_two() {
        let p = topp_phase_plane(&massless(100.0), BoundarySpeeds::default(), 2500).unwrap();
        assert!((p.total_time - 2.0).abs() < 1e-3, "{}", p.total_time);
        for (v, m) in p.profile.iter().zip(&p.mvc) {
            assert!(v <= m);
        }
    }

    /// Accelerate to v̄, cruise, decelerate: T = L/v̄ + v̄/a.
    #[test]
    fn velocity_limit_gives_trapezoid() {
        let vmax = 0.5;
        let p = topp_phase_plane(&massless(vmax), BoundarySpeeds::default(), 2500).unwrap();
        let exact = 1.0 / vmax + vmax / 1.0;
        assert!((p.total_time - exact).abs() < 1e-3, "{} vs {exact}", p.total_time);
    }

    #[test]
    fn free_end_accelerates_throughout() {
        let b = BoundarySpeeds { start: 0.0, end: None };
        let p = topp_phase_plane(&massless(100.0), b, 2000).unwrap();
        assert!((p.total_time - 2f64.sqrt()).abs() < 1e-3);
    }

    #[test]
    fn unbounded_acceleration_is_singular() {
        let mut sys = massless(100.0);
        sys.robots[0].limits[0].acceleration = (-f64::INFINITY, f64::INFINITY);
        assert!(matches!(
            topp_phase_plane(&sys, BoundarySpeeds::default(), 10),
            Err(Error::Singular { .. })
        ));
    }
}
