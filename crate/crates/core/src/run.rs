//! End-to-end pipeline: assemble, solve, recover time, resample on a
//! uniform time grid and write outputs.

use std::path::Path;

use serde::{Deserialize, Serialize};
use topp_conic::{canonicalize, solve, Residuals, Settings, SolveReport, Status};

use crate::contact::margin_unchecked;
use crate::lie::Vec6;
use crate::scenario::Scenario;
use crate::system::System;
use crate::transcription::{assemble, build_grid, recover_time, BoundarySpeeds, ScalingSolution, TimeMap, Transcription};
use crate::{Error, Result};

pub const OUTPUT_FORMAT: &str = "topp-run";
pub const OUTPUT_VERSION: u32 = 1;

#[derive(Clone, Debug, Default)]
pub struct RunSettings {
    /// Overrides the scenario's grid size.
    pub grid: Option<usize>,
    pub solver: Settings,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub transcription: Transcription,
    pub report: SolveReport,
    pub solution: Option<ScalingSolution>,
    pub time: Option<TimeMap>,
}

impl RunResult {
    pub fn status(&self) -> Status {
        self.report.status
    }

    pub fn total_time(&self) -> Option<f64> {
        self.time.as_ref().map(|t| t.total)
    }
}

pub fn solve_transcription(t: Transcription, settings: &Settings) -> Result<RunResult> {
    let (form, _) = canonicalize(&t.program)?;
    let report = solve(&form, settings);
    let (solution, time) = if report.status == Status::Optimal {
        let sol = t.extract(&report.x);
        let time = recover_time(&t.grid, &sol.b)?;
        (Some(sol), Some(time))
    } else {
        (None, None)
    };
    Ok(RunResult {
        transcription: t,
        report,
        solution,
        time,
    })
}

pub fn run_system(system: &System, k: usize, boundary: BoundarySpeeds, settings: &Settings) -> Result<RunResult> {
    let grid = build_grid(k)?;
    solve_transcription(assemble(system, &grid, boundary)?, settings)
}

pub fn run(scenario: &Scenario, settings: &RunSettings) -> Result<RunResult> {
    run_system(
        &scenario.system,
        settings.grid.unwrap_or(scenario.grid),
        scenario.boundary,
        &settings.solver,
    )
}

/// Trajectory sampled on a uniform time grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub s: Vec<f64>,
    pub sdot: Vec<f64>,
    pub q: Vec<Vec<f64>>,
    pub qd: Vec<Vec<f64>>,
    pub qdd: Vec<Vec<f64>>,
    /// Piecewise constant: the solved torque of the enclosing interval.
    pub tau: Vec<Vec<f64>>,
    /// Piecewise constant per contact, like `tau`.
    pub wrenches: Vec<Vec<[f64; 6]>>,
    pub margins: Vec<Vec<f64>>,
}

/// Samples the solution at `count` uniform times. Within an interval `s̈`
/// is constant, so `s(t)` is an exact quadratic.
pub fn resample(system: &System, sol: &ScalingSolution, time: &TimeMap, count: usize) -> Result<Trajectory> {
    let count = count.max(2);
    let kn = sol.a.len();
    let speed: Vec<f64> = sol.b.iter().map(|b| b.max(0.0).sqrt()).collect();
    let mut out = Trajectory {
        t: Vec::with_capacity(count),
        s: Vec::with_capacity(count),
        sdot: Vec::with_capacity(count),
        q: Vec::with_capacity(count),
        qd: Vec::with_capacity(count),
        qdd: Vec::with_capacity(count),
        tau: Vec::with_capacity(count),
        wrenches: Vec::with_capacity(count),
        margins: Vec::with_capacity(count),
    };
    let mut k = 0;
    for i in 0..count {
        let t = time.total * i as f64 / (count - 1) as f64;
        while k + 1 < kn && t > time.t[k + 1] {
            k += 1;
        }
        let ds = sol.s[k + 1] - sol.s[k];
        let accel = (sol.b[k + 1] - sol.b[k]) / (2.0 * ds);
        let tau_k = (t - time.t[k]).clamp(0.0, time.t[k + 1] - time.t[k]);
        let s = if i == count - 1 {
            1.0
        } else {
            (sol.s[k] + speed[k] * tau_k + 0.5 * accel * tau_k * tau_k).clamp(sol.s[k], sol.s[k + 1])
        };
        let sdot = (speed[k] + accel * tau_k).max(0.0);
        let mut q = Vec::new();
        let mut qd = Vec::new();
        let mut qdd = Vec::new();
        for r in &system.robots {
            let p = r.path.eval(s)?;
            for j in 0..p.q.len() {
                q.push(p.q[j]);
                qd.push(p.dq[j] * sdot);
                qdd.push(p.ddq[j] * sdot * sdot + p.dq[j] * accel);
            }
        }
        let ws = sol.wrenches[k].clone();
        out.margins.push(
            system
                .contacts
                .iter()
                .zip(&ws)
                .map(|(c, w)| margin_unchecked(&c.friction, c.model, &Vec6::from(*w)))
                .collect(),
        );
        out.t.push(t);
        out.s.push(s);
        out.sdot.push(sdot);
        out.q.push(q);
        out.qd.push(qd);
        out.qdd.push(qdd);
        out.tau.push(sol.tau[k].clone());
        out.wrenches.push(ws);
    }
    Ok(out)
}

pub fn csv_header(system: &System) -> Vec<String> {
    let n = system.dof();
    let mut h = vec!["t".to_string(), "s".into(), "sdot".into()];
    for prefix in ["q", "qd", "qdd", "tau"] {
        h.extend((1..=n).map(|i| format!("{prefix}_{i}")));
    }
    for c in &system.contacts {
        for comp in ["fx", "fy", "fz", "tx", "ty", "tz", "margin"] {
            h.push(format!("{}.{comp}", c.name));
        }
    }
    h
}

pub fn write_csv(system: &System, traj: &Trajectory, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::schema(path, e))?;
    w.write_record(csv_header(system)).map_err(|e| Error::schema(path, e))?;
    for i in 0..traj.t.len() {
        let mut row = vec![traj.t[i], traj.s[i], traj.sdot[i]];
        row.extend(&traj.q[i]);
        row.extend(&traj.qd[i]);
        row.extend(&traj.qdd[i]);
        row.extend(&traj.tau[i]);
        for (wr, m) in traj.wrenches[i].iter().zip(&traj.margins[i]) {
            row.extend(wr);
            row.push(*m);
        }
        w.write_record(row.iter().map(|v| format!("{v:.12e}"))).map_err(|e| Error::schema(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Machine-readable record of one run; `topp verify` audits it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunOutput {
    pub format: String,
    pub version: u32,
    pub scenario: String,
    pub status: Status,
    pub grid: usize,
    pub boundary: BoundarySpeeds,
    pub total_time: Option<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub solve_time: f64,
    pub residuals: Residuals,
    pub num_variables: usize,
    pub free_scalars: usize,
    pub contacts: Vec<String>,
    pub time: Option<TimeMap>,
    pub solution: Option<ScalingSolution>,
}

impl RunOutput {
    pub fn new(system: &System, result: &RunResult) -> Self {
        let t = &result.transcription;
        Self {
            format: OUTPUT_FORMAT.into(),
            version: OUTPUT_VERSION,
            scenario: system.name.clone(),
            status: result.report.status,
            grid: t.grid.intervals(),
            boundary: t.boundary,
            total_time: result.total_time(),
            objective: result.report.objective,
            iterations: result.report.iterations,
            solve_time: result.report.solve_time,
            residuals: result.report.residuals,
            num_variables: t.program.num_vars,
            free_scalars: t.program.free_scalar_count(),
            contacts: system.contacts.iter().map(|c| c.name.clone()).collect(),
            time: result.time.clone(),
            solution: result.solution.clone(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::schema(path, e))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let out: Self = serde_json::from_str(&text).map_err(|e| Error::schema(path, e))?;
        if out.format != OUTPUT_FORMAT || out.version != OUTPUT_VERSION {
            return Err(Error::schema(path, format!("not a {OUTPUT_FORMAT} v{OUTPUT_VERSION} file")));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transcription::tests::unit_slider;

    #[test]
    fn resampled_velocity_matches_finite_differences() {
        let sys = unit_slider();
        let r = run_system(&sys, 40, BoundarySpeeds::default(), &Settings::default()).unwrap();
        let traj = resample(&sys, r.solution.as_ref().unwrap(), r.time.as_ref().unwrap(), 2001).unwrap();
        assert_eq!(traj.s[0], 0.0);
        assert_eq!(*traj.s.last().unwrap(), 1.0);
        assert!(traj.t.windows(2).all(|w| w[1] > w[0]));
        let mut worst: f64 = 0.0;
        for i in 1..traj.t.len() - 1 {
            let fd = (traj.q[i + 1][0] - traj.q[i - 1][0]) / (traj.t[i + 1] - traj.t[i - 1]);
            worst = worst.max((fd - traj.qd[i][0]).abs());
        }
        assert!(worst < 1e-3, "{worst}");
    }

    #[test]
    fn csv_columns() {
        let sys = crate::system::tests::held_box();
        let h = csv_header(&sys);
        assert_eq!(&h[..4], &["t", "s", "sdot", "q_1"]);
        assert_eq!(h.len(), 3 + 4 * 3 + 7);
        assert_eq!(h.last().unwrap(), "grip.margin");
    }

    #[test]
    fn output_round_trips() {
        let sys = unit_slider();
        let r = run_system(&sys, 8, BoundarySpeeds::default(), &Settings::default()).unwrap();
        let out = RunOutput::new(&sys, &r);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.json");
        out.save(&p).unwrap();
        let back = RunOutput::load(&p).unwrap();
        assert_eq!(back.solution, out.solution);
        assert_eq!(back.status, Status::Optimal);
    }
}
