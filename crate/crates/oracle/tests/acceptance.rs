//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

use std::f64::consts::FRAC_1_SQRT_2;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Value};
use topp_conic::catalog::{analytic_instances, infeasible_instances};
use topp_conic::{canonicalize, solve, verify_certificate, verify_kkt, Settings, Status};
use topp_core::contact::margin_unchecked;
use topp_core::lie::Vec6;
use topp_core::run::{run, RunResult, RunSettings};
use topp_core::scenario::{load_scenario, set_json_path, Scenario};
use topp_core::system::ContactKind;
use topp_core::transcription::{assemble, build_grid};
use topp_oracle::{audit, fd_suite, topp_phase_plane, FdOptions, AUDIT_TOL};

/// Relative agreement with the phase-plane oracle.
const ORACLE_TOL: f64 = 0.02;
/// Phase-plane integration steps.
const ORACLE_RESOLUTION: usize = 4000;
/// Wall-clock limit per solve, seconds.
const SOLVE_LIMIT: f64 = 60.0;
const DOUBLE_INTEGRATOR_TIME: f64 = 2.0;
const DOUBLE_INTEGRATOR_TOL: f64 = 0.02;
/// Slack allowed when comparing traversal times for monotonicity.
const MONOTONE_SLACK: f64 = 1e-6;
/// Relative spread of traversal times across table friction values.
const INVARIANCE_TOL: f64 = 1e-6;
/// Fraction of the velocity limit that counts as saturated.
const ACTIVE_VELOCITY: f64 = 1.0 - 1e-4;
/// Tray-cube cone margin at the tilt threshold, relative to the
/// per-contact share of the cube weight.
const MARGIN_TOL: f64 = 1e-3;
/// Bisection steps refining the tilt threshold.
const TILT_BISECTIONS: usize = 6;
const GAP_TOL: f64 = 1e-8;
const CERTIFICATE_TOL: f64 = 1e-7;
const REFINEMENT_TOL: f64 = 0.02;

const SHIPPED: [&str; 6] = ["double_integrator", "planar2", "arm7_free", "pickup", "pivoting", "waiter"];
const CONTACT_FREE: [&str; 3] = ["double_integrator", "planar2", "arm7_free"];
const PICKUP_MASSES: [f64; 6] = [0.2, 0.4, 0.6, 0.8, 1.0, 1.2];
const TABLE_FRICTION: [f64; 4] = [0.2, 0.3, 0.4, 0.5];
const WAITER_TILTS: [f64; 10] = [1.8, 1.9, 2.0, 2.1, 2.2, 2.3, 2.4, 2.5, 2.6, 2.7];
const WAITER_TILT_PATH: &str = "robots.0.path.waypoints.1.5";

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn scenario_path(name: &str) -> PathBuf {
    root().join(format!("{name}.json"))
}

fn variant(name: &str, edits: &[(&str, Value)]) -> Scenario {
    let path = scenario_path(name);
    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    for (p, v) in edits {
        set_json_path(&mut doc, p, v.clone()).unwrap();
    }
    Scenario::from_value(doc, &path, &root()).unwrap()
}

/// Every solve goes through here so that each Optimal result is audited.
#[derive(Default)]
struct Runner {
    audited: usize,
    worst: f64,
    worst_at: String,
    failures: Vec<String>,
}

struct Solved {
    result: RunResult,
    seconds: f64,
}

impl Solved {
    fn time(&self) -> Option<f64> {
        self.result.total_time()
    }
}

impl Runner {
    fn solve(&mut self, label: &str, sc: &Scenario, grid: Option<usize>) -> Solved {
        let clock = Instant::now();
        let result = run(
            sc,
            &RunSettings {
                grid,
                solver: Settings::default(),
            },
        )
        .unwrap_or_else(|e| panic!("{label}: {e}"));
        let seconds = clock.elapsed().as_secs_f64();
        if let Some(sol) = &result.solution {
            match audit(&sc.system, sc.boundary, sol) {
                Ok(rep) => {
                    self.audited += 1;
                    for (family, f) in &rep.families {
                        if f.max_violation > self.worst {
                            self.worst = f.max_violation;
                            self.worst_at = format!("{label}, {family}");
                        }
                    }
                    if !rep.passed() {
                        self.failures.push(format!("{label} ({:.2e})", rep.max_violation()));
                    }
                }
                Err(e) => self.failures.push(format!("{label}: {e}")),
            }
        }
        Solved { result, seconds }
    }
}

#[derive(Default)]
struct Gate {
    lines: Vec<(usize, bool, String)>,
}

impl Gate {
    fn report(&mut self, id: usize, title: &str, pass: bool, detail: String) {
        self.lines.push((id, pass, format!("{title}: {detail}")));
    }

    /// Prints in criterion order and returns the number of failures.
    fn print(mut self) -> usize {
        self.lines.sort_by_key(|l| l.0);
        for (id, pass, text) in &self.lines {
            println!("[{}] {id:>2} {text}", if *pass { "PASS" } else { "FAIL" });
        }
        self.lines.iter().filter(|l| !l.1).count()
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn nondecreasing(ts: &[f64]) -> bool {
    ts.windows(2).all(|w| w[1] >= w[0] * (1.0 - MONOTONE_SLACK))
}

fn fmt_times(ts: &[Option<f64>]) -> String {
    ts.iter()
        .map(|t| t.map_or("infeasible".to_string(), |t| format!("{t:.4}")))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Feasible values form a prefix, at least one infeasible value follows,
/// and the feasible traversal times do not decrease.
fn trend_with_onset(ts: &[Option<f64>], statuses: &[Status]) -> bool {
    let feasible: Vec<f64> = ts.iter().map_while(|t| *t).collect();
    let rest = &statuses[feasible.len()..];
    !feasible.is_empty() && !rest.is_empty() && rest.iter().all(|s| *s == Status::PrimalInfeasible) && nondecreasing(&feasible)
}

fn criterion_1(gate: &mut Gate, base: &[(String, Solved)]) {
    let mut worst: f64 = 0.0;
    let mut slowest: f64 = 0.0;
    let mut parts = Vec::new();
    let mut ok = true;
    for name in CONTACT_FREE {
        let sc = load_scenario(&scenario_path(name)).unwrap();
        let solved = &base.iter().find(|(n, _)| n == name).unwrap().1;
        let oracle = topp_phase_plane(&sc.system, sc.boundary, ORACLE_RESOLUTION).unwrap();
        match solved.time() {
            Some(t) => {
                let e = rel(t, oracle.total_time);
                worst = worst.max(e);
                parts.push(format!("{name} {t:.4}/{:.4}", oracle.total_time));
            }
            None => {
                ok = false;
                parts.push(format!("{name} {:?}", solved.result.status()));
            }
        }
        slowest = slowest.max(solved.seconds);
    }
    let pass = ok && worst <= ORACLE_TOL && slowest <= SOLVE_LIMIT;
    gate.report(
        1,
        "phase-plane oracle equivalence at K=250",
        pass,
        format!(
            "{}; max rel err {:.3}% (tol {}%), slowest solve {:.2} s (limit {SOLVE_LIMIT} s)",
            parts.join(", "),
            100.0 * worst,
            100.0 * ORACLE_TOL,
            slowest
        ),
    );
}

fn criterion_2(gate: &mut Gate, base: &[(String, Solved)]) {
    let solved = &base.iter().find(|(n, _)| n == "double_integrator").unwrap().1;
    let t = solved.time();
    let pass = t.is_some_and(|t| (t - DOUBLE_INTEGRATOR_TIME).abs() <= DOUBLE_INTEGRATOR_TOL);
    gate.report(
        2,
        "rest-to-rest double integrator",
        pass,
        format!("T = {} (expected {DOUBLE_INTEGRATOR_TIME} ± {DOUBLE_INTEGRATOR_TOL})", fmt_times(&[t])),
    );
}

/// Inline scenario with `u` table contacts, `v` fingertips spread over
/// `robots` copies of the seven-joint arm.
fn counting_scenario(u: usize, v: usize, robots: usize) -> Scenario {
    let robot = json!({ "model": "robots/arm7.json", "path": { "waypoints": [[0, -0.2, 0, -2.0, 0, 1.8, 0.785], [0.4, 0.1, 0, -1.7, 0, 1.8, 0.785]] } });
    let mut contacts = Vec::new();
    for j in 0..v {
        let side = if j % 2 == 0 { 1.0 } else { -1.0 };
        contacts.push(json!({
            "name": format!("finger{j}"), "kind": "manipulator", "robot": j % robots,
            "pose": { "rotation": [FRAC_1_SQRT_2, side * FRAC_1_SQRT_2, 0, 0], "translation": [0, side * 0.03, 0] },
            "model": "sfce", "friction": { "mu": 0.5, "ez": 0.01 }
        }));
    }
    for j in 0..u {
        contacts.push(json!({
            "name": format!("table{j}"), "kind": "environment", "world_normal": [0, 0, 1],
            "pose": { "translation": [0.02 * j as f64, 0, -0.03] },
            "model": "pcwf", "friction": { "mu": 0.3 }
        }));
    }
    let doc = json!({
        "schema_version": 1, "name": format!("count_{u}_{v}_{robots}"), "grid": 10,
        "robots": vec![robot; robots],
        "objects": [{ "name": "box", "mass": 0.5, "inertia": [1e-4, 1e-4, 1e-4, 0, 0, 0],
                      "frame": { "robot": 0, "offset": { "rotation": [1, 0, 0, 0], "translation": [0, 0, 0] } }, "contacts": contacts }]
    });
    Scenario::from_value(doc, Path::new("counting.json"), &root()).unwrap()
}

fn criterion_3(gate: &mut Gate) {
    let mut parts = Vec::new();
    let mut pass = true;
    for (k, u, v, n) in [(10usize, 0usize, 1usize, 3usize), (250, 2, 1, 7), (50, 3, 2, 14)] {
        let system = if n == 3 {
            let sc = load_scenario(&scenario_path("pivoting")).unwrap();
            let mut sys = sc.system.clone();
            sys.contacts.retain(|c| c.name == "finger_left");
            sys
        } else {
            counting_scenario(u, v, n / 7).system
        };
        assert_eq!(system.dof(), n);
        let t = assemble(&system, &build_grid(k).unwrap(), Default::default()).unwrap();
        let got = t.program.free_scalar_count();
        let expected = k * (4 + 3 * u + 4 * v + n) - 2;
        pass &= got == expected;
        parts.push(format!("(K={k},u={u},v={v},n={n}) {got}/{expected}"));
    }
    gate.report(3, "free-scalar count formula", pass, parts.join(", "));
}

fn criterion_4(gate: &mut Gate, runner: &Runner) {
    let pass = runner.audited > 0 && runner.failures.is_empty();
    let mut detail = format!(
        "{} optimal solves audited, worst relative violation {:.2e} at {} (tol {AUDIT_TOL:.0e})",
        runner.audited, runner.worst, runner.worst_at
    );
    if !runner.failures.is_empty() {
        detail.push_str(&format!("; failing: {}", runner.failures.join(", ")));
    }
    gate.report(4, "independent constraint audit", pass, detail);
}

fn criterion_5(gate: &mut Gate, runner: &mut Runner) {
    let mut ts = Vec::new();
    let mut statuses = Vec::new();
    for m in PICKUP_MASSES {
        let s = runner.solve(&format!("pickup m={m}"), &variant("pickup", &[("objects.0.mass", json!(m))]), None);
        ts.push(s.time());
        statuses.push(s.result.status());
    }
    let pass = trend_with_onset(&ts, &statuses);
    let onset = PICKUP_MASSES.iter().zip(&ts).find(|(_, t)| t.is_none()).map(|(m, _)| *m);
    gate.report(
        5,
        "pick-up mass sweep",
        pass,
        format!("masses {PICKUP_MASSES:?} kg -> T [{}]; onset at {onset:?} kg", fmt_times(&ts)),
    );
}

fn criterion_6(gate: &mut Gate, runner: &mut Runner) {
    let mut ts = Vec::new();
    let mut saturation: f64 = 0.0;
    for mu in TABLE_FRICTION {
        let sc = variant(
            "pivoting",
            &[
                ("objects.0.contacts.2.friction.mu", json!(mu)),
                ("objects.0.contacts.3.friction.mu", json!(mu)),
            ],
        );
        let s = runner.solve(&format!("pivoting mu={mu}"), &sc, None);
        ts.push(s.time());
        if let Some(sol) = &s.result.solution {
            let rob = &sc.system.robots[0];
            for (k, b) in sol.b.iter().enumerate() {
                let p = rob.path.eval(sol.s[k]).unwrap();
                for (i, l) in rob.limits.iter().enumerate() {
                    saturation = saturation.max(p.dq[i].abs() * b.max(0.0).sqrt() / l.velocity);
                }
            }
        }
    }
    let feasible: Vec<f64> = ts.iter().flatten().copied().collect();
    let spread = if feasible.len() == ts.len() {
        let lo = feasible.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = feasible.iter().cloned().fold(0.0, f64::max);
        (hi - lo) / lo
    } else {
        f64::INFINITY
    };
    let pass = spread <= INVARIANCE_TOL && saturation >= ACTIVE_VELOCITY;
    gate.report(
        6,
        "pivoting invariance to table friction",
        pass,
        format!(
            "mu_E {TABLE_FRICTION:?} -> T [{}]; rel spread {spread:.1e} (tol {INVARIANCE_TOL:.0e}); peak joint speed {:.4} of limit",
            fmt_times(&ts),
            saturation
        ),
    );
}

/// Smallest cone margin over the tray-cube contacts, relative to each
/// contact's share of the cube weight.
fn cube_margin(sc: &Scenario, r: &RunResult) -> f64 {
    let sys = &sc.system;
    let support: Vec<usize> = (0..sys.contacts.len())
        .filter(|&j| matches!(sys.contacts[j].kind, ContactKind::Support { .. }))
        .collect();
    let cube = sys.contacts[support[0]].object;
    let share = sys.objects[cube].model.mass * sys.gravity.norm() / support.len() as f64;
    let sol = r.solution.as_ref().unwrap();
    let mut worst = f64::INFINITY;
    for w in &sol.wrenches {
        for &j in &support {
            let c = &sys.contacts[j];
            worst = worst.min(margin_unchecked(&c.friction, c.model, &Vec6::from(w[j])) / share);
        }
    }
    worst
}

fn criterion_7(gate: &mut Gate, runner: &mut Runner) {
    let mut runs = Vec::new();
    for tilt in WAITER_TILTS {
        let sc = variant("waiter", &[(WAITER_TILT_PATH, json!(tilt))]);
        let s = runner.solve(&format!("waiter tilt={tilt}"), &sc, None);
        runs.push((sc, s));
    }
    let ts: Vec<Option<f64>> = runs.iter().map(|(_, s)| s.time()).collect();
    let statuses: Vec<Status> = runs.iter().map(|(_, s)| s.result.status()).collect();
    let mut pass = trend_with_onset(&ts, &statuses);
    let last = ts.iter().take_while(|t| t.is_some()).count();
    let mut detail = format!("tilts {WAITER_TILTS:?} -> T [{}]", fmt_times(&ts));
    if pass {
        let (mut lo, mut hi) = (WAITER_TILTS[last - 1], WAITER_TILTS[last]);
        let (mut lo_sc, mut lo_run) = runs.swap_remove(last - 1);
        for _ in 0..TILT_BISECTIONS {
            let mid = 0.5 * (lo + hi);
            let sc = variant("waiter", &[(WAITER_TILT_PATH, json!(mid))]);
            let s = runner.solve(&format!("waiter tilt={mid}"), &sc, None);
            match s.result.status() {
                Status::Optimal => {
                    pass &= s.time().unwrap() >= lo_run.time().unwrap() * (1.0 - MONOTONE_SLACK);
                    lo = mid;
                    lo_run = s;
                    lo_sc = sc;
                }
                Status::PrimalInfeasible => hi = mid,
                other => {
                    pass = false;
                    detail.push_str(&format!("; tilt {mid} ended {other:?}"));
                    break;
                }
            }
        }
        let margin = cube_margin(&lo_sc, &lo_run.result);
        pass &= margin <= MARGIN_TOL;
        detail.push_str(&format!(
            "; threshold in ({lo:.4}, {hi:.4}] rad, last feasible T {:.4}, min cube cone margin {margin:.2e} of weight share (tol {MARGIN_TOL:.0e})",
            lo_run.time().unwrap()
        ));
    }
    gate.report(7, "waiter tilt sweep", pass, detail);
}

fn criterion_8(gate: &mut Gate) {
    let instances = analytic_instances();
    let mut solved = 0;
    let mut worst_gap: f64 = 0.0;
    let mut problems = Vec::new();
    for inst in &instances {
        let (form, _) = canonicalize(&inst.program).unwrap();
        let r = solve(&form, &Settings::default());
        let kkt = verify_kkt(&form, &r);
        let obj_ok = (r.objective - inst.optimum).abs() <= 1e-7 * (1.0 + inst.optimum.abs());
        worst_gap = worst_gap.max(kkt.residuals.gap);
        if r.status == Status::Optimal && kkt.residuals.gap <= GAP_TOL && obj_ok {
            solved += 1;
        } else {
            problems.push(inst.name);
        }
    }
    let mut certified = Vec::new();
    for inst in infeasible_instances() {
        let (form, _) = canonicalize(&inst.program).unwrap();
        let r = solve(&form, &Settings::default());
        let valid = r.status == inst.expected
            && r.certificate
                .as_ref()
                .is_some_and(|c| verify_certificate(&form, c).is_valid(CERTIFICATE_TOL));
        if valid {
            certified.push(inst.expected);
        } else {
            problems.push(inst.name);
        }
    }
    let both = certified.contains(&Status::PrimalInfeasible) && certified.contains(&Status::DualInfeasible);
    let pass = solved >= 20 && solved == instances.len() && both && problems.is_empty();
    gate.report(
        8,
        "conic solver suite",
        pass,
        format!(
            "{solved}/{} analytic instances within gap {GAP_TOL:.0e} (worst {worst_gap:.1e}); {} verified certificates ({} primal, {} dual){}",
            instances.len(),
            certified.len(),
            certified.iter().filter(|s| **s == Status::PrimalInfeasible).count(),
            certified.iter().filter(|s| **s == Status::DualInfeasible).count(),
            if problems.is_empty() { String::new() } else { format!("; failing: {problems:?}") }
        ),
    );
}

fn criterion_9(gate: &mut Gate) {
    let mut worst_fd: f64 = 0.0;
    let mut worst_sub: f64 = 0.0;
    let mut failing = Vec::new();
    for name in SHIPPED {
        let sc = load_scenario(&scenario_path(name)).unwrap();
        let ledger = fd_suite(&sc.system, &FdOptions::default()).unwrap();
        for c in &ledger.checks {
            if c.name.ends_with("rnea_substitution") {
                worst_sub = worst_sub.max(c.max_error);
            } else {
                worst_fd = worst_fd.max(c.max_error);
            }
            if !c.passed {
                failing.push(format!("{name}:{}", c.name));
            }
        }
    }
    gate.report(
        9,
        "finite-difference and substitution checks",
        failing.is_empty(),
        format!(
            "{} scenarios; worst derivative error {worst_fd:.1e} (tol 1e-5), worst substitution error {worst_sub:.1e} (tol 1e-9){}",
            SHIPPED.len(),
            if failing.is_empty() { String::new() } else { format!("; failing: {failing:?}") }
        ),
    );
}

fn criterion_10(gate: &mut Gate, runner: &mut Runner, base: &[(String, Solved)]) {
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    let mut pass = true;
    for (name, coarse) in base {
        let Some(t250) = coarse.time() else {
            parts.push(format!("{name} infeasible"));
            continue;
        };
        let sc = load_scenario(&scenario_path(name)).unwrap();
        let fine = runner.solve(&format!("{name} K=500"), &sc, Some(500));
        match fine.time() {
            Some(t500) => {
                let e = rel(t500, t250);
                worst = worst.max(e);
                parts.push(format!("{name} {:.3}%", 100.0 * e));
            }
            None => {
                pass = false;
                parts.push(format!("{name} K=500 {:?}", fine.result.status()));
            }
        }
    }
    pass &= worst <= REFINEMENT_TOL;
    gate.report(
        10,
        "grid refinement K=250 to K=500",
        pass,
        format!("{} (tol {}%)", parts.join(", "), 100.0 * REFINEMENT_TOL),
    );
}

fn main() {
    let mut gate = Gate::default();
    let mut runner = Runner::default();
    let base: Vec<(String, Solved)> = SHIPPED
        .iter()
        .map(|name| {
            let sc = load_scenario(&scenario_path(name)).unwrap();
            (name.to_string(), runner.solve(name, &sc, Some(250)))
        })
        .collect();

    criterion_1(&mut gate, &base);
    criterion_2(&mut gate, &base);
    criterion_3(&mut gate);
    criterion_5(&mut gate, &mut runner);
    criterion_6(&mut gate, &mut runner);
    criterion_7(&mut gate, &mut runner);
    criterion_8(&mut gate);
    criterion_9(&mut gate);
    criterion_10(&mut gate, &mut runner, &base);
    criterion_4(&mut gate, &runner);

    let failed = gate.print();
    if failed > 0 {
        println!("acceptance: {failed} of 10 criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all 10 criteria passed");
}
