//! Discretization of the path coordinate and assembly of the time-optimal
//! SOCP over `(a, b, c, d, τ, F)`.

use serde::{Deserialize, Serialize};
use topp_conic::{ConicProgram, LinExpr, RowTag};

use crate::contact::emit_cone;
use crate::system::{stack_dynamics_in_s, PathDynamicsSample, System};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub s: Vec<f64>,
}

pub fn build_grid(k: usize) -> Result<Grid> {
    if k < 1 {
        return Err(Error::Model("the grid needs at least one interval".into()));
    }
    let s = (0..=k).map(|i| if i == k { 1.0 } else { i as f64 / k as f64 }).collect();
    Ok(Grid { s })
}

impl Grid {
    pub fn intervals(&self) -> usize {
        self.s.len() - 1
    }

    pub fn midpoint(&self, k: usize) -> f64 {
        0.5 * (self.s[k] + self.s[k + 1])
    }

    pub fn delta(&self, k: usize) -> f64 {
        self.s[k + 1] - self.s[k]
    }
}

/// Linear interpolation of `b` on interval `k`.
pub fn interval_b_interpolation(grid: &Grid, k: usize, bk: f64, bk1: f64, s: f64) -> Result<f64> {
    if k >= grid.intervals() {
        return Err(Error::Interval {
            interval: k,
            message: "no such interval".into(),
        });
    }
    let (lo, hi) = (grid.s[k], grid.s[k + 1]);
    if !(lo..=hi).contains(&s) {
        return Err(Error::Domain(s));
    }
    Ok(bk + (bk1 - bk) * (s - lo) / (hi - lo))
}

/// Path speeds at the two ends; `None` leaves the end speed free.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundarySpeeds {
    pub start: f64,
    pub end: Option<f64>,
}

impl Default for BoundarySpeeds {
    fn default() -> Self {
        Self {
            start: 0.0,
            end: Some(0.0),
        }
    }
}

/// Index of every scalar of the transcription inside the program's vector.
#[derive(Clone, Debug)]
pub struct Layout {
    pub dof: usize,
    pub b: usize,
    pub c: usize,
    pub a: usize,
    pub d: usize,
    /// First torque variable of each interval.
    pub tau: Vec<usize>,
    /// `wrench[k][j]`: first of the six components of contact `j`.
    pub wrench: Vec<Vec<usize>>,
}

#[derive(Clone, Debug)]
pub struct Transcription {
    pub program: ConicProgram,
    pub layout: Layout,
    pub grid: Grid,
    pub boundary: BoundarySpeeds,
    /// Coefficients at every midpoint.
    pub samples: Vec<PathDynamicsSample>,
}

/// Solver output mapped back onto the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingSolution {
    pub s: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
    /// Stacked joint torques per interval.
    pub tau: Vec<Vec<f64>>,
    /// Contact wrenches per interval and contact.
    pub wrenches: Vec<Vec<[f64; 6]>>,
}

impl ScalingSolution {
    pub fn b_mid(&self, k: usize) -> f64 {
        0.5 * (self.b[k] + self.b[k + 1])
    }
}

fn bound_row(p: &mut ConicProgram, expr: LinExpr, lo: Option<f64>, hi: Option<f64>, tag: RowTag) {
    if !expr.has_variables() {
        let v = expr.constant;
        if lo.is_none_or(|l| v >= l) && hi.is_none_or(|h| v <= h) {
            return;
        }
    }
    p.add_bound(expr, lo, hi, tag);
}

pub fn assemble(system: &System, grid: &Grid, boundary: BoundarySpeeds) -> Result<Transcription> {
    system.validate()?;
    if !(boundary.start >= 0.0 && boundary.start.is_finite()) || boundary.end.is_some_and(|e| !(e >= 0.0 && e.is_finite())) {
        return Err(Error::Model("boundary path speeds must be finite and nonnegative".into()));
    }
    let kn = grid.intervals();
    let n = system.dof();
    let offsets = system.joint_offsets();
    let samples = (0..kn)
        .map(|k| stack_dynamics_in_s(system, grid.midpoint(k)))
        .collect::<Result<Vec<_>>>()?;

    let mut p = ConicProgram::new();
    let b = p.add_block("b", None, kn + 1).start;
    let c = p.add_block("c", None, kn + 1).start;
    let a = p.add_block("a", None, kn).start;
    let d = p.add_block("d", None, kn).start;
    let mut tau = Vec::with_capacity(kn);
    let mut wrench = Vec::with_capacity(kn);
    for k in 0..kn {
        tau.push(p.add_block("tau", Some(k), n).start);
        wrench.push(
            (0..system.contacts.len())
                .map(|j| p.add_block(&format!("wrench.{j}"), Some(k), 6).start)
                .collect::<Vec<_>>(),
        );
    }
    let limits: Vec<_> = system.robots.iter().flat_map(|r| r.limits.iter().copied()).collect();

    for k in 0..kn {
        let smp = &samples[k];
        let row = k;
        let b_mid = |coef: f64| LinExpr::zero().term(b + k, 0.5 * coef).term(b + k + 1, 0.5 * coef);

        // Joint dynamics: τ − 𝓜a − 𝓒b − 𝓙F − 𝓖 = 0.
        let mut dyn_rows: Vec<LinExpr> = (0..n).map(|i| LinExpr::var(tau[k] + i)).collect();
        for (r, rs) in smp.robots.iter().enumerate() {
            for i in 0..rs.q.len() {
                let e = &mut dyn_rows[offsets[r] + i];
                e.add_term(a + k, -rs.m[i]);
                e.add_scaled(&b_mid(rs.c[i]), -1.0);
                e.constant -= rs.g[i];
            }
        }
        for (j, cs) in smp.contacts.iter().enumerate() {
            if let Some((r, jt)) = &cs.jacobian_t {
                for i in 0..jt.nrows() {
                    for col in 0..6 {
                        dyn_rows[offsets[*r] + i].add_term(wrench[k][j] + col, -jt[(i, col)]);
                    }
                }
            }
        }
        for (i, e) in dyn_rows.into_iter().enumerate() {
            p.add_equality(e, RowTag::new("dynamics", row * n + i));
        }

        for (i, l) in limits.iter().enumerate() {
            p.add_bound(LinExpr::var(tau[k] + i), Some(l.torque.0), Some(l.torque.1), RowTag::new("torque", row * n + i));
        }

        for (r, rs) in smp.robots.iter().enumerate() {
            for i in 0..rs.q.len() {
                let gi = offsets[r] + i;
                let l = &limits[gi];
                let vel = b_mid(rs.dq[i] * rs.dq[i]);
                bound_row(&mut p, vel, None, Some(l.velocity * l.velocity), RowTag::new("velocity", row * n + gi));
                let mut acc = b_mid(rs.ddq[i]);
                acc.add_term(a + k, rs.dq[i]);
                bound_row(&mut p, acc, Some(l.acceleration.0), Some(l.acceleration.1), RowTag::new("acceleration", row * n + gi));
            }
        }

        // Object balance: Σ G F + f_ext − A a − B b = 0.
        let no = system.objects.len();
        let mut bal: Vec<LinExpr> = Vec::with_capacity(6 * no);
        for os in &smp.objects {
            for r in 0..6 {
                let mut e = LinExpr::constant(os.external[r]);
                e.add_term(a + k, -os.a[r]);
                e.add_scaled(&b_mid(os.b[r]), -1.0);
                bal.push(e);
            }
        }
        for (j, cs) in smp.contacts.iter().enumerate() {
            let o = system.contacts[j].object;
            for r in 0..6 {
                for col in 0..6 {
                    bal[6 * o + r].add_term(wrench[k][j] + col, cs.grasp[(r, col)]);
                }
            }
            if let Some((from, gp)) = &cs.reaction {
                for r in 0..6 {
                    for col in 0..6 {
                        bal[6 * from + r].add_term(wrench[k][j] + col, -gp[(r, col)]);
                    }
                }
            }
        }
        for (i, e) in bal.into_iter().enumerate() {
            p.add_equality(e, RowTag::new("wrench_balance", row * 6 * no + i));
        }

        let nc = system.contacts.len();
        for (j, ct) in system.contacts.iter().enumerate() {
            let w = wrench[k][j];
            let desc = emit_cone(&ct.friction, ct.model);
            let mut entries = vec![LinExpr::var(w + desc.head)];
            entries.extend(desc.tail.iter().map(|&(comp, wt)| LinExpr::zero().term(w + comp, wt)));
            p.add_soc(entries, RowTag::new("friction_cone", row * nc + j));
            for &comp in &desc.pinned {
                p.pin(w + comp, 0.0, RowTag::new("pinned_component", (row * nc + j) * 6 + comp));
            }
            if let Some(fz) = ct.normal_force_max.filter(|f| f.is_finite()) {
                p.add_bound(LinExpr::var(w + 2), None, Some(fz), RowTag::new("normal_force", row * nc + j));
            }
        }
    }

    // Joint speeds at the grid points too. Midpoint rows alone bound only
    // the average of neighbouring b and leave an odd-even mode free.
    for i in 0..=kn {
        for (r, rob) in system.robots.iter().enumerate() {
            let dq = rob.path.eval(grid.s[i])?.dq;
            for (j, l) in rob.limits.iter().enumerate() {
                let gi = offsets[r] + j;
                let vel = LinExpr::zero().term(b + i, dq[j] * dq[j]);
                bound_row(&mut p, vel, None, Some(l.velocity * l.velocity), RowTag::new("velocity_grid", i * n + gi));
            }
        }
    }

    // Grid-point rows.
    let b_end = boundary.end;
    let pinned_at = |i: usize| i == 0 || (i == kn && b_end.is_some());
    for i in 0..=kn {
        if pinned_at(i) {
            continue;
        }
        // ‖(2c, b − 1)‖ ≤ b + 1, i.e. c² ≤ b.
        p.add_soc(
            vec![
                LinExpr::var(b + i).plus_constant(1.0),
                LinExpr::zero().term(c + i, 2.0),
                LinExpr::var(b + i).plus_constant(-1.0),
            ],
            RowTag::new("epigraph_c", i),
        );
        p.add_bound(LinExpr::var(b + i), Some(0.0), None, RowTag::new("b_nonnegative", i));
    }
    for k in 0..kn {
        // ‖(2, c + c′ − d)‖ ≤ c + c′ + d, i.e. d(c + c′) ≥ 1.
        let sum = LinExpr::var(c + k).term(c + k + 1, 1.0);
        p.add_soc(
            vec![sum.clone().term(d + k, 1.0), LinExpr::constant(2.0), sum.term(d + k, -1.0)],
            RowTag::new("epigraph_d", k),
        );
        p.add_equality(
            LinExpr::var(b + k + 1).term(b + k, -1.0).term(a + k, -2.0 * grid.delta(k)),
            RowTag::new("coupling", k),
        );
        p.objective.add_term(d + k, 2.0 * grid.delta(k));
    }
    p.pin(b, boundary.start * boundary.start, RowTag::new("boundary", 0));
    p.pin(c, boundary.start, RowTag::new("boundary", 1));
    if let Some(e) = b_end {
        p.pin(b + kn, e * e, RowTag::new("boundary", 2));
        p.pin(c + kn, e, RowTag::new("boundary", 3));
    }
    p.validate()?;

    Ok(Transcription {
        program: p,
        layout: Layout { dof: n, b, c, a, d, tau, wrench },
        grid: grid.clone(),
        boundary,
        samples,
    })
}

impl Transcription {
    /// Maps a solver vector onto the grid. Pinned variables take their
    /// exact values.
    pub fn extract(&self, x: &[f64]) -> ScalingSolution {
        let mut x = x.to_vec();
        for pin in &self.program.pinned {
            x[pin.var] = pin.value;
        }
        let kn = self.grid.intervals();
        let l = &self.layout;
        let n = l.dof;
        ScalingSolution {
            s: self.grid.s.clone(),
            a: x[l.a..l.a + kn].to_vec(),
            b: x[l.b..l.b + kn + 1].to_vec(),
            c: x[l.c..l.c + kn + 1].to_vec(),
            d: x[l.d..l.d + kn].to_vec(),
            tau: l.tau.iter().map(|&t| x[t..t + n].to_vec()).collect(),
            wrenches: l
                .wrench
                .iter()
                .map(|ws| ws.iter().map(|&w| std::array::from_fn(|i| x[w + i])).collect())
                .collect(),
        }
    }
}

/// Time stamps of the grid points and the total traversal time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeMap {
    pub t: Vec<f64>,
    pub total: f64,
}

/// `T = Σ 2Δs/(√b^k + √b^{k+1})`. Round-off negatives in `b` count as zero.
pub fn recover_time(grid: &Grid, b: &[f64]) -> Result<TimeMap> {
    if b.len() != grid.s.len() {
        return Err(Error::Dimension(format!("{} speeds for {} grid points", b.len(), grid.s.len())));
    }
    let mut t = Vec::with_capacity(b.len());
    t.push(0.0);
    for k in 0..grid.intervals() {
        let den = b[k].max(0.0).sqrt() + b[k + 1].max(0.0).sqrt();
        if den <= 0.0 {
            return Err(Error::Interval {
                interval: k,
                message: "path speed is zero at both ends of the interval".into(),
            });
        }
        t.push(t[k] + 2.0 * grid.delta(k) / den);
    }
    Ok(TimeMap {
        total: *t.last().unwrap(),
        t,
    })
}
