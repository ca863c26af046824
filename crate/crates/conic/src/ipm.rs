//! Homogeneous self-dual interior-point method.
//!
//! The embedding variables are `(x, s, z, τ, κ)` with residuals
//!
//! ```text
//! r_x = Aᵀz + cτ
//! r_z = Ax + s - bτ
//! r_τ = κ + cᵀx + bᵀz
//! ```
//!
//! Each iteration computes Nesterov-Todd scalings, factors the reduced KKT
//! matrix once and takes a Mehrotra predictor-corrector step. Optimal
//! points are recovered as `(x, s, z) / τ`; when `τ → 0` the iterates
//! approach an infeasibility certificate instead.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::canonical::StandardConicForm;
use crate::cones::{Cone, NtScaling};
use crate::equilibrate::{ruiz, Equilibration};
use crate::kkt::KktSystem;
use crate::ldl::Regularization;
use crate::sparse::{dot, norm_inf};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct Settings {
    pub max_iter: usize,
    /// Relative primal and dual feasibility tolerance.
    pub tol_feas: f64,
    /// Relative duality gap tolerance.
    pub tol_gap: f64,
    /// Certificate residual tolerance for infeasibility detection.
    pub tol_infeas: f64,
    /// `τ/κ` below which the iterate is treated as a certificate candidate.
    pub tol_ktratio: f64,
    pub equilibrate: bool,
    pub equilibrate_iters: usize,
    pub static_reg: f64,
    pub dynamic_reg_eps: f64,
    pub dynamic_reg_delta: f64,
    pub refine_iters: usize,
    pub verbose: bool,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol_feas: 1e-8,
            tol_gap: 1e-8,
            tol_infeas: 1e-8,
            tol_ktratio: 1e-10,
            equilibrate: true,
            equilibrate_iters: 10,
            static_reg: 1e-8,
            dynamic_reg_eps: 1e-13,
            dynamic_reg_delta: 2e-7,
            refine_iters: 20,
            verbose: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    MaxIterations,
    NumericalFailure,
}

impl Status {
    pub fn is_infeasible(&self) -> bool {
        matches!(self, Status::PrimalInfeasible | Status::DualInfeasible)
    }
}

/// Relative residuals in the original (unscaled) problem data.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
    pub primal_objective: f64,
    pub dual_objective: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum Certificate {
    /// `Aᵀy = 0`, `y ∈ K*`, `bᵀy = -1`.
    PrimalInfeasible { y: Vec<f64> },
    /// `Ax + s = 0`, `s ∈ K`, `cᵀx = -1`.
    DualInfeasible { x: Vec<f64>, s: Vec<f64> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: Status,
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    pub z: Vec<f64>,
    /// `cᵀx` plus the program's objective constant.
    pub objective: f64,
    pub residuals: Residuals,
    pub iterations: usize,
    pub solve_time: f64,
    pub tau_kappa_ratio: f64,
    pub certificate: Option<Certificate>,
}

struct Problem<'a> {
    orig: &'a StandardConicForm,
    a: crate::sparse::CscMatrix,
    b: Vec<f64>,
    c: Vec<f64>,
    cones: Vec<Cone>,
    offsets: Vec<usize>,
    scaling: Equilibration,
    degree: usize,
}

struct Iterate {
    x: Vec<f64>,
    s: Vec<f64>,
    z: Vec<f64>,
    tau: f64,
    kappa: f64,
}

struct Direction {
    x: Vec<f64>,
    s: Vec<f64>,
    z: Vec<f64>,
    tau: f64,
    kappa: f64,
}

pub fn solve(form: &StandardConicForm, settings: &Settings) -> SolveReport {
    let start = Instant::now();
    let mut report = solve_inner(form, settings);
    report.solve_time = start.elapsed().as_secs_f64();
    report
}

fn solve_inner(form: &StandardConicForm, settings: &Settings) -> SolveReport {
    let (m, n) = (form.num_rows(), form.num_vars());
    let mut a = form.a.clone();
    let mut b = form.b.clone();
    let mut c = form.c.clone();
    let scaling = if settings.equilibrate {
        ruiz(&mut a, &mut b, &mut c, &form.cones, settings.equilibrate_iters)
    } else {
        Equilibration::identity(m, n)
    };
    let prob = Problem {
        orig: form,
        a,
        b,
        c,
        cones: form.cones.clone(),
        offsets: form.cone_offsets(),
        scaling,
        degree: form.cones.iter().map(Cone::degree).sum(),
    };

    let mut it = Iterate {
        x: vec![0.0; n],
        s: vec![0.0; m],
        z: vec![0.0; m],
        tau: 1.0,
        kappa: 1.0,
    };
    for (ci, cone) in prob.cones.iter().enumerate() {
        let r = prob.offsets[ci]..prob.offsets[ci] + cone.dim();
        cone.set_identity(&mut it.s[r.clone()]);
        cone.set_identity(&mut it.z[r]);
    }

    let reg = Regularization {
        eps: settings.dynamic_reg_eps,
        delta: settings.dynamic_reg_delta,
    };
    let mut kkt = match KktSystem::new(&prob.a, &prob.cones, settings.static_reg, reg, settings.refine_iters) {
        Ok(k) => k,
        Err(_) => return finish(&prob, &it, Status::NumericalFailure, 0),
    };

    let mut stalls = 0;
    for iter in 0..=settings.max_iter {
        let res = residuals(&prob, &it);
        if settings.verbose {
            eprintln!(
                "{iter:4}  pobj {:+.6e}  dobj {:+.6e}  pres {:.2e}  dres {:.2e}  gap {:.2e}  tau/kappa {:.2e}",
                res.primal_objective,
                res.dual_objective,
                res.primal,
                res.dual,
                res.gap,
                it.tau / it.kappa
            );
        }
        if res.primal <= settings.tol_feas && res.dual <= settings.tol_feas && res.gap <= settings.tol_gap {
            return finish(&prob, &it, Status::Optimal, iter);
        }
        if let Some(status) = infeasibility(&prob, &it, settings) {
            return finish(&prob, &it, status, iter);
        }
        if iter == settings.max_iter {
            break;
        }

        match step(&prob, &mut kkt, &mut it) {
            Some(alpha) if alpha > 1e-10 => stalls = 0,
            Some(_) => {
                stalls += 1;
                if stalls >= 3 {
                    return finish(&prob, &it, Status::NumericalFailure, iter);
                }
            }
            None => return finish(&prob, &it, Status::NumericalFailure, iter),
        }
    }
    finish(&prob, &it, Status::MaxIterations, settings.max_iter)
}

/// One predictor-corrector step; returns the step length taken.
fn step(prob: &Problem, kkt: &mut KktSystem, it: &mut Iterate) -> Option<f64> {
    let (m, n) = (prob.a.nrows, prob.a.ncols);
    let mu = (cone_dot(prob, &it.s, &it.z) + it.tau * it.kappa) / (prob.degree as f64 + 1.0);

    let scalings: Vec<NtScaling> = prob
        .cones
        .iter()
        .enumerate()
        .map(|(ci, cone)| {
            let r = prob.offsets[ci]..prob.offsets[ci] + cone.dim();
            NtScaling::new(cone, &it.s[r.clone()], &it.z[r])
        })
        .collect();
    let mut lambda = vec![0.0; m];
    for (ci, cone) in prob.cones.iter().enumerate() {
        let r = prob.offsets[ci]..prob.offsets[ci] + cone.dim();
        scalings[ci].apply(&it.z[r.clone()], &mut lambda[r]);
    }
    kkt.update(scalings.clone()).ok()?;

    // Residuals of the embedding.
    let mut rx = vec![0.0; n];
    prob.a.gemv_t(&mut rx, &it.z, 1.0);
    for j in 0..n {
        rx[j] += prob.c[j] * it.tau;
    }
    let mut rz = it.s.clone();
    prob.a.gemv(&mut rz, &it.x, 1.0);
    for i in 0..m {
        rz[i] -= prob.b[i] * it.tau;
    }
    let rtau = it.kappa + dot(&prob.c, &it.x) + dot(&prob.b, &it.z);

    let neg_c: Vec<f64> = prob.c.iter().map(|v| -v).collect();
    let (x1, z1) = kkt.solve(&neg_c, &prob.b);
    let denom_const = dot(&prob.c, &x1) + dot(&prob.b, &z1);

    let ctx = StepContext {
        prob,
        kkt: &*kkt,
        scalings: &scalings,
        lambda: &lambda,
        rx: &rx,
        rz: &rz,
        rtau,
        x1: &x1,
        z1: &z1,
        denom_const,
    };

    // Affine (predictor) direction.
    let mut ds = vec![0.0; m];
    for_cones(prob, |_, cone, r| cone.jordan_product(&lambda[r.clone()], &lambda[r.clone()], &mut ds[r]));
    let dtau = it.tau * it.kappa;
    let aff = ctx.direction(it, 1.0, &ds, dtau)?;
    let alpha_aff = step_length(prob, it, &aff).min(1.0);
    let sigma = (1.0 - alpha_aff).powi(3);

    // Combined direction with second-order correction.
    let mut ws = vec![0.0; m];
    let mut wz = vec![0.0; m];
    let mut corr = vec![0.0; m];
    let mut e = vec![0.0; m];
    for_cones(prob, |ci, cone, r| {
        scalings[ci].apply_inv(&aff.s[r.clone()], &mut ws[r.clone()]);
        scalings[ci].apply(&aff.z[r.clone()], &mut wz[r.clone()]);
        cone.jordan_product(&ws[r.clone()], &wz[r.clone()], &mut corr[r.clone()]);
        cone.set_identity(&mut e[r]);
    });
    for i in 0..m {
        ds[i] += corr[i] - sigma * mu * e[i];
    }
    let dtau = it.tau * it.kappa + aff.tau * aff.kappa - sigma * mu;
    let dir = ctx.direction(it, 1.0 - sigma, &ds, dtau)?;
    let alpha = (0.99 * step_length(prob, it, &dir)).min(1.0);

    for j in 0..n {
        it.x[j] += alpha * dir.x[j];
    }
    for i in 0..m {
        it.s[i] += alpha * dir.s[i];
        it.z[i] += alpha * dir.z[i];
    }
    it.tau += alpha * dir.tau;
    it.kappa += alpha * dir.kappa;
    if !(it.tau.is_finite() && it.kappa.is_finite()) {
        return None;
    }
    Some(alpha)
}

struct StepContext<'a> {
    prob: &'a Problem<'a>,
    kkt: &'a KktSystem,
    scalings: &'a [NtScaling],
    lambda: &'a [f64],
    rx: &'a [f64],
    rz: &'a [f64],
    rtau: f64,
    x1: &'a [f64],
    z1: &'a [f64],
    denom_const: f64,
}

impl StepContext<'_> {
    /// Newton direction for target complementarity residuals `d_s`, `d_τ`
    /// and residual reduction factor `eta`.
    fn direction(&self, it: &Iterate, eta: f64, d_s: &[f64], d_tau: f64) -> Option<Direction> {
        let prob = self.prob;
        let (m, n) = (prob.a.nrows, prob.a.ncols);
        // w_u = W (λ ⋄ d_s)
        let mut u = vec![0.0; m];
        let mut w_u = vec![0.0; m];
        for_cones(prob, |ci, cone, r| {
            cone.jordan_div(&self.lambda[r.clone()], &d_s[r.clone()], &mut u[r.clone()]);
            self.scalings[ci].apply(&u[r.clone()], &mut w_u[r]);
        });
        let rhs_x: Vec<f64> = self.rx.iter().map(|v| -eta * v).collect();
        let rhs_z: Vec<f64> = (0..m).map(|i| -eta * self.rz[i] + w_u[i]).collect();
        let (x2, z2) = self.kkt.solve(&rhs_x, &rhs_z);

        let num = -eta * self.rtau - dot(&prob.c, &x2) - dot(&prob.b, &z2) + d_tau / it.tau;
        let den = self.denom_const - it.kappa / it.tau;
        let dtau = num / den;
        if !dtau.is_finite() {
            return None;
        }
        let dx: Vec<f64> = (0..n).map(|j| x2[j] + dtau * self.x1[j]).collect();
        let dz: Vec<f64> = (0..m).map(|i| z2[i] + dtau * self.z1[i]).collect();

        // Δs = -W(λ ⋄ d_s) - W² Δz
        let mut ds = vec![0.0; m];
        let mut tmp = vec![0.0; m];
        let mut tmp2 = vec![0.0; m];
        for_cones(prob, |ci, _cone, r| {
            self.scalings[ci].apply(&dz[r.clone()], &mut tmp[r.clone()]);
            self.scalings[ci].apply(&tmp[r.clone()], &mut tmp2[r.clone()]);
            for i in r {
                ds[i] = -w_u[i] - tmp2[i];
            }
        });
        let dkappa = (-d_tau - it.kappa * dtau) / it.tau;
        if dx.iter().chain(&dz).chain(&ds).any(|v| !v.is_finite()) {
            return None;
        }
        Some(Direction {
            x: dx,
            s: ds,
            z: dz,
            tau: dtau,
            kappa: dkappa,
        })
    }
}

fn for_cones(prob: &Problem, mut f: impl FnMut(usize, &Cone, std::ops::Range<usize>)) {
    for (ci, cone) in prob.cones.iter().enumerate() {
        let off = prob.offsets[ci];
        f(ci, cone, off..off + cone.dim());
    }
}

fn step_length(prob: &Problem, it: &Iterate, d: &Direction) -> f64 {
    let mut alpha = f64::INFINITY;
    for_cones(prob, |_, cone, r| {
        alpha = alpha
            .min(cone.max_step(&it.s[r.clone()], &d.s[r.clone()]))
            .min(cone.max_step(&it.z[r.clone()], &d.z[r]));
    });
    if d.tau < 0.0 {
        alpha = alpha.min(-it.tau / d.tau);
    }
    if d.kappa < 0.0 {
        alpha = alpha.min(-it.kappa / d.kappa);
    }
    alpha
}

fn cone_dot(prob: &Problem, s: &[f64], z: &[f64]) -> f64 {
    let mut acc = 0.0;
    for_cones(prob, |_, cone, r| {
        if !matches!(cone, Cone::Zero(_)) {
            acc += dot(&s[r.clone()], &z[r]);
        }
    });
    acc
}

/// Unscaled `(x, s, z)` directions without dividing by `τ`.
fn unscale(prob: &Problem, it: &Iterate) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let eq = &prob.scaling;
    let x = it.x.iter().zip(&eq.e).map(|(v, e)| v * e).collect();
    let s = it.s.iter().zip(&eq.d).map(|(v, d)| v / d).collect();
    let z = it.z.iter().zip(&eq.d).map(|(v, d)| v * d / eq.c_scale).collect();
    (x, s, z)
}

fn residuals(prob: &Problem, it: &Iterate) -> Residuals {
    let (mut x, mut s, mut z) = unscale(prob, it);
    for v in x.iter_mut().chain(s.iter_mut()).chain(z.iter_mut()) {
        *v /= it.tau;
    }
    residuals_at(prob.orig, &x, &s, &z)
}

pub(crate) fn residuals_at(form: &StandardConicForm, x: &[f64], s: &[f64], z: &[f64]) -> Residuals {
    let mut rp = s.to_vec();
    form.a.gemv(&mut rp, x, 1.0);
    for (r, bi) in rp.iter_mut().zip(&form.b) {
        *r -= bi;
    }
    let mut rd = form.c.clone();
    form.a.gemv_t(&mut rd, z, 1.0);
    let pobj = dot(&form.c, x);
    let dobj = -dot(&form.b, z);
    Residuals {
        primal: norm_inf(&rp) / (1.0 + norm_inf(&form.b)),
        dual: norm_inf(&rd) / (1.0 + norm_inf(&form.c)),
        gap: (pobj - dobj).abs() / 1f64.max(pobj.abs().min(dobj.abs())),
        primal_objective: pobj + form.objective_constant,
        dual_objective: dobj + form.objective_constant,
    }
}

fn infeasibility(prob: &Problem, it: &Iterate, settings: &Settings) -> Option<Status> {
    let form = prob.orig;
    let (x, s, z) = unscale(prob, it);
    let ratio_small = it.tau / it.kappa <= settings.tol_ktratio;

    let bty = dot(&form.b, &z);
    if bty < 0.0 {
        let mut aty = vec![0.0; form.num_vars()];
        form.a.gemv_t(&mut aty, &z, 1.0);
        let res = norm_inf(&aty) / (-bty);
        if res <= settings.tol_infeas || (ratio_small && res <= settings.tol_infeas.sqrt()) {
            return Some(Status::PrimalInfeasible);
        }
    }
    let ctx = dot(&form.c, &x);
    if ctx < 0.0 {
        let mut axs = s.clone();
        form.a.gemv(&mut axs, &x, 1.0);
        let res = norm_inf(&axs) / (-ctx);
        if res <= settings.tol_infeas || (ratio_small && res <= settings.tol_infeas.sqrt()) {
            return Some(Status::DualInfeasible);
        }
    }
    None
}

fn finish(prob: &Problem, it: &Iterate, status: Status, iterations: usize) -> SolveReport {
    let (mut x, mut s, mut z) = unscale(prob, it);
    let mut certificate = None;
    match status {
        Status::PrimalInfeasible => {
            let bty = dot(&prob.orig.b, &z);
            let y: Vec<f64> = z.iter().map(|v| v / -bty).collect();
            certificate = Some(Certificate::PrimalInfeasible { y });
        }
        Status::DualInfeasible => {
            let ctx = dot(&prob.orig.c, &x);
            certificate = Some(Certificate::DualInfeasible {
                x: x.iter().map(|v| v / -ctx).collect(),
                s: s.iter().map(|v| v / -ctx).collect(),
            });
        }
        _ => {}
    }
    for v in x.iter_mut().chain(s.iter_mut()).chain(z.iter_mut()) {
        *v /= it.tau;
    }
    let residuals = residuals_at(prob.orig, &x, &s, &z);
    SolveReport {
        status,
        objective: residuals.primal_objective,
        x,
        s,
        z,
        residuals,
        iterations,
        solve_time: 0.0,
        tau_kappa_ratio: it.tau / it.kappa,
        certificate,
    }
}
