//! Independent checks of solver output against the standard-form data.

use serde::{Deserialize, Serialize};

use crate::canonical::StandardConicForm;
use crate::ipm::{residuals_at, Certificate, Residuals, SolveReport};
use crate::sparse::{dot, norm_inf};

/// Optimality residuals plus the worst cone violation of `s` and `z`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct KktCheck {
    pub residuals: Residuals,
    /// Most negative cone margin of `s` (0 when all slacks are inside).
    pub slack_violation: f64,
    /// Most negative dual-cone margin of `z`.
    pub dual_violation: f64,
    /// `|sᵀz|` normalized like the duality gap.
    pub complementarity: f64,
}

/// Recomputes residuals of a reported solution directly from `(A, b, c)`.
pub fn verify_kkt(form: &StandardConicForm, report: &SolveReport) -> KktCheck {
    let residuals = residuals_at(form, &report.x, &report.s, &report.z);
    let (slack_violation, dual_violation) = cone_violations(form, &report.s, &report.z);
    let sz = dot(&report.s, &report.z);
    let pobj = residuals.primal_objective - form.objective_constant;
    KktCheck {
        residuals,
        slack_violation,
        dual_violation,
        complementarity: sz.abs() / 1f64.max(pobj.abs()),
    }
}

fn cone_violations(form: &StandardConicForm, s: &[f64], z: &[f64]) -> (f64, f64) {
    let mut sv = 0.0f64;
    let mut zv = 0.0f64;
    for (cone, off) in form.cones.iter().zip(form.cone_offsets()) {
        let r = off..off + cone.dim();
        sv = sv.max(-cone.margin(&s[r.clone()]));
        zv = zv.max(-cone.dual_margin(&z[r]));
    }
    (sv.max(0.0), zv.max(0.0))
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CertificateCheck {
    /// `bᵀy` (primal) or `cᵀx` (dual); negative for a valid certificate.
    pub objective: f64,
    /// `‖Aᵀy‖∞` (primal) or `‖Ax + s‖∞` (dual), relative to `|objective|`.
    pub residual: f64,
    /// Worst cone violation of `y` (dual cone) or `s` (primal cone).
    pub cone_violation: f64,
}

impl CertificateCheck {
    pub fn is_valid(&self, tol: f64) -> bool {
        self.objective < 0.0 && self.residual <= tol && self.cone_violation <= tol
    }
}

pub fn verify_certificate(form: &StandardConicForm, cert: &Certificate) -> CertificateCheck {
    match cert {
        Certificate::PrimalInfeasible { y } => {
            let objective = dot(&form.b, y);
            let mut aty = vec![0.0; form.num_vars()];
            form.a.gemv_t(&mut aty, y, 1.0);
            let zeros = vec![0.0; y.len()];
            let (_, cone_violation) = cone_violations(form, &zeros, y);
            CertificateCheck {
                objective,
                residual: norm_inf(&aty) / objective.abs().max(f64::MIN_POSITIVE),
                cone_violation,
            }
        }
        Certificate::DualInfeasible { x, s } => {
            let objective = dot(&form.c, x);
            let mut axs = s.clone();
            form.a.gemv(&mut axs, x, 1.0);
            let mut cone_violation = 0.0f64;
            for (cone, off) in form.cones.iter().zip(form.cone_offsets()) {
                cone_violation = cone_violation.max(-cone.margin(&s[off..off + cone.dim()]));
            }
            CertificateCheck {
                objective,
                residual: norm_inf(&axs) / objective.abs().max(f64::MIN_POSITIVE),
                cone_violation: cone_violation.max(0.0),
            }
        }
    }
}
