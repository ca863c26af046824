//! Ruiz equilibration of the constraint matrix and cost scaling.
//!
//! The scaled problem is `Ã = D A E`, `b̃ = D b`, `c̃ = σ E c`. Row factors
//! are uniform within each second-order cone so cone membership of the
//! slack is preserved.

use crate::cones::Cone;
use crate::sparse::CscMatrix;

const MIN_SCALE: f64 = 1e-4;
const MAX_SCALE: f64 = 1e4;

#[derive(Clone, Debug)]
pub(crate) struct Equilibration {
    pub d: Vec<f64>,
    pub e: Vec<f64>,
    pub c_scale: f64,
}

impl Equilibration {
    pub fn identity(m: usize, n: usize) -> Self {
        Self {
            d: vec![1.0; m],
            e: vec![1.0; n],
            c_scale: 1.0,
        }
    }
}

pub(crate) fn ruiz(a: &mut CscMatrix, b: &mut [f64], c: &mut [f64], cones: &[Cone], iters: usize) -> Equilibration {
    let (m, n) = (a.nrows, a.ncols);
    let mut eq = Equilibration::identity(m, n);
    let mut row_norm = vec![0.0f64; m];
    let mut col_fac = vec![1.0; n];
    let mut row_fac = vec![1.0; m];

    for _ in 0..iters {
        for j in 0..n {
            let norm = a.nzval[a.colptr[j]..a.colptr[j + 1]]
                .iter()
                .fold(0.0f64, |acc, v| acc.max(v.abs()));
            col_fac[j] = factor(norm);
        }
        row_norm.fill(0.0);
        for j in 0..n {
            for k in a.colptr[j]..a.colptr[j + 1] {
                let r = a.rowval[k];
                row_norm[r] = row_norm[r].max(a.nzval[k].abs());
            }
        }
        let mut off = 0;
        for cone in cones {
            let d = cone.dim();
            if let Cone::Soc(_) = cone {
                let block_max = row_norm[off..off + d].iter().fold(0.0f64, |acc, v| acc.max(*v));
                row_fac[off..off + d].fill(factor(block_max));
            } else {
                for r in off..off + d {
                    row_fac[r] = factor(row_norm[r]);
                }
            }
            off += d;
        }

        for j in 0..n {
            let target = (eq.e[j] * col_fac[j]).clamp(MIN_SCALE, MAX_SCALE);
            col_fac[j] = target / eq.e[j];
            eq.e[j] = target;
        }
        for r in 0..m {
            let target = (eq.d[r] * row_fac[r]).clamp(MIN_SCALE, MAX_SCALE);
            row_fac[r] = target / eq.d[r];
            eq.d[r] = target;
        }
        for j in 0..n {
            for k in a.colptr[j]..a.colptr[j + 1] {
                a.nzval[k] *= row_fac[a.rowval[k]] * col_fac[j];
            }
        }
    }

    for (bi, di) in b.iter_mut().zip(&eq.d) {
        *bi *= di;
    }
    for (cj, ej) in c.iter_mut().zip(&eq.e) {
        *cj *= ej;
    }
    let c_norm = c.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    eq.c_scale = if c_norm > 0.0 {
        (1.0 / c_norm).clamp(MIN_SCALE, MAX_SCALE)
    } else {
        1.0
    };
    for cj in c.iter_mut() {
        *cj *= eq.c_scale;
    }
    eq
}

fn factor(norm: f64) -> f64 {
    if norm > 0.0 {
        1.0 / norm.sqrt()
    } else {
        1.0
    }
}
