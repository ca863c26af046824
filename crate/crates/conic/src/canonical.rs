//! Lowering of a [`ConicProgram`] into `min cᵀx  s.t.  Ax + s = b, s ∈ K`.
//!
//! Row order is: equalities, pinned variables (one zero cone), bounds (one
//! nonnegative cone, upper row before lower row), then one second-order cone
//! per program cone. The decision vector is the program vector unchanged.

use std::ops::Range;

use serde::{Deserialize, Serialize};

pub use crate::cones::Cone;
use crate::program::ConicProgram;
use crate::sparse::CscMatrix;
use crate::Result;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StandardConicForm {
    pub a: CscMatrix,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub cones: Vec<Cone>,
    /// Added to `cᵀx` to recover the program objective.
    pub objective_constant: f64,
}

impl StandardConicForm {
    pub fn num_vars(&self) -> usize {
        self.a.ncols
    }

    pub fn num_rows(&self) -> usize {
        self.a.nrows
    }

    /// Start offset of each cone in the slack vector.
    pub fn cone_offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.cones.len());
        let mut off = 0;
        for c in &self.cones {
            out.push(off);
            off += c.dim();
        }
        out
    }
}

/// Where each program row ended up in the standard form.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct RowMap {
    pub equalities: Vec<usize>,
    pub pinned: Vec<usize>,
    /// `(upper row, lower row)` for each bound.
    pub bounds: Vec<(Option<usize>, Option<usize>)>,
    pub socs: Vec<Range<usize>>,
}

pub fn canonicalize(program: &ConicProgram) -> Result<(StandardConicForm, RowMap)> {
    program.validate()?;
    let n = program.num_vars;
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    let mut b: Vec<f64> = Vec::new();
    let mut map = RowMap::default();
    let mut cones = Vec::new();

    fn push_row(
        b: &mut Vec<f64>,
        trip: &mut Vec<(usize, usize, f64)>,
        terms: &[(usize, f64)],
        sign: f64,
        rhs: f64,
    ) -> usize {
        let row = b.len();
        for &(j, v) in terms {
            trip.push((row, j, sign * v));
        }
        b.push(rhs);
        row
    }

    // gᵀx + h = 0  ->  gᵀx + s = -h, s = 0
    for eq in &program.equalities {
        let r = push_row(&mut b, &mut triplets, &eq.expr.terms, 1.0, -eq.expr.constant);
        map.equalities.push(r);
    }
    for p in &program.pinned {
        let r = push_row(&mut b, &mut triplets, &[(p.var, 1.0)], 1.0, p.value);
        map.pinned.push(r);
    }
    let n_zero = program.equalities.len() + program.pinned.len();
    if n_zero > 0 {
        cones.push(Cone::Zero(n_zero));
    }

    // gᵀx + h ≤ u  ->  gᵀx + s = u - h
    // gᵀx + h ≥ l  -> -gᵀx + s = h - l
    let mut n_nonneg = 0;
    for bd in &program.bounds {
        let up = bd
            .upper
            .filter(|u| u.is_finite())
            .map(|u| push_row(&mut b, &mut triplets, &bd.expr.terms, 1.0, u - bd.expr.constant));
        let lo = bd
            .lower
            .filter(|l| l.is_finite())
            .map(|l| push_row(&mut b, &mut triplets, &bd.expr.terms, -1.0, bd.expr.constant - l));
        n_nonneg += usize::from(up.is_some()) + usize::from(lo.is_some());
        map.bounds.push((up, lo));
    }
    if n_nonneg > 0 {
        cones.push(Cone::Nonneg(n_nonneg));
    }

    // s_i = g_iᵀx + h_i  ->  -g_iᵀx + s_i = h_i
    for soc in &program.socs {
        let start = b.len();
        for e in &soc.entries {
            push_row(&mut b, &mut triplets, &e.terms, -1.0, e.constant);
        }
        cones.push(Cone::Soc(soc.entries.len()));
        map.socs.push(start..b.len());
    }

    let m = b.len();
    let a = CscMatrix::from_triplets(m, n, &triplets);
    let mut c = vec![0.0; n];
    for &(j, v) in &program.objective.terms {
        c[j] += v;
    }
    Ok((
        StandardConicForm {
            a,
            b,
            c,
            cones,
            objective_constant: program.objective.constant,
        },
        map,
    ))
}
