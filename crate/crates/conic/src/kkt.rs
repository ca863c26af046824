//! Reduced KKT system `[εI Aᵀ; A -(W²+εI)]` with iterative refinement
//! against the unregularized operator.

use crate::cones::{Cone, NtScaling};
use crate::ldl::{LdlError, LdlFactor, Regularization};
use crate::sparse::CscMatrix;

pub(crate) struct KktSystem {
    n: usize,
    m: usize,
    a: CscMatrix,
    at: CscMatrix,
    cones: Vec<Cone>,
    offsets: Vec<usize>,
    upper: CscMatrix,
    /// Position of the diagonal entry of each `x` column.
    x_diag: Vec<usize>,
    /// Position of the first `H` entry of each constraint column.
    h_start: Vec<usize>,
    /// First row (within the constraint block) stored in each constraint column's `H` part.
    h_first: Vec<usize>,
    factor: LdlFactor,
    static_reg: f64,
    reg: Regularization,
    refine_iters: usize,
    scalings: Vec<NtScaling>,
}

impl KktSystem {
    pub fn new(
        a: &CscMatrix,
        cones: &[Cone],
        static_reg: f64,
        reg: Regularization,
        refine_iters: usize,
    ) -> Result<Self, LdlError> {
        let (m, n) = (a.nrows, a.ncols);
        let at = a.transpose();
        let mut offsets = Vec::with_capacity(cones.len());
        let mut cone_of_row = vec![0usize; m];
        let mut off = 0;
        for (ci, c) in cones.iter().enumerate() {
            offsets.push(off);
            cone_of_row[off..off + c.dim()].fill(ci);
            off += c.dim();
        }
        assert_eq!(off, m, "cone dimensions do not cover the rows");

        let mut colptr = Vec::with_capacity(n + m + 1);
        let mut rowval = Vec::new();
        let mut x_diag = Vec::with_capacity(n);
        let mut h_start = Vec::with_capacity(m);
        let mut h_first = Vec::with_capacity(m);
        colptr.push(0);
        for j in 0..n {
            x_diag.push(rowval.len());
            rowval.push(j);
            colptr.push(rowval.len());
        }
        for i in 0..m {
            for k in at.colptr[i]..at.colptr[i + 1] {
                rowval.push(at.rowval[k]);
            }
            let ci = cone_of_row[i];
            let first = match cones[ci] {
                Cone::Soc(_) => offsets[ci],
                _ => i,
            };
            h_start.push(rowval.len());
            h_first.push(first);
            for r in first..=i {
                rowval.push(n + r);
            }
            colptr.push(rowval.len());
        }
        let nnz = rowval.len();
        let upper = CscMatrix {
            nrows: n + m,
            ncols: n + m,
            colptr,
            rowval,
            nzval: vec![0.0; nnz],
        };
        let mut signs = vec![1.0; n + m];
        signs[n..].fill(-1.0);
        let factor = LdlFactor::new(&upper, &signs)?;
        let scalings = cones
            .iter()
            .map(|c| match c {
                Cone::Zero(_) => NtScaling::Zero,
                Cone::Nonneg(d) => NtScaling::Nonneg { w: vec![1.0; *d] },
                Cone::Soc(d) => NtScaling::Soc {
                    eta: 1.0,
                    wbar: {
                        let mut v = vec![0.0; *d];
                        if *d > 0 {
                            v[0] = 1.0;
                        }
                        v
                    },
                },
            })
            .collect();
        Ok(Self {
            n,
            m,
            a: a.clone(),
            at,
            cones: cones.to_vec(),
            offsets,
            upper,
            x_diag,
            h_start,
            h_first,
            factor,
            static_reg,
            reg,
            refine_iters,
            scalings,
        })
    }

    /// Refactors with new scalings.
    pub fn update(&mut self, scalings: Vec<NtScaling>) -> Result<(), LdlError> {
        self.scalings = scalings;
        for &p in &self.x_diag {
            self.upper.nzval[p] = self.static_reg;
        }
        for i in 0..self.m {
            let col = self.n + i;
            let a_start = self.upper.colptr[col];
            let a_len = self.h_start[i] - a_start;
            let src = self.at.colptr[i];
            self.upper.nzval[a_start..a_start + a_len].copy_from_slice(&self.at.nzval[src..src + a_len]);
        }
        for (ci, cone) in self.cones.iter().enumerate() {
            let off = self.offsets[ci];
            let sc = &self.scalings[ci];
            for local_i in 0..cone.dim() {
                let i = off + local_i;
                let first = self.h_first[i];
                for r in first..=i {
                    let mut h = sc.w2_entry(r - off, local_i);
                    if r == i {
                        h += self.static_reg;
                    }
                    self.upper.nzval[self.h_start[i] + (r - first)] = -h;
                }
            }
        }
        self.factor.factor(&self.upper.nzval, self.reg)
    }

    /// `out = K₀ v` with `K₀ = [0 Aᵀ; A -W²]`.
    fn apply_unregularized(&self, v: &[f64], out: &mut [f64]) {
        let (n, m) = (self.n, self.m);
        out.fill(0.0);
        let (vx, vz) = v.split_at(n);
        let (ox, oz) = out.split_at_mut(n);
        self.at.gemv(ox, vz, 1.0);
        self.a.gemv(oz, vx, 1.0);
        let mut tmp = Vec::new();
        let mut tmp2 = Vec::new();
        for (ci, cone) in self.cones.iter().enumerate() {
            let off = self.offsets[ci];
            let d = cone.dim();
            tmp.resize(d, 0.0);
            tmp2.resize(d, 0.0);
            let sc = &self.scalings[ci];
            sc.apply(&vz[off..off + d], &mut tmp);
            sc.apply(&tmp, &mut tmp2);
            for k in 0..d {
                oz[off + k] -= tmp2[k];
            }
        }
        debug_assert_eq!(oz.len(), m);
    }

    /// Solves `K₀ [x; z] = [rx; rz]`.
    pub fn solve(&self, rx: &[f64], rz: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let dim = self.n + self.m;
        let mut rhs = Vec::with_capacity(dim);
        rhs.extend_from_slice(rx);
        rhs.extend_from_slice(rz);
        let rhs_norm = rhs.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mut sol = rhs.clone();
        self.factor.solve(&mut sol);

        let mut kv = vec![0.0; dim];
        let mut res = vec![0.0; dim];
        let mut best = f64::INFINITY;
        let mut prev = sol.clone();
        for _ in 0..=self.refine_iters {
            self.apply_unregularized(&sol, &mut kv);
            for k in 0..dim {
                res[k] = rhs[k] - kv[k];
            }
            let res_norm = res.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if !(res_norm < best) {
                // The last correction did not help: keep the previous solution.
                sol.copy_from_slice(&prev);
                break;
            }
            if res_norm <= 1e-13 * (1.0 + rhs_norm) || res_norm >= 0.9 * best {
                break;
            }
            best = res_norm;
            prev.copy_from_slice(&sol);
            self.factor.solve(&mut res);
            for k in 0..dim {
                sol[k] += res[k];
            }
        }
        let z = sol.split_off(self.n);
        (sol, z)
    }
}
