//! Sparse LDLᵀ factorization for quasi-definite matrices.
//!
//! The factorization is an up-looking elimination-tree algorithm operating
//! on the upper triangle of a symmetrically permuted matrix. Quasi-definite
//! matrices admit an LDLᵀ factorization for every symmetric permutation, so
//! the pivot order is fixed once by an approximate minimum degree ordering
//! and never changes between numeric refactorizations.
//!
//! Pivots whose sign disagrees with the expected inertia (or that are
//! numerically tiny) are replaced by `sign * delta` (dynamic
//! regularization); the caller is expected to recover accuracy through
//! iterative refinement.

use crate::sparse::CscMatrix;

const NONE: usize = usize::MAX;

/// Symbolic analysis plus numeric storage for one sparsity pattern.
#[derive(Clone, Debug)]
pub struct LdlFactor {
    n: usize,
    /// `perm[k]` is the original index placed at position `k`.
    perm: Vec<usize>,
    /// Permuted upper triangle.
    pattern: CscMatrix,
    /// Position of each original upper-triangular entry inside `pattern`.
    entry_map: Vec<usize>,
    /// Expected pivot signs in permuted order.
    signs: Vec<f64>,
    etree: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
    dinv: Vec<f64>,
    regularized: usize,
    // scratch
    y_vals: Vec<f64>,
    y_idx: Vec<usize>,
    marker: Vec<bool>,
    elim: Vec<usize>,
    next_in_col: Vec<usize>,
}

#[derive(Clone, Copy, Debug)]
pub struct Regularization {
    /// Pivots with `sign * d <= eps` are treated as breakdowns.
    pub eps: f64,
    /// Replacement magnitude for broken pivots.
    pub delta: f64,
}

impl Default for Regularization {
    fn default() -> Self {
        Self {
            eps: 1e-13,
            delta: 2e-7,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LdlError {
    #[error("matrix is not upper triangular (entry {row}, {col})")]
    NotUpper { row: usize, col: usize },
    #[error("missing diagonal entry in column {0}")]
    MissingDiagonal(usize),
    #[error("fill-reducing ordering failed")]
    Ordering,
    #[error("non-finite pivot at column {0}")]
    NonFinite(usize),
}

impl LdlFactor {
    /// Performs the ordering and symbolic analysis of the upper triangle
    /// `upper` (every diagonal entry must be structurally present).
    /// `signs` holds the expected sign (+1 or -1) of each pivot in the
    /// original ordering.
    pub fn new(upper: &CscMatrix, signs: &[f64]) -> Result<Self, LdlError> {
        let n = upper.ncols;
        assert_eq!(upper.nrows, n);
        assert_eq!(signs.len(), n);
        for c in 0..n {
            let rows = &upper.rowval[upper.colptr[c]..upper.colptr[c + 1]];
            if let Some(&r) = rows.iter().find(|&&r| r > c) {
                return Err(LdlError::NotUpper { row: r, col: c });
            }
            if rows.last() != Some(&c) {
                return Err(LdlError::MissingDiagonal(c));
            }
        }

        let perm = if n == 0 {
            Vec::new()
        } else {
            let control = amd::Control::default();
            let (p, _pinv, _info) = amd::order(n, &upper.colptr, &upper.rowval, &control)
                .map_err(|_| LdlError::Ordering)?;
            p
        };
        let mut pinv = vec![0usize; n];
        for (k, &p) in perm.iter().enumerate() {
            pinv[p] = k;
        }

        // Permute the upper triangle: entry (i, j) moves to
        // (min(pinv i, pinv j), max(pinv i, pinv j)).
        let mut counts = vec![0usize; n + 1];
        for c in 0..n {
            for k in upper.colptr[c]..upper.colptr[c + 1] {
                let r = upper.rowval[k];
                let col = pinv[r].max(pinv[c]);
                counts[col + 1] += 1;
            }
        }
        for c in 0..n {
            counts[c + 1] += counts[c];
        }
        let mut next = counts.clone();
        let nnz = upper.nnz();
        let mut rowval = vec![0usize; nnz];
        let mut entry_map = vec![0usize; nnz];
        for c in 0..n {
            for k in upper.colptr[c]..upper.colptr[c + 1] {
                let r = upper.rowval[k];
                let (pr, pc) = (pinv[r].min(pinv[c]), pinv[r].max(pinv[c]));
                let slot = next[pc];
                rowval[slot] = pr;
                entry_map[k] = slot;
                next[pc] += 1;
            }
        }
        // Sort rows within each permuted column, carrying the entry map.
        let mut inverse = vec![0usize; nnz];
        for (orig, &slot) in entry_map.iter().enumerate() {
            inverse[slot] = orig;
        }
        for c in 0..n {
            let range = counts[c]..counts[c + 1];
            let mut pairs: Vec<(usize, usize)> = range
                .clone()
                .map(|slot| (rowval[slot], inverse[slot]))
                .collect();
            pairs.sort_unstable();
            for (offset, (r, orig)) in pairs.into_iter().enumerate() {
                let slot = range.start + offset;
                rowval[slot] = r;
                entry_map[orig] = slot;
            }
        }
        let pattern = CscMatrix {
            nrows: n,
            ncols: n,
            colptr: counts,
            rowval,
            nzval: vec![0.0; nnz],
        };

        // Elimination tree and column counts.
        let mut etree = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        let mut work = vec![NONE; n];
        for j in 0..n {
            work[j] = j;
            for k in pattern.colptr[j]..pattern.colptr[j + 1] {
                let mut i = pattern.rowval[k];
                while work[i] != j {
                    if etree[i] == NONE {
                        etree[i] = j;
                    }
                    lnz[i] += 1;
                    work[i] = j;
                    i = etree[i];
                }
            }
        }
        let mut lp = vec![0usize; n + 1];
        for i in 0..n {
            lp[i + 1] = lp[i] + lnz[i];
        }
        let total = lp[n];

        Ok(Self {
            n,
            signs: perm.iter().map(|&p| signs[p]).collect(),
            perm,
            pattern,
            entry_map,
            etree,
            lp,
            li: vec![0; total],
            lx: vec![0.0; total],
            d: vec![0.0; n],
            dinv: vec![0.0; n],
            regularized: 0,
            y_vals: vec![0.0; n],
            y_idx: vec![0; n],
            marker: vec![false; n],
            elim: vec![0; n],
            next_in_col: vec![0; n],
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of nonzeros in the strictly lower factor.
    pub fn factor_nnz(&self) -> usize {
        self.lp[self.n]
    }

    /// Number of pivots replaced during the last factorization.
    pub fn regularized_pivots(&self) -> usize {
        self.regularized
    }

    /// Numeric factorization of a matrix with the analysed pattern. `values`
    /// follows the nonzero order of the `upper` matrix passed to [`new`].
    ///
    /// [`new`]: LdlFactor::new
    pub fn factor(&mut self, values: &[f64], reg: Regularization) -> Result<(), LdlError> {
        assert_eq!(values.len(), self.entry_map.len());
        for (orig, &slot) in self.entry_map.iter().enumerate() {
            self.pattern.nzval[slot] = values[orig];
        }
        let n = self.n;
        self.regularized = 0;
        for i in 0..n {
            self.marker[i] = false;
            self.y_vals[i] = 0.0;
            self.next_in_col[i] = self.lp[i];
        }

        for k in 0..n {
            let mut nnz_y = 0usize;
            self.d[k] = 0.0;
            for p in self.pattern.colptr[k]..self.pattern.colptr[k + 1] {
                let bidx = self.pattern.rowval[p];
                if bidx == k {
                    self.d[k] = self.pattern.nzval[p];
                    continue;
                }
                self.y_vals[bidx] = self.pattern.nzval[p];
                if !self.marker[bidx] {
                    self.marker[bidx] = true;
                    self.elim[0] = bidx;
                    let mut n_elim = 1;
                    let mut next = self.etree[bidx];
                    while next != NONE && next < k {
                        if self.marker[next] {
                            break;
                        }
                        self.marker[next] = true;
                        self.elim[n_elim] = next;
                        n_elim += 1;
                        next = self.etree[next];
                    }
                    while n_elim > 0 {
                        n_elim -= 1;
                        self.y_idx[nnz_y] = self.elim[n_elim];
                        nnz_y += 1;
                    }
                }
            }

            for i in (0..nnz_y).rev() {
                let cidx = self.y_idx[i];
                let tmp = self.next_in_col[cidx];
                let y_c = self.y_vals[cidx];
                for j in self.lp[cidx]..tmp {
                    self.y_vals[self.li[j]] -= self.lx[j] * y_c;
                }
                self.li[tmp] = k;
                let l = y_c * self.dinv[cidx];
                self.lx[tmp] = l;
                self.d[k] -= y_c * l;
                self.next_in_col[cidx] += 1;
                self.y_vals[cidx] = 0.0;
                self.marker[cidx] = false;
            }

            if !self.d[k].is_finite() {
                return Err(LdlError::NonFinite(k));
            }
            let sign = self.signs[k];
            if sign * self.d[k] <= reg.eps {
                self.d[k] = sign * reg.delta;
                self.regularized += 1;
            }
            self.dinv[k] = 1.0 / self.d[k];
        }
        Ok(())
    }

    /// Solves `K x = b` in place using the last numeric factorization.
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        // L x = b
        for i in 0..n {
            let xi = x[i];
            if xi != 0.0 {
                for j in self.lp[i]..self.lp[i + 1] {
                    x[self.li[j]] -= self.lx[j] * xi;
                }
            }
        }
        for i in 0..n {
            x[i] *= self.dinv[i];
        }
        // Lᵀ x = y
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in self.lp[i]..self.lp[i + 1] {
                acc -= self.lx[j] * x[self.li[j]];
            }
            x[i] = acc;
        }
        for (k, &p) in self.perm.iter().enumerate() {
            b[p] = x[k];
        }
    }
}
