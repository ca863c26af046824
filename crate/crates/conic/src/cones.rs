//! Cone algebra: membership, Nesterov-Todd scaling, Jordan products and
//! step-to-boundary computations for the zero, nonnegative and second-order
//! cones.

use serde::{Deserialize, Serialize};

/// One block of the slack vector `s` in `Ax + s = b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cone {
    /// `s = 0` (equality rows). The dual variable is free.
    Zero(usize),
    /// `s ≥ 0` componentwise.
    Nonneg(usize),
    /// `s₀ ≥ ‖s₁..‖` (Lorentz cone of the given total dimension).
    Soc(usize),
}

impl Cone {
    pub fn dim(&self) -> usize {
        match *self {
            Cone::Zero(d) | Cone::Nonneg(d) | Cone::Soc(d) => d,
        }
    }

    /// Barrier degree contributed to the complementarity measure.
    pub fn degree(&self) -> usize {
        match *self {
            Cone::Zero(_) => 0,
            Cone::Nonneg(d) => d,
            Cone::Soc(d) => usize::from(d > 0),
        }
    }

    /// Distance-like membership margin: minimum entry for the orthant,
    /// `v₀ - ‖v₁‖` for the Lorentz cone, `-max|vᵢ|` for the zero cone.
    pub fn margin(&self, v: &[f64]) -> f64 {
        debug_assert_eq!(v.len(), self.dim());
        match self {
            Cone::Zero(_) => -v.iter().fold(0.0, |m: f64, x| m.max(x.abs())),
            Cone::Nonneg(_) => v.iter().copied().fold(f64::INFINITY, f64::min),
            Cone::Soc(_) => {
                if v.is_empty() {
                    return f64::INFINITY;
                }
                v[0] - norm(&v[1..])
            }
        }
    }

    /// Margin of `v` with respect to the dual cone. All cones handled here
    /// are self-dual except the zero cone, whose dual is the whole space.
    pub fn dual_margin(&self, v: &[f64]) -> f64 {
        match self {
            Cone::Zero(_) => f64::INFINITY,
            _ => self.margin(v),
        }
    }

    /// Writes the identity element (the central starting point).
    pub fn set_identity(&self, v: &mut [f64]) {
        match self {
            Cone::Zero(_) => v.fill(0.0),
            Cone::Nonneg(_) => v.fill(1.0),
            Cone::Soc(_) => {
                v.fill(0.0);
                if let Some(h) = v.first_mut() {
                    *h = 1.0;
                }
            }
        }
    }

    /// Jordan product `out = u ∘ v`.
    pub fn jordan_product(&self, u: &[f64], v: &[f64], out: &mut [f64]) {
        match self {
            Cone::Zero(_) => out.fill(0.0),
            Cone::Nonneg(_) => {
                for i in 0..u.len() {
                    out[i] = u[i] * v[i];
                }
            }
            Cone::Soc(_) => {
                if u.is_empty() {
                    return;
                }
                out[0] = dot(u, v);
                for i in 1..u.len() {
                    out[i] = u[0] * v[i] + v[0] * u[i];
                }
            }
        }
    }

    /// Solves `lambda ∘ out = d` for `out` (`lambda` in the cone interior).
    pub fn jordan_div(&self, lambda: &[f64], d: &[f64], out: &mut [f64]) {
        match self {
            Cone::Zero(_) => out.fill(0.0),
            Cone::Nonneg(_) => {
                for i in 0..d.len() {
                    out[i] = d[i] / lambda[i];
                }
            }
            Cone::Soc(_) => {
                if d.is_empty() {
                    return;
                }
                let l0 = lambda[0];
                let l1 = &lambda[1..];
                let rho = soc_det(lambda);
                let nu = dot(l1, &d[1..]);
                let u0 = (l0 * d[0] - nu) / rho;
                out[0] = u0;
                for i in 1..d.len() {
                    out[i] = (d[i] - u0 * lambda[i]) / l0;
                }
            }
        }
    }

    /// Largest `alpha ≥ 0` (capped at `f64::INFINITY`) such that
    /// `u + alpha * du` stays in the cone.
    pub fn max_step(&self, u: &[f64], du: &[f64]) -> f64 {
        match self {
            Cone::Zero(_) => f64::INFINITY,
            Cone::Nonneg(_) => {
                let mut alpha = f64::INFINITY;
                for i in 0..u.len() {
                    if du[i] < 0.0 {
                        alpha = alpha.min(-u[i] / du[i]);
                    }
                }
                alpha.max(0.0)
            }
            Cone::Soc(_) => {
                if u.is_empty() {
                    return f64::INFINITY;
                }
                soc_max_step(u, du)
            }
        }
    }
}

/// Nesterov-Todd scaling of one cone block at a primal-dual pair `(s, z)`.
///
/// `W` is symmetric positive definite with `W z = W⁻¹ s = λ`.
#[derive(Clone, Debug)]
pub enum NtScaling {
    Zero,
    Nonneg {
        /// Diagonal of `W`.
        w: Vec<f64>,
    },
    Soc {
        eta: f64,
        /// Normalized scaling point, `w̄ᵀ J w̄ = 1`.
        wbar: Vec<f64>,
    },
}

impl NtScaling {
    pub fn new(cone: &Cone, s: &[f64], z: &[f64]) -> Self {
        match cone {
            Cone::Zero(_) => NtScaling::Zero,
            Cone::Nonneg(_) => NtScaling::Nonneg {
                w: s.iter().zip(z).map(|(si, zi)| (si / zi).sqrt()).collect(),
            },
            Cone::Soc(d) => {
                if *d == 0 {
                    return NtScaling::Soc {
                        eta: 1.0,
                        wbar: Vec::new(),
                    };
                }
                let s_det = soc_det(s).max(f64::MIN_POSITIVE);
                let z_det = soc_det(z).max(f64::MIN_POSITIVE);
                let s_scale = s_det.sqrt();
                let z_scale = z_det.sqrt();
                let sbar: Vec<f64> = s.iter().map(|v| v / s_scale).collect();
                let zbar: Vec<f64> = z.iter().map(|v| v / z_scale).collect();
                let gamma = ((1.0 + dot(&sbar, &zbar)) / 2.0).sqrt();
                let mut wbar = vec![0.0; *d];
                wbar[0] = (sbar[0] + zbar[0]) / (2.0 * gamma);
                for i in 1..*d {
                    wbar[i] = (sbar[i] - zbar[i]) / (2.0 * gamma);
                }
                let eta = (s_scale / z_scale).sqrt();
                NtScaling::Soc { eta, wbar }
            }
        }
    }

    /// `out = W x`
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        match self {
            NtScaling::Zero => out.fill(0.0),
            NtScaling::Nonneg { w } => {
                for i in 0..x.len() {
                    out[i] = w[i] * x[i];
                }
            }
            NtScaling::Soc { eta, wbar } => soc_apply(*eta, wbar, x, out, false),
        }
    }

    /// `out = W⁻¹ x`
    pub fn apply_inv(&self, x: &[f64], out: &mut [f64]) {
        match self {
            NtScaling::Zero => out.fill(0.0),
            NtScaling::Nonneg { w } => {
                for i in 0..x.len() {
                    out[i] = x[i] / w[i];
                }
            }
            NtScaling::Soc { eta, wbar } => soc_apply(1.0 / eta, wbar, x, out, true),
        }
    }

    /// Entry `(i, j)` of `W²` within the block.
    pub fn w2_entry(&self, i: usize, j: usize) -> f64 {
        match self {
            NtScaling::Zero => 0.0,
            NtScaling::Nonneg { w } => {
                if i == j {
                    w[i] * w[i]
                } else {
                    0.0
                }
            }
            NtScaling::Soc { eta, wbar } => {
                // W² = η² (2 w̄ w̄ᵀ - J)
                let j_ij = match (i, j) {
                    (0, 0) => 1.0,
                    (a, b) if a == b => -1.0,
                    _ => 0.0,
                };
                eta * eta * (2.0 * wbar[i] * wbar[j] - j_ij)
            }
        }
    }
}

fn soc_apply(eta: f64, wbar: &[f64], x: &[f64], out: &mut [f64], inverse: bool) {
    let d = x.len();
    if d == 0 {
        return;
    }
    let w0 = wbar[0];
    let w1 = &wbar[1..];
    let x1 = &x[1..];
    let wx = dot(w1, x1);
    let sign = if inverse { -1.0 } else { 1.0 };
    out[0] = eta * (w0 * x[0] + sign * wx);
    let coef = sign * x[0] + wx / (1.0 + w0);
    for i in 1..d {
        out[i] = eta * (x[i] + coef * wbar[i]);
    }
}

/// `v₀² - ‖v₁‖²`, evaluated as a product to limit cancellation.
pub(crate) fn soc_det(v: &[f64]) -> f64 {
    let n1 = norm(&v[1..]);
    (v[0] - n1) * (v[0] + n1)
}

fn soc_max_step(u: &[f64], du: &[f64]) -> f64 {
    // q(α) = (u₀ + α du₀)² - ‖u₁ + α du₁‖² = a α² + 2 b α + c
    let a = du[0] * du[0] - dot(&du[1..], &du[1..]);
    let b = u[0] * du[0] - dot(&u[1..], &du[1..]);
    let c = soc_det(u);
    if c <= 0.0 {
        return 0.0;
    }
    let mut alpha = f64::INFINITY;
    // Head must stay nonnegative as well.
    if du[0] < 0.0 {
        alpha = -u[0] / du[0];
    }
    let scale = a.abs().max(b.abs()).max(c.abs());
    if a.abs() <= 1e-15 * scale {
        if b < 0.0 {
            alpha = alpha.min(-c / (2.0 * b));
        }
        return alpha.max(0.0);
    }
    let disc = b * b - a * c;
    if disc < 0.0 {
        return alpha.max(0.0);
    }
    let sq = disc.sqrt();
    let t = -(b + b.signum() * sq);
    let mut roots = [f64::INFINITY; 2];
    if t != 0.0 {
        roots[0] = t / a;
        roots[1] = c / t;
    } else {
        roots[0] = (-b + sq) / a;
        roots[1] = (-b - sq) / a;
    }
    for r in roots {
        if r > 0.0 {
            alpha = alpha.min(r);
        }
    }
    alpha.max(0.0)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn nt_scaling_maps_z_and_s_to_same_point() {
        let cone = Cone::Soc(4);
        let s = [3.0, 1.0, -0.5, 1.2];
        let z = [2.0, -0.3, 0.8, 0.1];
        let w = NtScaling::new(&cone, &s, &z);
        let mut wz = [0.0; 4];
        let mut winv_s = [0.0; 4];
        w.apply(&z, &mut wz);
        w.apply_inv(&s, &mut winv_s);
        assert!(close(&wz, &winv_s, 1e-12), "{wz:?} vs {winv_s:?}");

        // W W⁻¹ = I and W² agrees with the closed form.
        let x = [0.3, -1.0, 2.0, 0.7];
        let mut y = [0.0; 4];
        let mut back = [0.0; 4];
        w.apply(&x, &mut y);
        w.apply_inv(&y, &mut back);
        assert!(close(&back, &x, 1e-12));

        let mut ww = [0.0; 4];
        w.apply(&y, &mut ww);
        for i in 0..4 {
            let row: f64 = (0..4).map(|j| w.w2_entry(i, j) * x[j]).sum();
            assert!((row - ww[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn jordan_division_inverts_product() {
        for cone in [Cone::Soc(3), Cone::Nonneg(3)] {
            let lambda = [2.0, 0.5, -0.7];
            let d = [1.0, -2.0, 0.25];
            let mut u = [0.0; 3];
            cone.jordan_div(&lambda, &d, &mut u);
            let mut back = [0.0; 3];
            cone.jordan_product(&lambda, &u, &mut back);
            assert!(close(&back, &d, 1e-12));
        }
    }

    #[test]
    fn soc_step_hits_boundary() {
        let cone = Cone::Soc(3);
        let u = [1.0, 0.0, 0.0];
        let du = [0.0, 1.0, 0.0];
        let a = cone.max_step(&u, &du);
        assert!((a - 1.0).abs() < 1e-14);

        // Direction inside the cone never leaves it.
        let a = cone.max_step(&u, &[1.0, 0.5, 0.0]);
        assert!(a.is_infinite());

        // Through the apex: u + α du = 0 at α = 1.
        let a = cone.max_step(&[1.0, 0.5, 0.0], &[-1.0, -0.5, 0.0]);
        assert!((a - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthant_step() {
        let cone = Cone::Nonneg(3);
        let a = cone.max_step(&[1.0, 2.0, 3.0], &[-1.0, 1.0, -6.0]);
        assert!((a - 0.5).abs() < 1e-15);
    }

    #[test]
    fn margins() {
        assert_eq!(Cone::Soc(2).margin(&[1.0, -0.25]), 0.75);
        assert_eq!(Cone::Nonneg(2).margin(&[1.0, -0.25]), -0.25);
        assert_eq!(Cone::Zero(2).margin(&[1.0, -2.0]), -2.0);
        assert!(Cone::Zero(2).dual_margin(&[1.0, -2.0]).is_infinite());
    }
}
