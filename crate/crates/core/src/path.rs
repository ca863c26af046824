//! Joint-space paths `s ↦ q(s)` on `[0, 1]` as cubic splines through
//! waypoints placed at uniform breakpoints.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// End conditions of the interpolating spline.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplineBoundary {
    /// Zero second derivative at both ends.
    #[default]
    Natural,
    /// Zero first derivative at both ends (`q′(0) = q′(1) = 0`).
    Clamped,
}

/// `q(s)`, `q′(s)` and `q″(s)` at one path coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct PathPoint {
    pub q: DVector<f64>,
    pub dq: DVector<f64>,
    pub ddq: DVector<f64>,
}

#[derive(Clone, Debug)]
pub struct JointPath {
    breakpoints: Vec<f64>,
    /// `values[i][j]`: joint `j` at breakpoint `i`.
    values: Vec<Vec<f64>>,
    /// Second derivatives at the breakpoints, same layout as `values`.
    moments: Vec<Vec<f64>>,
    boundary: SplineBoundary,
}

impl JointPath {
    pub fn new(waypoints: &[Vec<f64>], boundary: SplineBoundary) -> Result<Self> {
        if waypoints.len() < 2 {
            return Err(Error::Path("a path needs at least two waypoints".into()));
        }
        let nj = waypoints[0].len();
        if nj == 0 || waypoints.iter().any(|w| w.len() != nj) {
            return Err(Error::Path("waypoints must share one nonzero joint count".into()));
        }
        if waypoints.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Path("waypoints must be finite".into()));
        }
        let n = waypoints.len();
        let h = 1.0 / (n - 1) as f64;
        let breakpoints: Vec<f64> = (0..n).map(|i| if i == n - 1 { 1.0 } else { i as f64 * h }).collect();
        let mut moments = vec![vec![0.0; nj]; n];
        for j in 0..nj {
            let y: Vec<f64> = waypoints.iter().map(|w| w[j]).collect();
            let m = spline_moments(&y, h, boundary);
            for i in 0..n {
                moments[i][j] = m[i];
            }
        }
        Ok(Self {
            breakpoints,
            values: waypoints.to_vec(),
            moments,
            boundary,
        })
    }

    /// A path that stays at `q` for all `s`.
    pub fn constant(q: &[f64]) -> Result<Self> {
        Self::new(&[q.to_vec(), q.to_vec()], SplineBoundary::Natural)
    }

    pub fn num_joints(&self) -> usize {
        self.values[0].len()
    }

    pub fn boundary(&self) -> SplineBoundary {
        self.boundary
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn waypoints(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn eval(&self, s: f64) -> Result<PathPoint> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::Domain(s));
        }
        let n = self.breakpoints.len();
        let h = 1.0 / (n - 1) as f64;
        let seg = ((s / h).floor() as usize).min(n - 2);
        let t = s - self.breakpoints[seg];
        let nj = self.num_joints();
        let mut out = PathPoint {
            q: DVector::zeros(nj),
            dq: DVector::zeros(nj),
            ddq: DVector::zeros(nj),
        };
        for j in 0..nj {
            let (y0, y1) = (self.values[seg][j], self.values[seg + 1][j]);
            let (m0, m1) = (self.moments[seg][j], self.moments[seg + 1][j]);
            let b = (y1 - y0) / h - h * (2.0 * m0 + m1) / 6.0;
            let d = (m1 - m0) / (6.0 * h);
            out.q[j] = y0 + t * (b + t * (0.5 * m0 + t * d));
            out.dq[j] = b + t * (m0 + 3.0 * d * t);
            out.ddq[j] = m0 + 6.0 * d * t;
        }
        Ok(out)
    }
}

/// Second derivatives of the interpolating cubic spline at uniform knots.
fn spline_moments(y: &[f64], h: f64, boundary: SplineBoundary) -> Vec<f64> {
    let n = y.len();
    // Tridiagonal system sub[i] m[i-1] + diag[i] m[i] + sup[i] m[i+1] = rhs[i].
    let mut sub = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut sup = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for i in 1..n - 1 {
        sub[i] = 1.0;
        diag[i] = 4.0;
        sup[i] = 1.0;
        rhs[i] = 6.0 * (y[i + 1] - 2.0 * y[i] + y[i - 1]) / (h * h);
    }
    match boundary {
        SplineBoundary::Natural => {
            diag[0] = 1.0;
            diag[n - 1] = 1.0;
        }
        SplineBoundary::Clamped => {
            diag[0] = 2.0;
            sup[0] = 1.0;
            rhs[0] = 6.0 * (y[1] - y[0]) / (h * h);
            sub[n - 1] = 1.0;
            diag[n - 1] = 2.0;
            rhs[n - 1] = -6.0 * (y[n - 1] - y[n - 2]) / (h * h);
        }
    }
    // Thomas algorithm; the systems above are diagonally dominant.
    for i in 1..n {
        let w = sub[i] / diag[i - 1];
        diag[i] -= w * sup[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    let mut m = vec![0.0; n];
    m[n - 1] = rhs[n - 1] / diag[n - 1];
    for i in (0..n - 1).rev() {
        m[i] = (rhs[i] - sup[i] * m[i + 1]) / diag[i];
    }
    m
}
