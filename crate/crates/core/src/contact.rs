//! Friction cones for point contacts with friction (PCWF) and soft-finger
//! contacts with an elliptic torsion model (SFCE).
//!
//! Contact wrenches are `[f_x, f_y, f_z, τ_x, τ_y, τ_z]` in a contact frame
//! whose z-axis is the inward normal.

use serde::{Deserialize, Serialize};

use crate::lie::Vec6;
use crate::{Error, Result};

/// Margin tolerance used when reporting membership.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContactModel {
    Pcwf,
    Sfce,
}

impl ContactModel {
    /// Components constrained to zero.
    pub fn pinned(&self) -> &'static [usize] {
        match self {
            ContactModel::Pcwf => &[3, 4, 5],
            ContactModel::Sfce => &[3, 4],
        }
    }

    pub fn free_components(&self) -> usize {
        6 - self.pinned().len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrictionParams {
    pub mu: f64,
    #[serde(default = "one")]
    pub ex: f64,
    #[serde(default = "one")]
    pub ey: f64,
    /// Torsional scale, only read by SFCE.
    #[serde(default = "one")]
    pub ez: f64,
}

fn one() -> f64 {
    1.0
}

impl FrictionParams {
    pub fn new(mu: f64, ex: f64, ey: f64, ez: f64) -> Self {
        Self { mu, ex, ey, ez }
    }

    pub fn validate(&self) -> Result<()> {
        for (v, name) in [(self.mu, "mu"), (self.ex, "ex"), (self.ey, "ey"), (self.ez, "ez")] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Model(format!("friction parameter {name} must be positive")));
            }
        }
        Ok(())
    }
}

/// `f_z - (1/μ)·√((f_x/e_x)² + (f_y/e_y)² [+ (τ_z/e_z)²])`.
///
/// Fails when a pinned component exceeds [`MEMBERSHIP_TOL`] in magnitude.
pub fn cone_margin(params: &FrictionParams, model: ContactModel, w: &Vec6) -> Result<f64> {
    for &k in model.pinned() {
        if w[k].abs() > MEMBERSHIP_TOL {
            return Err(Error::OutsideSubspace { component: k + 1 });
        }
    }
    Ok(margin_unchecked(params, model, w))
}

/// The cone margin ignoring pinned components.
pub fn margin_unchecked(params: &FrictionParams, model: ContactModel, w: &Vec6) -> f64 {
    let mut sq = (w[0] / params.ex).powi(2) + (w[1] / params.ey).powi(2);
    if model == ContactModel::Sfce {
        sq += (w[5] / params.ez).powi(2);
    }
    w[2] - sq.sqrt() / params.mu
}

/// A friction cone as a standard second-order cone on a weighted slice of
/// the wrench plus a list of components fixed at zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeDescriptor {
    pub model: ContactModel,
    /// Component forming the cone head.
    pub head: usize,
    /// `(component, weight)` pairs forming the cone tail.
    pub tail: Vec<(usize, f64)>,
    pub pinned: Vec<usize>,
}

impl ConeDescriptor {
    /// Margin `head - ‖weighted tail‖` (ignores pinned components).
    pub fn soc_margin(&self, w: &Vec6) -> f64 {
        let norm = self.tail.iter().map(|&(k, c)| (c * w[k]).powi(2)).sum::<f64>().sqrt();
        w[self.head] - norm
    }

    pub fn contains(&self, w: &Vec6, tol: f64) -> bool {
        self.pinned.iter().all(|&k| w[k].abs() <= tol) && self.soc_margin(w) >= -tol
    }
}

pub fn emit_cone(params: &FrictionParams, model: ContactModel) -> ConeDescriptor {
    let mut tail = vec![(0, 1.0 / (params.mu * params.ex)), (1, 1.0 / (params.mu * params.ey))];
    if model == ContactModel::Sfce {
        tail.push((5, 1.0 / (params.mu * params.ez)));
    }
    ConeDescriptor {
        model,
        head: 2,
        tail,
        pinned: model.pinned().to_vec(),
    }
}

/// `f_z ≤ bound` on one contact's normal component.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalForceBound {
    pub contact: usize,
    pub upper: f64,
}

/// One row per contact with a finite bound; `None` or `+∞` emit nothing.
pub fn normal_force_bound(bounds: &[Option<f64>]) -> Result<Vec<NormalForceBound>> {
    let mut out = Vec::new();
    for (contact, b) in bounds.iter().enumerate() {
        match b {
            Some(v) if v.is_nan() || *v <= 0.0 => {
                return Err(Error::Model(format!("contact {contact}: normal force bound must be positive")));
            }
            Some(v) if v.is_finite() => out.push(NormalForceBound { contact, upper: *v }),
            _ => {}
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn w(v: [f64; 6]) -> Vec6 {
        Vec6::from(v)
    }

    #[test]
    fn margin_examples() {
        let p = FrictionParams::new(0.4, 1.0, 1.0, 0.25);
        assert_eq!(cone_margin(&p, ContactModel::Pcwf, &Vec6::zeros()).unwrap(), 0.0);
        let m = cone_margin(&p, ContactModel::Pcwf, &w([0.4, 0.0, 1.0, 0.0, 0.0, 0.0])).unwrap();
        assert!(m.abs() < 1e-15);
        let m = cone_margin(&p, ContactModel::Sfce, &w([0.0, 0.0, 1.0, 0.0, 0.0, 0.1])).unwrap();
        assert!(m.abs() < 1e-15);
        assert!(matches!(
            cone_margin(&p, ContactModel::Pcwf, &w([0.0, 0.0, 1.0, 0.0, 0.0, 0.1])),
            Err(Error::OutsideSubspace { component: 6 })
        ));
    }

    #[test]
    fn descriptor_weights() {
        let p = FrictionParams::new(0.5, 1.0, 1.0, 0.25);
        let d = emit_cone(&p, ContactModel::Pcwf);
        assert_eq!(d.tail, vec![(0, 2.0), (1, 2.0)]);
        assert_eq!(d.pinned, vec![3, 4, 5]);
        let d = emit_cone(&p, ContactModel::Sfce);
        assert_eq!(d.tail[2], (5, 8.0));
        assert_eq!(d.pinned, vec![3, 4]);
    }

    #[test]
    fn descriptor_agrees_with_margin_on_random_wrenches() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut disagreements = 0;
        for _ in 0..100_000 {
            let model = if rng.random::<bool>() { ContactModel::Pcwf } else { ContactModel::Sfce };
            let p = FrictionParams::new(
                rng.random_range(0.05..2.0),
                rng.random_range(0.2..2.0),
                rng.random_range(0.2..2.0),
                rng.random_range(0.05..1.0),
            );
            let mut v = Vec6::zeros();
            for k in 0..6 {
                v[k] = rng.random_range(-1.0..1.0);
            }
            for &k in model.pinned() {
                v[k] = 0.0;
            }
            let d = emit_cone(&p, model);
            let m = cone_margin(&p, model, &v).unwrap();
            if (m >= 0.0) != (d.soc_margin(&v) >= 0.0) && m.abs() > 1e-12 {
                disagreements += 1;
            }
        }
        assert_eq!(disagreements, 0);
    }

    #[test]
    fn normal_bounds() {
        let rows = normal_force_bound(&[Some(70.0)]).unwrap();
        assert_eq!(rows, vec![NormalForceBound { contact: 0, upper: 70.0 }]);
        assert!(normal_force_bound(&[Some(f64::INFINITY)]).unwrap().is_empty());
        assert!(normal_force_bound(&[None]).unwrap().is_empty());
        assert_eq!(normal_force_bound(&[Some(70.0), Some(50.0)]).unwrap().len(), 2);
        assert!(normal_force_bound(&[Some(0.0)]).is_err());
    }

    fn arb_params() -> impl Strategy<Value = FrictionParams> {
        (0.05f64..2.0, 0.2f64..2.0, 0.2f64..2.0, 0.05f64..1.0).prop_map(|(m, x, y, z)| FrictionParams::new(m, x, y, z))
    }

    fn arb_member(model: ContactModel) -> impl Strategy<Value = (FrictionParams, Vec6)> {
        (arb_params(), prop::array::uniform6(-1.0f64..1.0)).prop_map(move |(p, mut v)| {
            for &k in model.pinned() {
                v[k] = 0.0;
            }
            let mut wv = Vec6::from(v);
            // Lift the normal component until the wrench is inside.
            let deficit = -margin_unchecked(&p, model, &wv);
            if deficit > 0.0 {
                wv[2] += deficit + 1e-3;
            }
            (p, wv)
        })
    }

    proptest! {
        #[test]
        fn cone_is_convex((p, a) in arb_member(ContactModel::Sfce), b in prop::array::uniform6(-1.0f64..1.0), t in 0.0f64..1.0) {
            let mut wb = Vec6::from(b);
            wb[3] = 0.0;
            wb[4] = 0.0;
            let deficit = -margin_unchecked(&p, ContactModel::Sfce, &wb);
            if deficit > 0.0 {
                wb[2] += deficit;
            }
            let c = a * t + wb * (1.0 - t);
            prop_assert!(cone_margin(&p, ContactModel::Sfce, &c).unwrap() >= -1e-12);
        }

        #[test]
        fn cone_is_scale_invariant((p, a) in arb_member(ContactModel::Pcwf), lambda in 0.0f64..100.0) {
            prop_assert!(cone_margin(&p, ContactModel::Pcwf, &(a * lambda)).unwrap() >= -1e-12);
        }

        #[test]
        fn margin_monotone_in_mu(p in arb_params(), v in prop::array::uniform6(-1.0f64..1.0), k in 1.0f64..3.0) {
            let mut wv = Vec6::from(v);
            wv[2] = wv[2].abs();
            let hi = FrictionParams { mu: p.mu * k, ..p };
            prop_assert!(margin_unchecked(&hi, ContactModel::Sfce, &wv) >= margin_unchecked(&p, ContactModel::Sfce, &wv) - 1e-15);
        }

        #[test]
        fn sfce_without_torsion_is_pcwf(p in arb_params(), v in prop::array::uniform6(-1.0f64..1.0)) {
            let mut wv = Vec6::from(v);
            wv[3] = 0.0;
            wv[4] = 0.0;
            wv[5] = 0.0;
            let s = emit_cone(&p, ContactModel::Sfce).contains(&wv, 0.0);
            let c = emit_cone(&p, ContactModel::Pcwf).contains(&wv, 0.0);
            prop_assert_eq!(s, c);
        }
    }
}
