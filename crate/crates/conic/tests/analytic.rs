//! Programs with closed-form solutions and crafted infeasible programs.

use proptest::prelude::*;
use topp_conic::catalog::{analytic_instances, infeasible_instances};
use topp_conic::{canonicalize, solve, verify_certificate, verify_kkt, ConicProgram, LinExpr, RowTag, Settings, Status};

const GAP_TOL: f64 = 1e-8;

fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
    assert!((a - b).abs() <= tol * (1.0 + b.abs()), "{what}: {a} vs {b}");
}

#[test]
fn catalog_has_at_least_twenty_instances() {
    assert!(analytic_instances().len() >= 20);
}

#[test]
fn analytic_optima_are_reached() {
    for inst in analytic_instances() {
        let (form, _) = canonicalize(&inst.program).unwrap();
        let r = solve(&form, &Settings::default());
        assert_eq!(r.status, Status::Optimal, "{}", inst.name);
        assert!(r.residuals.gap <= GAP_TOL, "{}: gap {}", inst.name, r.residuals.gap);
        assert_close(r.objective, inst.optimum, 1e-7, inst.name);
        for &(i, x) in &inst.solution {
            assert_close(r.x[i], x, 1e-6, inst.name);
        }
        let check = verify_kkt(&form, &r);
        assert!(check.residuals.primal <= 1e-8 && check.residuals.dual <= 1e-8, "{}: {check:?}", inst.name);
        assert!(check.slack_violation <= 1e-9 && check.dual_violation <= 1e-9, "{}: {check:?}", inst.name);
    }
}

#[test]
fn weak_duality_holds_at_the_optimum() {
    for inst in analytic_instances() {
        let (form, _) = canonicalize(&inst.program).unwrap();
        let r = solve(&form, &Settings::default());
        let (p, d) = (r.residuals.primal_objective, r.residuals.dual_objective);
        assert!(p >= d - 1e-7 * (1.0 + p.abs()), "{}: {p} < {d}", inst.name);
    }
}

#[test]
fn infeasibility_certificates_verify() {
    let mut kinds = Vec::new();
    for inst in infeasible_instances() {
        let (form, _) = canonicalize(&inst.program).unwrap();
        let r = solve(&form, &Settings::default());
        assert_eq!(r.status, inst.expected, "{}", inst.name);
        let check = verify_certificate(&form, r.certificate.as_ref().unwrap());
        assert!(check.is_valid(1e-7), "{}: {check:?}", inst.name);
        kinds.push(inst.expected);
    }
    assert!(kinds.contains(&Status::PrimalInfeasible) && kinds.contains(&Status::DualInfeasible));
}

#[test]
fn primal_certificate_of_contradictory_bounds_is_normalized() {
    let inst = &infeasible_instances()[0];
    let (form, _) = canonicalize(&inst.program).unwrap();
    let r = solve(&form, &Settings::default());
    let check = verify_certificate(&form, r.certificate.as_ref().unwrap());
    assert_close(check.objective, -1.0, 1e-12, inst.name);
}

#[test]
fn solves_are_deterministic() {
    for inst in analytic_instances() {
        let (form, _) = canonicalize(&inst.program).unwrap();
        let a = solve(&form, &Settings::default());
        let b = solve(&form, &Settings::default());
        assert_eq!(a.x, b.x, "{}", inst.name);
        assert_eq!(a.iterations, b.iterations, "{}", inst.name);
    }
}

#[test]
fn objective_scaling_scales_the_optimum() {
    for inst in analytic_instances() {
        let mut scaled = inst.program.clone();
        scaled.objective = scaled.objective.scaled(1e3);
        let (form, _) = canonicalize(&scaled).unwrap();
        let r = solve(&form, &Settings::default());
        assert_eq!(r.status, Status::Optimal, "{}", inst.name);
        assert_close(r.objective, 1e3 * inst.optimum, 1e-7, inst.name);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// A linear objective over a box is minimized coordinatewise.
    #[test]
    fn box_lp_matches_coordinatewise_minimum(
        cost in prop::collection::vec(-5.0f64..5.0, 1..6),
        lo in prop::collection::vec(-3.0f64..0.0, 6),
        width in prop::collection::vec(0.1f64..4.0, 6),
    ) {
        let n = cost.len();
        let mut p = ConicProgram::new();
        p.add_block("x", None, n);
        let mut obj = LinExpr::zero();
        let mut expected = 0.0;
        for i in 0..n {
            obj = obj.term(i, cost[i]);
            let hi = lo[i] + width[i];
            p.add_bound(LinExpr::var(i), Some(lo[i]), Some(hi), RowTag::new("box", i));
            expected += (cost[i] * lo[i]).min(cost[i] * hi);
        }
        p.objective = obj;
        let (form, _) = canonicalize(&p).unwrap();
        let r = solve(&form, &Settings::default());
        prop_assert_eq!(r.status, Status::Optimal);
        prop_assert!((r.objective - expected).abs() <= 1e-7 * (1.0 + expected.abs()));
    }

    /// The minimum of a linear function over a ball of radius ρ is
    /// `cᵀx₀ - ρ‖c‖`.
    #[test]
    fn ball_minimum_matches_closed_form(
        cost in prop::collection::vec(-3.0f64..3.0, 2..5),
        centre in prop::collection::vec(-2.0f64..2.0, 5),
        radius in 0.1f64..3.0,
    ) {
        let n = cost.len();
        prop_assume!(cost.iter().map(|c| c * c).sum::<f64>() > 1e-4);
        let mut p = ConicProgram::new();
        p.add_block("x", None, n);
        let mut cone = vec![LinExpr::constant(radius)];
        let mut obj = LinExpr::zero();
        for i in 0..n {
            cone.push(LinExpr::var(i).plus_constant(-centre[i]));
            obj = obj.term(i, cost[i]);
        }
        p.objective = obj;
        p.add_soc(cone, RowTag::new("ball", 0));
        let norm = cost.iter().map(|c| c * c).sum::<f64>().sqrt();
        let expected: f64 = (0..n).map(|i| cost[i] * centre[i]).sum::<f64>() - radius * norm;
        let (form, _) = canonicalize(&p).unwrap();
        let r = solve(&form, &Settings::default());
        prop_assert_eq!(r.status, Status::Optimal);
        prop_assert!((r.objective - expected).abs() <= 1e-7 * (1.0 + expected.abs()), "{} vs {}", r.objective, expected);
    }
}
