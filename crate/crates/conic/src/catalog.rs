//! Small programs with closed-form optima, shared by the solver tests and
//! the acceptance gate.

use crate::ipm::Status;
use crate::program::{ConicProgram, LinExpr, RowTag};

pub struct AnalyticInstance {
    pub name: &'static str,
    pub program: ConicProgram,
    pub optimum: f64,
    /// Entries of the unique minimizer, where it is unique.
    pub solution: Vec<(usize, f64)>,
}

pub struct InfeasibleInstance {
    pub name: &'static str,
    pub program: ConicProgram,
    pub expected: Status,
}

fn tag(name: &str) -> RowTag {
    RowTag::new(name, 0)
}

fn vars(n: usize) -> ConicProgram {
    let mut p = ConicProgram::new();
    p.add_block("v", None, n);
    p
}

fn v(i: usize) -> LinExpr {
    LinExpr::var(i)
}

fn c(x: f64) -> LinExpr {
    LinExpr::constant(x)
}

fn instance(name: &'static str, program: ConicProgram, optimum: f64, solution: Vec<(usize, f64)>) -> AnalyticInstance {
    AnalyticInstance {
        name,
        program,
        optimum,
        solution,
    }
}

pub fn analytic_instances() -> Vec<AnalyticInstance> {
    let mut out = Vec::new();

    // min x + 2y, 0 <= x,y <= 1, x + y >= 1
    let mut p = vars(2);
    p.objective = v(0).term(1, 2.0);
    p.add_bound(v(0), Some(0.0), Some(1.0), tag("x"));
    p.add_bound(v(1), Some(0.0), Some(1.0), tag("y"));
    p.add_bound(v(0).term(1, 1.0), Some(1.0), None, tag("sum"));
    out.push(instance("lp_box", p, 1.0, vec![(0, 1.0), (1, 0.0)]));

    // min 3 - x - y, x + 2y = 4, x,y >= 0
    let mut p = vars(2);
    p.objective = LinExpr::zero().term(0, -1.0).term(1, -1.0).plus_constant(3.0);
    p.add_equality(v(0).term(1, 2.0).plus_constant(-4.0), tag("eq"));
    p.add_bound(v(0), Some(0.0), None, tag("x"));
    p.add_bound(v(1), Some(0.0), None, tag("y"));
    out.push(instance("lp_equality_with_constant", p, -1.0, vec![(0, 4.0), (1, 0.0)]));

    // min x, x >= 3
    let mut p = vars(1);
    p.objective = v(0);
    p.add_bound(v(0), Some(3.0), None, tag("x"));
    out.push(instance("lp_single_bound", p, 3.0, vec![(0, 3.0)]));

    // min 2x + 3y, x + y >= 4, x + 3y >= 6, x,y >= 0
    let mut p = vars(2);
    p.objective = v(0).scaled(2.0).term(1, 3.0);
    p.add_bound(v(0).term(1, 1.0), Some(4.0), None, tag("a"));
    p.add_bound(v(0).term(1, 3.0), Some(6.0), None, tag("b"));
    p.add_bound(v(0), Some(0.0), None, tag("x"));
    p.add_bound(v(1), Some(0.0), None, tag("y"));
    out.push(instance("lp_diet", p, 9.0, vec![(0, 3.0), (1, 1.0)]));

    // min x + y, x - y = 1, y >= -2
    let mut p = vars(2);
    p.objective = v(0).term(1, 1.0);
    p.add_equality(v(0).term(1, -1.0).plus_constant(-1.0), tag("eq"));
    p.add_bound(v(1), Some(-2.0), None, tag("y"));
    out.push(instance("lp_free_variable", p, -3.0, vec![(0, -1.0), (1, -2.0)]));

    // min t, |x - 1| <= t, |x - 3| <= t
    let mut p = vars(2);
    p.objective = v(1);
    for (i, centre) in [1.0, 3.0].into_iter().enumerate() {
        p.add_bound(v(1).term(0, -1.0), Some(-centre), None, RowTag::new("lo", i));
        p.add_bound(v(1).term(0, 1.0), Some(centre), None, RowTag::new("hi", i));
    }
    out.push(instance("lp_chebyshev_centre", p, 1.0, vec![(0, 2.0), (1, 1.0)]));

    // min -x - y over the diamond |x| + |y| <= 1; a whole edge is optimal
    let mut p = vars(2);
    p.objective = LinExpr::zero().term(0, -1.0).term(1, -1.0);
    for (i, (sx, sy)) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)].into_iter().enumerate() {
        p.add_bound(LinExpr::zero().term(0, sx).term(1, sy), None, Some(1.0), RowTag::new("face", i));
    }
    out.push(instance("lp_degenerate_face", p, -1.0, vec![]));

    // min x3, x1 = 1, x2 = 2 x1, x3 >= x1 + x2
    let mut p = vars(3);
    p.objective = v(2);
    p.add_equality(v(0).plus_constant(-1.0), tag("x1"));
    p.add_equality(v(1).term(0, -2.0), tag("x2"));
    p.add_bound(v(2).term(0, -1.0).term(1, -1.0), Some(0.0), None, tag("x3"));
    out.push(instance("lp_equality_chain", p, 3.0, vec![(0, 1.0), (1, 2.0), (2, 3.0)]));

    // min x + 2y with x pinned at 2.5 and y >= -1
    let mut p = vars(2);
    p.objective = v(0).term(1, 1.0);
    p.pin(0, 2.5, tag("pin"));
    p.add_bound(v(1), Some(-1.0), None, tag("y"));
    out.push(instance("lp_pinned_variable", p, 1.5, vec![(0, 2.5), (1, -1.0)]));

    // min t, ‖(x, y)‖ <= t, x + y = 2
    let mut p = vars(3);
    p.objective = v(2);
    p.add_equality(v(0).term(1, 1.0).plus_constant(-2.0), tag("line"));
    p.add_soc(vec![v(2), v(0), v(1)], tag("norm"));
    out.push(instance("socp_min_norm_on_line", p, 2f64.sqrt(), vec![(0, 1.0), (1, 1.0)]));

    // the same with the objective scaled by 10³
    let mut p = vars(3);
    p.objective = v(2).scaled(1e3);
    p.add_equality(v(0).term(1, 1.0).plus_constant(-2.0), tag("line"));
    p.add_soc(vec![v(2), v(0), v(1)], tag("norm"));
    out.push(instance("socp_scaled_objective", p, 1e3 * 2f64.sqrt(), vec![(0, 1.0), (1, 1.0)]));

    // max c, c² <= b <= 4, as (b + 1; 2c; b - 1) ∈ SOC
    let mut p = vars(2);
    p.objective = v(1).scaled(-1.0);
    p.add_bound(v(0), None, Some(4.0), tag("b"));
    p.add_soc(
        vec![v(0).plus_constant(1.0), LinExpr::zero().term(1, 2.0), v(0).plus_constant(-1.0)],
        tag("rot"),
    );
    out.push(instance("socp_square_root_epigraph", p, -2.0, vec![(0, 4.0), (1, 2.0)]));

    // min d, d >= 1/c, c <= 3, as (c + d; 2; c - d) ∈ SOC
    let mut p = vars(2);
    p.objective = v(1);
    p.add_bound(v(0), None, Some(3.0), tag("c"));
    p.add_soc(vec![v(0).term(1, 1.0), c(2.0), v(0).term(1, -1.0)], tag("rec"));
    out.push(instance("socp_reciprocal_epigraph", p, 1.0 / 3.0, vec![(0, 3.0), (1, 1.0 / 3.0)]));

    // min ‖x - (3, 4)‖, ‖x‖ <= 1
    let mut p = vars(3);
    p.objective = v(2);
    p.add_soc(vec![c(1.0), v(0), v(1)], tag("disc"));
    p.add_soc(vec![v(2), v(0).plus_constant(-3.0), v(1).plus_constant(-4.0)], tag("dist"));
    out.push(instance("socp_projection_onto_disc", p, 4.0, vec![(0, 0.6), (1, 0.8)]));

    // min x3, ‖(1, x2)‖ <= x3, x2 = 0
    let mut p = vars(3);
    p.objective = v(2);
    p.add_equality(v(1), tag("x2"));
    p.add_soc(vec![v(2), c(1.0), v(1)], tag("norm"));
    out.push(instance("socp_constant_entry", p, 1.0, vec![(1, 0.0), (2, 1.0)]));

    // min -x on the unit disc
    let mut p = vars(2);
    p.objective = v(0).scaled(-1.0);
    p.add_soc(vec![c(1.0), v(0), v(1)], tag("disc"));
    out.push(instance("socp_unit_disc", p, -1.0, vec![(0, 1.0), (1, 0.0)]));

    // min x + y + z on the unit ball
    let mut p = vars(3);
    p.objective = v(0).term(1, 1.0).term(2, 1.0);
    p.add_soc(vec![c(1.0), v(0), v(1), v(2)], tag("ball"));
    let r = 1.0 / 3f64.sqrt();
    out.push(instance("socp_unit_ball", p, -3f64.sqrt(), vec![(0, -r), (1, -r), (2, -r)]));

    // min t1 + t2, distances to (±1, 0); every point between is optimal
    let mut p = vars(4);
    p.objective = v(2).term(3, 1.0);
    p.add_soc(vec![v(2), v(0).plus_constant(-1.0), v(1)], tag("right"));
    p.add_soc(vec![v(3), v(0).plus_constant(1.0), v(1)], tag("left"));
    out.push(instance("socp_sum_of_distances", p, 2.0, vec![(1, 0.0)]));

    // distance from (1, 2, 3) to the plane x + y + z = 0
    let mut p = vars(4);
    p.objective = v(3);
    p.add_equality(v(0).term(1, 1.0).term(2, 1.0), tag("plane"));
    p.add_soc(
        vec![v(3), v(0).plus_constant(-1.0), v(1).plus_constant(-2.0), v(2).plus_constant(-3.0)],
        tag("dist"),
    );
    out.push(instance("socp_distance_to_plane", p, 2.0 * 3f64.sqrt(), vec![(0, -1.0), (1, 0.0), (2, 1.0)]));

    // min t, x² <= t, x >= 2
    let mut p = vars(2);
    p.objective = v(1);
    p.add_bound(v(0), Some(2.0), None, tag("x"));
    p.add_soc(
        vec![v(1).plus_constant(1.0), LinExpr::zero().term(0, 2.0), v(1).plus_constant(-1.0)],
        tag("square"),
    );
    out.push(instance("socp_square_epigraph", p, 4.0, vec![(0, 2.0), (1, 4.0)]));

    // min x, ‖(x, 1)‖ <= 2
    let mut p = vars(1);
    p.objective = v(0);
    p.add_soc(vec![c(2.0), v(0), c(1.0)], tag("disc"));
    out.push(instance("socp_chord", p, -3f64.sqrt(), vec![(0, -3f64.sqrt())]));

    // max g, g² <= a b, a <= 2, b <= 8
    let mut p = vars(3);
    p.objective = v(2).scaled(-1.0);
    p.add_bound(v(0), None, Some(2.0), tag("a"));
    p.add_bound(v(1), None, Some(8.0), tag("b"));
    p.add_soc(
        vec![v(0).term(1, 1.0), LinExpr::zero().term(2, 2.0), v(0).term(1, -1.0)],
        tag("mean"),
    );
    out.push(instance("socp_geometric_mean", p, -4.0, vec![(0, 2.0), (1, 8.0), (2, 4.0)]));

    // one interval of a unit double integrator from rest:
    // min 2d, d >= 1/c, c² <= b, b = 2a, |a| <= 1
    let mut p = vars(4);
    let (a, b, cc, d) = (0, 1, 2, 3);
    p.objective = v(d).scaled(2.0);
    p.add_equality(v(b).term(a, -2.0), tag("kin"));
    p.add_bound(v(a), Some(-1.0), Some(1.0), tag("acc"));
    p.add_soc(
        vec![v(b).plus_constant(1.0), LinExpr::zero().term(cc, 2.0), v(b).plus_constant(-1.0)],
        tag("c"),
    );
    p.add_soc(vec![v(cc).term(d, 1.0), c(2.0), v(cc).term(d, -1.0)], tag("d"));
    out.push(instance("socp_time_epigraph", p, 2f64.sqrt(), vec![(a, 1.0), (b, 2.0)]));

    out
}

pub fn infeasible_instances() -> Vec<InfeasibleInstance> {
    let mut out = Vec::new();

    // x >= 1 and x <= 0
    let mut p = vars(1);
    p.objective = v(0);
    p.add_bound(v(0), Some(1.0), None, tag("lo"));
    p.add_bound(v(0), None, Some(0.0), tag("hi"));
    out.push(InfeasibleInstance {
        name: "primal_contradictory_bounds",
        program: p,
        expected: Status::PrimalInfeasible,
    });

    // ‖(x, 1)‖ <= t, t <= 0.5
    let mut p = vars(2);
    p.objective = v(1);
    p.add_bound(v(1), None, Some(0.5), tag("t"));
    p.add_soc(vec![v(1), v(0), c(1.0)], tag("c"));
    out.push(InfeasibleInstance {
        name: "primal_cone_too_small",
        program: p,
        expected: Status::PrimalInfeasible,
    });

    // x + y = 3 on the unit disc
    let mut p = vars(2);
    p.objective = v(0);
    p.add_equality(v(0).term(1, 1.0).plus_constant(-3.0), tag("line"));
    p.add_soc(vec![c(1.0), v(0), v(1)], tag("disc"));
    out.push(InfeasibleInstance {
        name: "primal_line_misses_disc",
        program: p,
        expected: Status::PrimalInfeasible,
    });

    // min -x, x >= 0, ‖y‖ <= x + 1
    let mut p = vars(2);
    p.objective = v(0).scaled(-1.0);
    p.add_bound(v(0), Some(0.0), None, tag("x"));
    p.add_soc(vec![v(0).plus_constant(1.0), v(1)], tag("c"));
    out.push(InfeasibleInstance {
        name: "dual_unbounded_ray",
        program: p,
        expected: Status::DualInfeasible,
    });

    // min x - y, x <= y
    let mut p = vars(2);
    p.objective = v(0).term(1, -1.0);
    p.add_bound(v(0).term(1, -1.0), None, Some(0.0), tag("order"));
    out.push(InfeasibleInstance {
        name: "dual_unbounded_halfplane",
        program: p,
        expected: Status::DualInfeasible,
    });

    out
}
