use super::*;
use crate::RankTolPolicy;
use approx::assert_abs_diff_eq;
use nalgebra::{dmatrix, dvector, DMatrix, DVector};

fn free_bounds(n: usize) -> DVector<f64> {
    DVector::from_element(n, f64::NEG_INFINITY)
}

#[test]
fn lp_single_active_bound() {
    let lp = LinearProgram {
        cost: dvector![1.0],
        ineq_matrix: DMatrix::zeros(0, 1),
        ineq_rhs: dvector![],
        eq_matrix: DMatrix::zeros(0, 1),
        eq_rhs: dvector![],
        lower_bounds: dvector![1.0],
    };
    let r = solve_lp(&lp).unwrap();
    assert_eq!(r.status, SolveStatus::Optimal);
    assert_abs_diff_eq!(r.primal[0], 1.0, epsilon = 1e-10);
    assert_abs_diff_eq!(r.objective, 1.0, epsilon = 1e-10);
}

#[test]
fn lp_empty_feasible_set() {
    // x <= -1 clashes with x >= 0.
    let lp = LinearProgram {
        cost: dvector![0.0],
        ineq_matrix: dmatrix![1.0],
        ineq_rhs: dvector![-1.0],
        eq_matrix: DMatrix::zeros(0, 1),
        eq_rhs: dvector![],
        lower_bounds: dvector![0.0],
    };
    let r = solve_lp(&lp).unwrap();
    assert_eq!(r.status, SolveStatus::Infeasible);
}

#[test]
fn lp_unbounded_ray() {
    let lp = LinearProgram {
        cost: dvector![-1.0],
        ineq_matrix: DMatrix::zeros(0, 1),
        ineq_rhs: dvector![],
        eq_matrix: DMatrix::zeros(0, 1),
        eq_rhs: dvector![],
        lower_bounds: dvector![0.0],
    };
    let r = solve_lp(&lp).unwrap();
    assert_eq!(r.status, SolveStatus::Unbounded);
}

#[test]
fn qp_unconstrained_quadratic() {
    // min (x-1)^2 = min 1/2 * (2) x^2 - 2x + 1; constant dropped.
    let qp = QuadraticProgram {
        hessian: dmatrix![2.0],
        cost: dvector![-2.0],
        ineq_matrix: DMatrix::zeros(0, 1),
        ineq_rhs: dvector![],
        eq_matrix: DMatrix::zeros(0, 1),
        eq_rhs: dvector![],
        lower_bounds: free_bounds(1),
    };
    let r = solve_qp(&qp).unwrap();
    assert_eq!(r.status, SolveStatus::Optimal);
    assert_abs_diff_eq!(r.primal[0], 1.0, epsilon = 1e-9);
    // Objective of the shifted form at x = 1 is -1; adding the constant 1
    // recovers (x-1)^2 = 0.
    assert_abs_diff_eq!(r.objective + 1.0, 0.0, epsilon = 1e-9);
}

#[test]
fn qp_symmetric_equality() {
    // min x^2 + y^2 s.t. x + y = 2 -> (1, 1), objective 2.
    let qp = QuadraticProgram {
        hessian: dmatrix![2.0, 0.0; 0.0, 2.0],
        cost: dvector![0.0, 0.0],
        ineq_matrix: DMatrix::zeros(0, 2),
        ineq_rhs: dvector![],
        eq_matrix: dmatrix![1.0, 1.0],
        eq_rhs: dvector![2.0],
        lower_bounds: free_bounds(2),
    };
    let r = solve_qp(&qp).unwrap();
    assert_eq!(r.status, SolveStatus::Optimal);
    assert_abs_diff_eq!(r.primal[0], 1.0, epsilon = 1e-9);
    assert_abs_diff_eq!(r.primal[1], 1.0, epsilon = 1e-9);
    assert_abs_diff_eq!(r.objective, 2.0, epsilon = 1e-9);
}

#[test]
fn kkt_analytic_pair_is_exact() {
    // min x^2 s.t. x >= 1: optimum x = 1 with bound multiplier 2.
    let qp = QuadraticProgram {
        hessian: dmatrix![2.0],
        cost: dvector![0.0],
        ineq_matrix: DMatrix::zeros(0, 1),
        ineq_rhs: dvector![],
        eq_matrix: DMatrix::zeros(0, 1),
        eq_rhs: dvector![],
        lower_bounds: dvector![1.0],
    };
    let hand = SolveResult {
        status: SolveStatus::Optimal,
        primal: dvector![1.0],
        duals_ineq: dvector![],
        duals_eq: dvector![],
        duals_lower: dvector![2.0],
        objective: 1.0,
        kkt: KktResiduals::nan(),
        iterations: 0,
    };
    let report = check_kkt_qp(&qp, &hand).unwrap();
    assert_abs_diff_eq!(report.residuals.stationarity, 0.0);
    assert_abs_diff_eq!(report.residuals.primal_feas, 0.0);
    assert_abs_diff_eq!(report.residuals.complementarity, 0.0);

    // Perturbing the primal to 1.1 leaves stationarity 2*1.1 - 2 = 0.2.
    let perturbed = SolveResult {
        primal: dvector![1.1],
        ..hand
    };
    let report = check_kkt_qp(&qp, &perturbed).unwrap();
    assert_abs_diff_eq!(report.residuals.stationarity, 0.2, epsilon = 1e-12);
}

#[test]
fn kkt_rejects_non_optimal_status() {
    let lp = LinearProgram::unconstrained(dvector![0.0]);
    let r = SolveResult {
        status: SolveStatus::Infeasible,
        primal: dvector![0.0],
        duals_ineq: dvector![],
        duals_eq: dvector![],
        duals_lower: dvector![0.0],
        objective: f64::NAN,
        kkt: KktResiduals::nan(),
        iterations: 0,
    };
    assert!(check_kkt_lp(&lp, &r).is_err());
}

#[test]
fn qp_box_constrained_projection() {
    // Closest point to (3, 2) with x + y = 4, x >= 0, y >= 0.
    let qp = QuadraticProgram {
        hessian: DMatrix::identity(2, 2) * 2.0,
        cost: dvector![-6.0, -4.0],
        ineq_matrix: DMatrix::zeros(0, 2),
        ineq_rhs: dvector![],
        eq_matrix: dmatrix![1.0, 1.0],
        eq_rhs: dvector![4.0],
        lower_bounds: dvector![0.0, 0.0],
    };
    let r = solve_qp(&qp).unwrap();
    assert_eq!(r.status, SolveStatus::Optimal);
    assert_abs_diff_eq!(r.primal[0], 2.5, epsilon = 1e-9);
    assert_abs_diff_eq!(r.primal[1], 1.5, epsilon = 1e-9);
}

#[test]
fn qp_with_zero_hessian_matches_lp() {
    let cost = dvector![1.0, -2.0, 0.5];
    let ineq = dmatrix![1.0, 1.0, 0.0; -1.0, 2.0, 1.0; 0.0, 1.0, 3.0];
    let rhs = dvector![4.0, 3.0, 6.0];
    let lb = dvector![0.0, 0.0, 0.0];
    let lp = LinearProgram {
        cost: cost.clone(),
        ineq_matrix: ineq.clone(),
        ineq_rhs: rhs.clone(),
        eq_matrix: DMatrix::zeros(0, 3),
        eq_rhs: dvector![],
        lower_bounds: lb.clone(),
    };
    let qp = QuadraticProgram {
        hessian: DMatrix::zeros(3, 3),
        cost,
        ineq_matrix: ineq,
        ineq_rhs: rhs,
        eq_matrix: DMatrix::zeros(0, 3),
        eq_rhs: dvector![],
        lower_bounds: lb,
    };
    let rl = solve_lp(&lp).unwrap();
    let rq = solve_qp(&qp).unwrap();
    assert_eq!(rl.status, SolveStatus::Optimal);
    assert_eq!(rq.status, SolveStatus::Optimal);
    assert_abs_diff_eq!(rl.objective, rq.objective, epsilon = 1e-8);
    assert_abs_diff_eq!((rl.primal - rq.primal).abs().max(), 0.0, epsilon = 1e-8);
}

#[test]
fn lp_strong_duality_holds() {
    let lp = LinearProgram {
        cost: dvector![2.0, 3.0],
        ineq_matrix: dmatrix![-1.0, -1.0; -2.0, -1.0],
        ineq_rhs: dvector![-4.0, -5.0],
        eq_matrix: DMatrix::zeros(0, 2),
        eq_rhs: dvector![],
        lower_bounds: dvector![0.0, 0.0],
    };
    let r = solve_lp(&lp).unwrap();
    assert_eq!(r.status, SolveStatus::Optimal);
    let dual = lp_dual_objective(&lp, &r);
    assert_abs_diff_eq!(r.objective, dual, epsilon = 1e-6);
}

#[test]
fn rank_of_identity_and_proportional_rows() {
    assert_eq!(
        numeric_rank(&DMatrix::identity(3, 3), RankTolPolicy::Default),
        3
    );
    assert_eq!(
        numeric_rank(&dmatrix![1.0, 2.0; 2.0, 4.0], RankTolPolicy::Default),
        1
    );
}

#[test]
fn rank_is_permutation_invariant() {
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;
    let mut rng = ChaCha12Rng::seed_from_u64(7);
    let m = DMatrix::from_fn(4, 6, |_, _| rng.random_range(-1.0..1.0));
    // Make it rank 3 by replacing a row with a combination of others.
    let mut m = m;
    let combo = m.row(0) * 0.5 + m.row(1) * 2.0;
    m.row_mut(3).copy_from(&combo);
    let rank = numeric_rank(&m, RankTolPolicy::Default);
    assert_eq!(rank, 3);

    let mut perm = m.clone();
    perm.swap_rows(0, 2);
    perm.swap_columns(1, 5);
    perm.swap_columns(0, 3);
    assert_eq!(numeric_rank(&perm, RankTolPolicy::Default), rank);
}

#[test]
fn validation_catches_malformed_blocks() {
    let lp = LinearProgram {
        cost: dvector![1.0, 2.0],
        ineq_matrix: dmatrix![1.0],
        ineq_rhs: dvector![1.0],
        eq_matrix: DMatrix::zeros(0, 2),
        eq_rhs: dvector![],
        lower_bounds: free_bounds(2),
    };
    assert!(lp.validate().is_err());

    let qp = QuadraticProgram {
        hessian: dmatrix![0.0, 1.0; -1.0, 0.0],
        cost: dvector![0.0, 0.0],
        ineq_matrix: DMatrix::zeros(0, 2),
        ineq_rhs: dvector![],
        eq_matrix: DMatrix::zeros(0, 2),
        eq_rhs: dvector![],
        lower_bounds: free_bounds(2),
    };
    assert!(matches!(qp.validate(), Err(ProblemError::NotSymmetric(_))));

    let indefinite = QuadraticProgram {
        hessian: dmatrix![1.0, 0.0; 0.0, -1.0],
        cost: dvector![0.0, 0.0],
        ineq_matrix: DMatrix::zeros(0, 2),
        ineq_rhs: dvector![],
        eq_matrix: DMatrix::zeros(0, 2),
        eq_rhs: dvector![],
        lower_bounds: free_bounds(2),
    };
    assert!(matches!(indefinite.validate(), Err(ProblemError::NotPsd(_))));
}

#[test]
fn optimal_results_self_certify() {
    let qp = QuadraticProgram {
        hessian: dmatrix![4.0, 1.0; 1.0, 2.0],
        cost: dvector![-1.0, 1.0],
        ineq_matrix: dmatrix![1.0, 2.0],
        ineq_rhs: dvector![1.0],
        eq_matrix: DMatrix::zeros(0, 2),
        eq_rhs: dvector![],
        lower_bounds: dvector![0.0, 0.0],
    };
    let r = solve_qp(&qp).unwrap();
    assert_eq!(r.status, SolveStatus::Optimal);
    let report = check_kkt_qp(&qp, &r).unwrap();
    assert!(report.within(1e-7), "residuals {:?}", report.residuals);
}

#[test]
fn debug_json_round_trips_shape() {
    let lp = LinearProgram {
        cost: dvector![1.0],
        ineq_matrix: dmatrix![1.0],
        ineq_rhs: dvector![2.0],
        eq_matrix: DMatrix::zeros(0, 1),
        eq_rhs: dvector![],
        lower_bounds: dvector![f64::NEG_INFINITY],
    };
    let text = lp.to_debug_json();
    let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(parsed["lower_bounds"][0], serde_json::Value::Null);
    assert_eq!(parsed["ineq_matrix"]["rows"], 1);
}
