//! Independent KKT residual checks.
//!
//! The residuals are recomputed from the raw problem data and the returned
//! primal/dual vectors, without touching any solver-internal state:
//!
//! * stationarity: `|H x + f + A' mu + G' nu - eta|_inf` with `eta` the
//!   lower-bound multipliers,
//! * primal feasibility: worst equality residual, inequality violation,
//!   or bound violation,
//! * complementarity: worst `|mu_i slack_i|` / `|eta_i (x_i - lb_i)|`,
//!   folding in any negative dual magnitude.

use nalgebra::{DMatrix, DVector};

use super::{
    KktResiduals, LinearProgram, ProblemError, QuadraticProgram, SolveResult, SolveStatus,
};

#[derive(Debug, Clone, Copy)]
pub struct KktReport {
    pub residuals: KktResiduals,
}

impl KktReport {
    pub fn within(&self, tol: f64) -> bool {
        self.residuals.within(tol)
    }
}

pub fn check_kkt_lp(lp: &LinearProgram, result: &SolveResult) -> Result<KktReport, ProblemError> {
    check(
        None,
        &lp.cost,
        &lp.ineq_matrix,
        &lp.ineq_rhs,
        &lp.eq_matrix,
        &lp.eq_rhs,
        &lp.lower_bounds,
        result,
    )
}

pub fn check_kkt_qp(qp: &QuadraticProgram, result: &SolveResult) -> Result<KktReport, ProblemError> {
    check(
        Some(&qp.hessian),
        &qp.cost,
        &qp.ineq_matrix,
        &qp.ineq_rhs,
        &qp.eq_matrix,
        &qp.eq_rhs,
        &qp.lower_bounds,
        result,
    )
}

#[allow(clippy::too_many_arguments)]
fn check(
    h: Option<&DMatrix<f64>>,
    f: &DVector<f64>,
    a_in: &DMatrix<f64>,
    b_in: &DVector<f64>,
    g_eq: &DMatrix<f64>,
    e_eq: &DVector<f64>,
    lb: &DVector<f64>,
    result: &SolveResult,
) -> Result<KktReport, ProblemError> {
    if result.status != SolveStatus::Optimal {
        return Err(ProblemError::NotOptimal(result.status));
    }
    let x = &result.primal;
    let n = x.len();

    let mut stat = match h {
        Some(h) => h * x + f,
        None => f.clone(),
    };
    if a_in.nrows() > 0 {
        stat += a_in.transpose() * &result.duals_ineq;
    }
    if g_eq.nrows() > 0 {
        stat += g_eq.transpose() * &result.duals_eq;
    }
    stat -= &result.duals_lower;
    let stationarity = if n > 0 { stat.abs().max() } else { 0.0 };

    let mut primal: f64 = 0.0;
    if g_eq.nrows() > 0 {
        primal = primal.max((g_eq * x - e_eq).abs().max());
    }
    let slack = if a_in.nrows() > 0 {
        let s = b_in - a_in * x;
        primal = primal.max((-&s).max().max(0.0));
        s
    } else {
        DVector::zeros(0)
    };
    for i in 0..n {
        if lb[i].is_finite() {
            primal = primal.max(lb[i] - x[i]);
        }
    }

    let mut comp: f64 = 0.0;
    for i in 0..a_in.nrows() {
        let mu = result.duals_ineq[i];
        comp = comp.max((mu * slack[i]).abs()).max(-mu);
    }
    for i in 0..n {
        if lb[i].is_finite() {
            let eta = result.duals_lower[i];
            comp = comp.max((eta * (x[i] - lb[i])).abs()).max(-eta);
        }
    }

    let scale = super::active_set_scale(h, f, a_in, b_in, g_eq, e_eq, lb);
    Ok(KktReport {
        residuals: KktResiduals {
            stationarity,
            primal_feas: primal.max(0.0),
            complementarity: comp.max(0.0),
            scale,
        },
    })
}
