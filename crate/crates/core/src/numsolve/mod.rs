//! Dense LP/QP solving with verifiable KKT certificates.
//!
//! Every optimization in this crate reduces to a call into this module: the
//! gauge and membership LPs, the regularized control problem, and the
//! pointwise predictor QPs. The solver is a primal active-set method on the
//! form
//!
//! ```text
//! min  1/2 x' H x + f' x
//! s.t. G x  = e
//!      A x <= b
//!      x  >= lb   (entrywise, -inf allowed)
//! ```
//!
//! with `H = 0` for LPs. The objective convention `1/2 x' H x + f' x` is
//! fixed crate-wide. Active sets are resolved exactly (no interior-point
//! smoothing), which downstream region enumeration relies on. A result is
//! only ever labeled optimal after an independent KKT re-check; anything
//! that fails certification is reported as a numerical failure.

mod active_set;
mod kkt;
mod rank;

use active_set::data_scale as active_set_scale;
pub use kkt::{check_kkt_lp, check_kkt_qp, KktReport};
pub use rank::numeric_rank;

use crate::jsonio::{vec_from, MatrixDto};
use crate::tolerances::ToleranceConfig;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("hessian is not symmetric (max asymmetry {0:.3e})")]
    NotSymmetric(f64),
    #[error("hessian is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),
    #[error("result status is {0:?}, expected Optimal")]
    NotOptimal(SolveStatus),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

/// `min f'x  s.t.  ineq_matrix x <= ineq_rhs, eq_matrix x = eq_rhs, x >= lower_bounds`.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub cost: DVector<f64>,
    pub ineq_matrix: DMatrix<f64>,
    pub ineq_rhs: DVector<f64>,
    pub eq_matrix: DMatrix<f64>,
    pub eq_rhs: DVector<f64>,
    /// Entrywise lower bounds; `f64::NEG_INFINITY` marks a free variable.
    pub lower_bounds: DVector<f64>,
}

impl LinearProgram {
    /// Problem with no constraints of any kind over `n` free variables.
    pub fn unconstrained(cost: DVector<f64>) -> Self {
        let n = cost.len();
        Self {
            cost,
            ineq_matrix: DMatrix::zeros(0, n),
            ineq_rhs: DVector::zeros(0),
            eq_matrix: DMatrix::zeros(0, n),
            eq_rhs: DVector::zeros(0),
            lower_bounds: DVector::from_element(n, f64::NEG_INFINITY),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn validate(&self) -> Result<(), ProblemError> {
        validate_blocks(
            self.n_vars(),
            &self.ineq_matrix,
            &self.ineq_rhs,
            &self.eq_matrix,
            &self.eq_rhs,
            &self.lower_bounds,
        )
    }

    pub fn to_debug_json(&self) -> String {
        serde_json::to_string_pretty(&LpDto::from(self)).expect("serialize LP")
    }
}

/// `min 1/2 x' H x + f' x` over the same constraint blocks as [`LinearProgram`].
#[derive(Debug, Clone)]
pub struct QuadraticProgram {
    pub hessian: DMatrix<f64>,
    pub cost: DVector<f64>,
    pub ineq_matrix: DMatrix<f64>,
    pub ineq_rhs: DVector<f64>,
    pub eq_matrix: DMatrix<f64>,
    pub eq_rhs: DVector<f64>,
    pub lower_bounds: DVector<f64>,
}

impl QuadraticProgram {
    pub fn n_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn validate(&self) -> Result<(), ProblemError> {
        let n = self.n_vars();
        if self.hessian.nrows() != n || self.hessian.ncols() != n {
            return Err(ProblemError::Dimension(format!(
                "hessian is {}x{}, expected {n}x{n}",
                self.hessian.nrows(),
                self.hessian.ncols()
            )));
        }
        let asym = (&self.hessian - self.hessian.transpose()).abs().max();
        if asym > 1e-10 * (1.0 + self.hessian.abs().max()) {
            return Err(ProblemError::NotSymmetric(asym));
        }
        if self.hessian.nrows() > 0 {
            let eig = self.hessian.clone().symmetric_eigenvalues();
            let min_eig = eig.min();
            if min_eig < -1e-8 * (1.0 + eig.abs().max()) {
                return Err(ProblemError::NotPsd(min_eig));
            }
        }
        validate_blocks(
            n,
            &self.ineq_matrix,
            &self.ineq_rhs,
            &self.eq_matrix,
            &self.eq_rhs,
            &self.lower_bounds,
        )
    }

    pub fn to_debug_json(&self) -> String {
        serde_json::to_string_pretty(&QpDto::from(self)).expect("serialize QP")
    }
}

fn validate_blocks(
    n: usize,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    g: &DMatrix<f64>,
    e: &DVector<f64>,
    lb: &DVector<f64>,
) -> Result<(), ProblemError> {
    if a.nrows() != b.len() {
        return Err(ProblemError::Dimension(format!(
            "{} inequality rows vs {} rhs entries",
            a.nrows(),
            b.len()
        )));
    }
    if g.nrows() != e.len() {
        return Err(ProblemError::Dimension(format!(
            "{} equality rows vs {} rhs entries",
            g.nrows(),
            e.len()
        )));
    }
    if a.nrows() > 0 && a.ncols() != n {
        return Err(ProblemError::Dimension(format!(
            "inequality matrix has {} columns, expected {n}",
            a.ncols()
        )));
    }
    if g.nrows() > 0 && g.ncols() != n {
        return Err(ProblemError::Dimension(format!(
            "equality matrix has {} columns, expected {n}",
            g.ncols()
        )));
    }
    if lb.len() != n {
        return Err(ProblemError::Dimension(format!(
            "{} lower bounds for {n} variables",
            lb.len()
        )));
    }
    for (i, &v) in lb.iter().enumerate() {
        if v.is_nan() || v == f64::INFINITY {
            return Err(ProblemError::Dimension(format!(
                "lower bound {i} is {v}"
            )));
        }
    }
    Ok(())
}

/// Residuals are stored raw; certification compares them against
/// `tol * scale` where `scale = 1 + max |problem data|`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KktResiduals {
    pub stationarity: f64,
    pub primal_feas: f64,
    pub complementarity: f64,
    pub scale: f64,
}

impl KktResiduals {
    pub fn nan() -> Self {
        Self {
            stationarity: f64::NAN,
            primal_feas: f64::NAN,
            complementarity: f64::NAN,
            scale: 1.0,
        }
    }

    pub fn within(&self, tol: f64) -> bool {
        self.stationarity <= tol * self.scale
            && self.primal_feas <= tol * self.scale
            && self.complementarity <= tol * self.scale
    }

    pub fn max(&self) -> f64 {
        self.stationarity
            .max(self.primal_feas)
            .max(self.complementarity)
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub primal: DVector<f64>,
    pub duals_ineq: DVector<f64>,
    pub duals_eq: DVector<f64>,
    /// Multipliers of the entrywise lower bounds, zero on free variables.
    pub duals_lower: DVector<f64>,
    pub objective: f64,
    pub kkt: KktResiduals,
    pub iterations: usize,
}

impl SolveResult {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn to_debug_json(&self) -> String {
        serde_json::to_string_pretty(&ResultDto::from(self)).expect("serialize result")
    }
}

/// Solve an LP with the default tolerance configuration.
pub fn solve_lp(lp: &LinearProgram) -> Result<SolveResult, ProblemError> {
    solve_lp_with(lp, &ToleranceConfig::default())
}

pub fn solve_lp_with(
    lp: &LinearProgram,
    tol: &ToleranceConfig,
) -> Result<SolveResult, ProblemError> {
    lp.validate()?;
    let mut result = active_set::solve(
        None,
        &lp.cost,
        &lp.eq_matrix,
        &lp.eq_rhs,
        &lp.ineq_matrix,
        &lp.ineq_rhs,
        &lp.lower_bounds,
        tol,
    );
    if result.status == SolveStatus::Optimal {
        let report = kkt::check_kkt_lp(lp, &result).expect("status is optimal");
        result.kkt = report.residuals;
        if !report.residuals.within(tol.kkt) {
            result.status = SolveStatus::NumericalFailure;
        }
    }
    Ok(result)
}

/// Solve a convex QP with the default tolerance configuration.
pub fn solve_qp(qp: &QuadraticProgram) -> Result<SolveResult, ProblemError> {
    solve_qp_with(qp, &ToleranceConfig::default())
}

pub fn solve_qp_with(
    qp: &QuadraticProgram,
    tol: &ToleranceConfig,
) -> Result<SolveResult, ProblemError> {
    qp.validate()?;
    // Work on the symmetrized Hessian so tiny asymmetries cannot leak into
    // the step computation.
    let h = (&qp.hessian + qp.hessian.transpose()) * 0.5;
    let mut result = active_set::solve(
        Some(&h),
        &qp.cost,
        &qp.eq_matrix,
        &qp.eq_rhs,
        &qp.ineq_matrix,
        &qp.ineq_rhs,
        &qp.lower_bounds,
        tol,
    );
    if result.status == SolveStatus::Optimal {
        let report = kkt::check_kkt_qp(qp, &result).expect("status is optimal");
        result.kkt = report.residuals;
        if !report.residuals.within(tol.kkt) {
            result.status = SolveStatus::NumericalFailure;
        }
    }
    Ok(result)
}

/// Dual objective of an LP at the multipliers carried by `result`.
///
/// At certified optima this agrees with the primal objective (strong
/// duality); the regression suite asserts the gap.
pub fn lp_dual_objective(lp: &LinearProgram, result: &SolveResult) -> f64 {
    let mut value = -lp.eq_rhs.dot(&result.duals_eq) - lp.ineq_rhs.dot(&result.duals_ineq);
    for i in 0..lp.n_vars() {
        let lb = lp.lower_bounds[i];
        if lb.is_finite() {
            value += lb * result.duals_lower[i];
        }
    }
    value
}

// --- JSON debug DTOs -------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct LpDto {
    cost: Vec<f64>,
    ineq_matrix: MatrixDto,
    ineq_rhs: Vec<f64>,
    eq_matrix: MatrixDto,
    eq_rhs: Vec<f64>,
    /// `null` encodes an unbounded-below entry.
    lower_bounds: Vec<Option<f64>>,
}

impl From<&LinearProgram> for LpDto {
    fn from(lp: &LinearProgram) -> Self {
        Self {
            cost: vec_from(&lp.cost),
            ineq_matrix: MatrixDto::from_matrix(&lp.ineq_matrix),
            ineq_rhs: vec_from(&lp.ineq_rhs),
            eq_matrix: MatrixDto::from_matrix(&lp.eq_matrix),
            eq_rhs: vec_from(&lp.eq_rhs),
            lower_bounds: lp
                .lower_bounds
                .iter()
                .map(|&v| if v.is_finite() { Some(v) } else { None })
                .collect(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct QpDto {
    hessian: MatrixDto,
    #[serde(flatten)]
    lp: LpDto,
}

impl From<&QuadraticProgram> for QpDto {
    fn from(qp: &QuadraticProgram) -> Self {
        Self {
            hessian: MatrixDto::from_matrix(&qp.hessian),
            lp: LpDto {
                cost: vec_from(&qp.cost),
                ineq_matrix: MatrixDto::from_matrix(&qp.ineq_matrix),
                ineq_rhs: vec_from(&qp.ineq_rhs),
                eq_matrix: MatrixDto::from_matrix(&qp.eq_matrix),
                eq_rhs: vec_from(&qp.eq_rhs),
                lower_bounds: qp
                    .lower_bounds
                    .iter()
                    .map(|&v| if v.is_finite() { Some(v) } else { None })
                    .collect(),
            },
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ResultDto {
    status: SolveStatus,
    primal: Vec<f64>,
    duals_ineq: Vec<f64>,
    duals_eq: Vec<f64>,
    duals_lower: Vec<f64>,
    objective: f64,
    kkt: KktResiduals,
    iterations: usize,
}

impl From<&SolveResult> for ResultDto {
    fn from(r: &SolveResult) -> Self {
        Self {
            status: r.status,
            primal: vec_from(&r.primal),
            duals_ineq: vec_from(&r.duals_ineq),
            duals_eq: vec_from(&r.duals_eq),
            duals_lower: vec_from(&r.duals_lower),
            objective: r.objective,
            kkt: r.kkt,
            iterations: r.iterations,
        }
    }
}

#[cfg(test)]
mod tests;
