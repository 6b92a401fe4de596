//! Primal active-set engine for convex QPs (and LPs as the `H = 0` case).
//!
//! The working set always contains every equality row; inequality rows and
//! lower bounds enter and leave it. Steps are computed in the nullspace of
//! the working constraints. A singular reduced Hessian (the LP case, and
//! the zero-curvature generator blocks of the control problems) is handled
//! by walking zero-curvature descent rays to the nearest blocking
//! constraint. Entering and leaving constraints are tie-broken by lowest
//! index, which keeps degenerate instances from cycling and makes the
//! returned optimizer deterministic.

use crate::tolerances::ToleranceConfig;
use nalgebra::{DMatrix, DVector};

use super::{KktResiduals, SolveResult, SolveStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum WorkRef {
    Ineq(usize),
    Lower(usize),
}

struct Engine<'a> {
    h: Option<&'a DMatrix<f64>>,
    f: &'a DVector<f64>,
    g_eq: &'a DMatrix<f64>,
    e_eq: &'a DVector<f64>,
    a_in: &'a DMatrix<f64>,
    b_in: &'a DVector<f64>,
    lb: &'a DVector<f64>,
    n: usize,
    scale: f64,
    feas_abs: f64,
    max_iter: usize,
}

enum IterateOutcome {
    Optimal {
        x: DVector<f64>,
        duals_eq: DVector<f64>,
        duals_ineq: DVector<f64>,
        duals_lower: DVector<f64>,
        iterations: usize,
    },
    Unbounded {
        iterations: usize,
    },
    IterationLimit,
}

#[allow(clippy::too_many_arguments)]
pub(super) fn solve(
    h: Option<&DMatrix<f64>>,
    f: &DVector<f64>,
    g_eq: &DMatrix<f64>,
    e_eq: &DVector<f64>,
    a_in: &DMatrix<f64>,
    b_in: &DVector<f64>,
    lb: &DVector<f64>,
    tol: &ToleranceConfig,
) -> SolveResult {
    let n = f.len();
    let scale = data_scale(h, f, a_in, b_in, g_eq, e_eq, lb);
    let engine = Engine {
        h,
        f,
        g_eq,
        e_eq,
        a_in,
        b_in,
        lb,
        n,
        scale,
        feas_abs: tol.feas * scale,
        max_iter: 200 + 30 * (n + g_eq.nrows() + a_in.nrows()),
    };

    let x0 = match engine.feasible_start() {
        Ok(x) => x,
        Err(status) => return failure_result(status, n, a_in.nrows(), g_eq.nrows(), scale),
    };

    match engine.iterate(x0) {
        IterateOutcome::Optimal {
            x,
            duals_eq,
            duals_ineq,
            duals_lower,
            iterations,
        } => {
            let objective = engine.objective(&x);
            SolveResult {
                status: SolveStatus::Optimal,
                primal: x,
                duals_ineq,
                duals_eq,
                duals_lower,
                objective,
                kkt: KktResiduals::nan(),
                iterations,
            }
        }
        IterateOutcome::Unbounded { iterations } => {
            let mut r = failure_result(
                SolveStatus::Unbounded,
                n,
                a_in.nrows(),
                g_eq.nrows(),
                scale,
            );
            r.objective = f64::NEG_INFINITY;
            r.iterations = iterations;
            r
        }
        IterateOutcome::IterationLimit => failure_result(
            SolveStatus::NumericalFailure,
            n,
            a_in.nrows(),
            g_eq.nrows(),
            scale,
        ),
    }
}

fn failure_result(
    status: SolveStatus,
    n: usize,
    m_in: usize,
    m_eq: usize,
    scale: f64,
) -> SolveResult {
    SolveResult {
        status,
        primal: DVector::zeros(n),
        duals_ineq: DVector::zeros(m_in),
        duals_eq: DVector::zeros(m_eq),
        duals_lower: DVector::zeros(n),
        objective: f64::NAN,
        kkt: KktResiduals {
            stationarity: f64::NAN,
            primal_feas: f64::NAN,
            complementarity: f64::NAN,
            scale,
        },
        iterations: 0,
    }
}

pub(super) fn data_scale(
    h: Option<&DMatrix<f64>>,
    f: &DVector<f64>,
    a_in: &DMatrix<f64>,
    b_in: &DVector<f64>,
    g_eq: &DMatrix<f64>,
    e_eq: &DVector<f64>,
    lb: &DVector<f64>,
) -> f64 {
    let mut m: f64 = 0.0;
    if let Some(h) = h {
        m = m.max(h.abs().max());
    }
    for block in [f, b_in, e_eq] {
        if block.len() > 0 {
            m = m.max(block.abs().max());
        }
    }
    for block in [a_in, g_eq] {
        if block.nrows() > 0 {
            m = m.max(block.abs().max());
        }
    }
    for &v in lb.iter() {
        if v.is_finite() {
            m = m.max(v.abs());
        }
    }
    1.0 + m
}

impl Engine<'_> {
    fn objective(&self, x: &DVector<f64>) -> f64 {
        let mut v = self.f.dot(x);
        if let Some(h) = self.h {
            v += 0.5 * (h * x).dot(x);
        }
        v
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        match self.h {
            Some(h) => h * x + self.f,
            None => self.f.clone(),
        }
    }

    fn is_feasible(&self, x: &DVector<f64>) -> bool {
        if self.g_eq.nrows() > 0 {
            let r = self.g_eq * x - self.e_eq;
            if r.abs().max() > self.feas_abs {
                return false;
            }
        }
        if self.a_in.nrows() > 0 {
            let r = self.a_in * x - self.b_in;
            if r.max() > self.feas_abs {
                return false;
            }
        }
        for i in 0..self.n {
            if self.lb[i].is_finite() && x[i] < self.lb[i] - self.feas_abs {
                return false;
            }
        }
        true
    }

    /// Produce a feasible starting point, running a phase-1 LP over
    /// artificial variables when the bound-clamped origin is not feasible.
    fn feasible_start(&self) -> Result<DVector<f64>, SolveStatus> {
        let mut x0: DVector<f64> = DVector::zeros(self.n);
        for i in 0..self.n {
            if self.lb[i].is_finite() {
                x0[i] = x0[i].max(self.lb[i]);
            }
        }
        if self.is_feasible(&x0) {
            return Ok(x0);
        }

        let me = self.g_eq.nrows();
        let mi = self.a_in.nrows();
        let n_ext = self.n + me + mi;

        let r_eq = if me > 0 {
            self.e_eq - self.g_eq * &x0
        } else {
            DVector::zeros(0)
        };
        let viol_in = if mi > 0 {
            let mut v = self.a_in * &x0 - self.b_in;
            v.apply(|t| *t = t.max(0.0));
            v
        } else {
            DVector::zeros(0)
        };

        // Equality rows: G x + diag(sign) t_g = e; inequality rows:
        // A x - t_a <= b. Starting at (x0, |r_eq|, viol_in) is feasible.
        let mut eq_ext = DMatrix::zeros(me, n_ext);
        eq_ext.view_mut((0, 0), (me, self.n)).copy_from(self.g_eq);
        for i in 0..me {
            eq_ext[(i, self.n + i)] = if r_eq[i] >= 0.0 { 1.0 } else { -1.0 };
        }
        let mut ineq_ext = DMatrix::zeros(mi, n_ext);
        ineq_ext.view_mut((0, 0), (mi, self.n)).copy_from(self.a_in);
        for i in 0..mi {
            ineq_ext[(i, self.n + me + i)] = -1.0;
        }

        let mut lb_ext = DVector::from_element(n_ext, 0.0);
        lb_ext.rows_mut(0, self.n).copy_from(self.lb);
        let mut cost_ext = DVector::zeros(n_ext);
        for i in self.n..n_ext {
            cost_ext[i] = 1.0;
        }

        let mut start = DVector::zeros(n_ext);
        start.rows_mut(0, self.n).copy_from(&x0);
        for i in 0..me {
            start[self.n + i] = r_eq[i].abs();
        }
        for i in 0..mi {
            start[self.n + me + i] = viol_in[i];
        }

        let phase1 = Engine {
            h: None,
            f: &cost_ext,
            g_eq: &eq_ext,
            e_eq: self.e_eq,
            a_in: &ineq_ext,
            b_in: self.b_in,
            lb: &lb_ext,
            n: n_ext,
            scale: self.scale,
            feas_abs: self.feas_abs,
            max_iter: self.max_iter + 30 * (me + mi),
        };
        debug_assert!(phase1.is_feasible(&start));

        match phase1.iterate(start) {
            IterateOutcome::Optimal { x, .. } => {
                let artificial: f64 = (self.n..n_ext).map(|i| x[i]).sum();
                if artificial > 10.0 * self.feas_abs {
                    return Err(SolveStatus::Infeasible);
                }
                let mut xf = x.rows(0, self.n).into_owned();
                for i in 0..self.n {
                    if self.lb[i].is_finite() {
                        xf[i] = xf[i].max(self.lb[i]);
                    }
                }
                Ok(xf)
            }
            IterateOutcome::Unbounded { .. } => Err(SolveStatus::NumericalFailure),
            IterateOutcome::IterationLimit => Err(SolveStatus::NumericalFailure),
        }
    }

    /// Working-set iteration from a feasible point.
    fn iterate(&self, mut x: DVector<f64>) -> IterateOutcome {
        let act_tol = 10.0 * f64::EPSILON * self.scale + 1e-12;
        let mut working = self.initial_working_set(&x, act_tol);

        for iteration in 0..self.max_iter {
            let c = self.working_matrix(&working);
            let null = nullspace(&c, self.n);
            let g = self.gradient(&x);

            let direction = if null.ncols() == 0 {
                None
            } else {
                self.eqp_direction(&null, &g)
            };

            match direction {
                None => {
                    // Stationary on the working subspace: check multipliers.
                    let y = multipliers(&c, &g);
                    let dual_tol = 1e-10 * (1.0 + g.abs().max());
                    let mut drop: Option<(WorkRef, usize)> = None;
                    for (k, wref) in working.iter().enumerate() {
                        let mult = y[self.g_eq.nrows() + k];
                        if mult < -dual_tol {
                            match drop {
                                Some((best, _)) if best <= *wref => {}
                                _ => drop = Some((*wref, k)),
                            }
                        }
                    }
                    match drop {
                        Some((_, k)) => {
                            working.remove(k);
                        }
                        None => {
                            return self.extract_optimal(x, &working, &y, iteration + 1);
                        }
                    }
                }
                Some((p, finite_target)) => {
                    let (alpha, blocker) = self.ratio_test(&x, &p, &working, finite_target);
                    match alpha {
                        Some(a) => {
                            x += &p * a;
                            if let Some(b) = blocker {
                                working.push(b);
                                working.sort();
                            }
                        }
                        None => return IterateOutcome::Unbounded {
                            iterations: iteration + 1,
                        },
                    }
                }
            }
        }
        IterateOutcome::IterationLimit
    }

    fn initial_working_set(&self, x: &DVector<f64>, act_tol: f64) -> Vec<WorkRef> {
        let mut working: Vec<WorkRef> = Vec::new();
        let mut rows: Vec<DVector<f64>> =
            (0..self.g_eq.nrows()).map(|i| self.g_eq.row(i).transpose()).collect();
        let mut candidates: Vec<WorkRef> = Vec::new();
        for i in 0..self.a_in.nrows() {
            let slack = self.b_in[i] - self.a_in.row(i).transpose().dot(x);
            if slack.abs() <= act_tol * (1.0 + self.b_in[i].abs()) {
                candidates.push(WorkRef::Ineq(i));
            }
        }
        for i in 0..self.n {
            if self.lb[i].is_finite() && (x[i] - self.lb[i]).abs() <= act_tol * (1.0 + self.lb[i].abs()) {
                candidates.push(WorkRef::Lower(i));
            }
        }
        candidates.sort();
        for cand in candidates {
            let row = self.constraint_row(cand);
            if independent_of(&rows, &row) {
                rows.push(row);
                working.push(cand);
            }
        }
        working
    }

    fn constraint_row(&self, wref: WorkRef) -> DVector<f64> {
        match wref {
            WorkRef::Ineq(i) => self.a_in.row(i).transpose(),
            WorkRef::Lower(i) => {
                let mut r = DVector::zeros(self.n);
                r[i] = -1.0;
                r
            }
        }
    }

    fn working_matrix(&self, working: &[WorkRef]) -> DMatrix<f64> {
        let m = self.g_eq.nrows() + working.len();
        let mut c = DMatrix::zeros(m, self.n);
        if self.g_eq.nrows() > 0 {
            c.view_mut((0, 0), (self.g_eq.nrows(), self.n))
                .copy_from(self.g_eq);
        }
        for (k, wref) in working.iter().enumerate() {
            c.row_mut(self.g_eq.nrows() + k)
                .copy_from(&self.constraint_row(*wref).transpose());
        }
        c
    }

    /// Direction in the working-set nullspace, or `None` at a stationary
    /// point. The flag reports whether the step target is the finite
    /// Newton length (`true`) or a ray (`false`).
    fn eqp_direction(&self, null: &DMatrix<f64>, g: &DVector<f64>) -> Option<(DVector<f64>, bool)> {
        let gr = null.transpose() * g;
        let grad_tol = 1e-11 * (1.0 + g.abs().max());

        let h = match self.h {
            None => {
                if gr.abs().max() <= grad_tol {
                    return None;
                }
                let mut p = null * (-gr);
                let norm = p.abs().max();
                p /= norm;
                return Some((p, false));
            }
            Some(h) => h,
        };

        let hr = null.transpose() * h * null;
        let eig = nalgebra::SymmetricEigen::new(hr);
        let lam_max = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
        let curv_tol = lam_max.max(1e-30) * 1e-10;

        // Slope along zero-curvature directions.
        let k = eig.eigenvalues.len();
        let mut zero_grad = DVector::zeros(k);
        for i in 0..k {
            if eig.eigenvalues[i] <= curv_tol {
                let v = eig.eigenvectors.column(i);
                let coef = v.dot(&gr);
                zero_grad += v * coef;
            }
        }
        if zero_grad.abs().max() > grad_tol {
            let mut p = null * (-zero_grad);
            let norm = p.abs().max();
            p /= norm;
            return Some((p, false));
        }

        // Newton step on the positive-curvature subspace.
        let mut pr = DVector::zeros(k);
        for i in 0..k {
            if eig.eigenvalues[i] > curv_tol {
                let v = eig.eigenvectors.column(i);
                let coef = v.dot(&gr) / eig.eigenvalues[i];
                pr -= v * coef;
            }
        }
        let p = null * pr;
        if p.abs().max() <= 1e-12 * (1.0 + self.scale) {
            return None;
        }
        Some((p, true))
    }

    /// Largest feasible step along `p`; returns `(step, blocking constraint)`.
    /// `None` signals an unblocked ray (unbounded problem).
    fn ratio_test(
        &self,
        x: &DVector<f64>,
        p: &DVector<f64>,
        working: &[WorkRef],
        finite_target: bool,
    ) -> (Option<f64>, Option<WorkRef>) {
        let mut alpha_max = f64::INFINITY;
        let mut candidates: Vec<(f64, WorkRef)> = Vec::new();

        for i in 0..self.a_in.nrows() {
            if working.contains(&WorkRef::Ineq(i)) {
                continue;
            }
            let row = self.a_in.row(i);
            let d = row.transpose().dot(p);
            let dir_tol = 1e-13 * (1.0 + row.amax()) * (1.0 + p.abs().max());
            if d > dir_tol {
                let slack = (self.b_in[i] - row.transpose().dot(x)).max(0.0);
                let a = slack / d;
                candidates.push((a, WorkRef::Ineq(i)));
                alpha_max = alpha_max.min(a);
            }
        }
        for i in 0..self.n {
            if !self.lb[i].is_finite() || working.contains(&WorkRef::Lower(i)) {
                continue;
            }
            let d = p[i];
            let dir_tol = 1e-13 * (1.0 + p.abs().max());
            if d < -dir_tol {
                let slack = (x[i] - self.lb[i]).max(0.0);
                let a = slack / (-d);
                candidates.push((a, WorkRef::Lower(i)));
                alpha_max = alpha_max.min(a);
            }
        }

        if finite_target && alpha_max >= 1.0 {
            return (Some(1.0), None);
        }
        if alpha_max.is_infinite() {
            // No blocking constraint on a ray.
            return (None, None);
        }

        let tie = 1e-12 * (1.0 + alpha_max);
        let blocker = candidates
            .iter()
            .filter(|(a, _)| *a <= alpha_max + tie)
            .map(|(_, w)| *w)
            .min()
            .expect("at least one blocking candidate");
        (Some(alpha_max), Some(blocker))
    }

    fn extract_optimal(
        &self,
        x: DVector<f64>,
        working: &[WorkRef],
        y: &DVector<f64>,
        iterations: usize,
    ) -> IterateOutcome {
        let me = self.g_eq.nrows();
        let duals_eq = y.rows(0, me).into_owned();
        let mut duals_ineq = DVector::zeros(self.a_in.nrows());
        let mut duals_lower = DVector::zeros(self.n);
        for (k, wref) in working.iter().enumerate() {
            let mult = y[me + k].max(0.0);
            match wref {
                WorkRef::Ineq(i) => duals_ineq[*i] = mult,
                WorkRef::Lower(i) => duals_lower[*i] = mult,
            }
        }
        IterateOutcome::Optimal {
            x,
            duals_eq,
            duals_ineq,
            duals_lower,
            iterations,
        }
    }
}

/// Orthonormal basis of the nullspace of `c` (an `n`-column matrix),
/// computed from a full SVD of the zero-padded square matrix.
pub(crate) fn nullspace(c: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    if c.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    let rows = c.nrows().max(n);
    let mut padded = DMatrix::zeros(rows, n);
    padded.view_mut((0, 0), (c.nrows(), n)).copy_from(c);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("svd with v requested");
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let tol = sigma_max * (rows.max(n) as f64) * f64::EPSILON + f64::MIN_POSITIVE;
    let mut cols: Vec<usize> = Vec::new();
    for i in 0..svd.singular_values.len() {
        if svd.singular_values[i] <= tol {
            cols.push(i);
        }
    }
    // v_t is min(rows, n) x n = n x n after padding.
    let mut basis = DMatrix::zeros(n, cols.len());
    for (j, &i) in cols.iter().enumerate() {
        basis.column_mut(j).copy_from(&v_t.row(i).transpose());
    }
    basis
}

/// Least-squares multipliers: `argmin_y |c' y + g|`.
fn multipliers(c: &DMatrix<f64>, g: &DVector<f64>) -> DVector<f64> {
    if c.nrows() == 0 {
        return DVector::zeros(0);
    }
    let ct = c.transpose();
    let svd = ct.svd(true, true);
    svd.solve(&(-g), 1e-13).expect("svd solve")
}

fn independent_of(rows: &[DVector<f64>], row: &DVector<f64>) -> bool {
    if rows.is_empty() {
        return row.abs().max() > 0.0;
    }
    let n = row.len();
    let mut c = DMatrix::zeros(rows.len(), n);
    for (i, r) in rows.iter().enumerate() {
        c.row_mut(i).copy_from(&r.transpose());
    }
    let null = nullspace(&c, n);
    if null.ncols() == 0 {
        return false;
    }
    let proj = null.transpose() * row;
    proj.abs().max() > 1e-10 * (1.0 + row.abs().max())
}
