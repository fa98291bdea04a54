//! Dense convex QP kernel: interior point solve, phase-1 feasibility, KKT certificates.
//!
//! Sign conventions: a solution is optimal when
//! `Hx + g + A_eq' λ + A_ineq' μ = 0`, `A_eq x = b_eq`, `A_ineq x <= b_ineq`,
//! `μ >= 0` and `μ' (b_ineq - A_ineq x) = 0`, all up to the requested tolerance.

mod ipm;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_TOL: f64 = 1e-8;
pub const MAX_ITER: usize = 200;

/// Lowest eigenvalue of `H` still accepted as positive semidefinite.
const PSD_TOL: f64 = -1e-9;
/// Ridge added to marginally indefinite or singular Hessians.
const HESSIAN_RIDGE: f64 = 1e-10;
/// Proximal weight that keeps the phase-1 optimum bounded.
const PHASE1_PROX: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("Hessian is not symmetric")]
    NotSymmetric,
    #[error("Hessian is not positive semidefinite (min eigenvalue {min_eig:e})")]
    NotConvex { min_eig: f64 },
    #[error("problem data contains non-finite values")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticProgram {
    pub h: DMatrix<f64>,
    pub g: DVector<f64>,
    pub a_ineq: DMatrix<f64>,
    pub b_ineq: DVector<f64>,
    pub a_eq: DMatrix<f64>,
    pub b_eq: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QpSolution {
    pub status: QpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub duals_eq: Vec<f64>,
    pub duals_ineq: Vec<f64>,
    pub iterations: usize,
}

impl QpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == QpStatus::Optimal
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Feasibility {
    pub feasible: bool,
    pub witness: Option<Vec<f64>>,
    /// Largest violation of a row normalized to unit infinity norm at the phase-1 optimum.
    pub violation: f64,
}

impl QuadraticProgram {
    /// Unconstrained zero objective in `n` variables.
    pub fn new(n: usize) -> Self {
        QuadraticProgram {
            h: DMatrix::zeros(n, n),
            g: DVector::zeros(n),
            a_ineq: DMatrix::zeros(0, n),
            b_ineq: DVector::zeros(0),
            a_eq: DMatrix::zeros(0, n),
            b_eq: DVector::zeros(0),
        }
    }

    pub fn n(&self) -> usize {
        self.g.len()
    }

    pub fn push_ineq(&mut self, coeffs: &[(usize, f64)], rhs: f64) {
        push_row(&mut self.a_ineq, &mut self.b_ineq, coeffs, rhs);
    }

    pub fn push_eq(&mut self, coeffs: &[(usize, f64)], rhs: f64) {
        push_row(&mut self.a_eq, &mut self.b_eq, coeffs, rhs);
    }

    /// Append many inequality rows at once (dense, `rows.ncols() == n`).
    pub fn extend_ineq(&mut self, rows: &DMatrix<f64>, rhs: &DVector<f64>) {
        self.a_ineq = stack(&self.a_ineq, rows);
        self.b_ineq = concat(&self.b_ineq, rhs);
    }

    pub fn extend_eq(&mut self, rows: &DMatrix<f64>, rhs: &DVector<f64>) {
        self.a_eq = stack(&self.a_eq, rows);
        self.b_eq = concat(&self.b_eq, rhs);
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        let x = DVector::from_column_slice(x);
        0.5 * x.dot(&(&self.h * &x)) + self.g.dot(&x)
    }

    /// Largest constraint violation of `x` (equalities in absolute value).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let x = DVector::from_column_slice(x);
        let ineq = (&self.a_ineq * &x - &self.b_ineq).iter().fold(0.0f64, |m, v| m.max(*v));
        let eq = (&self.a_eq * &x - &self.b_eq).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        ineq.max(eq)
    }

    fn check_dims(&self) -> Result<(), OptError> {
        let n = self.n();
        let err = |what: &str| Err(OptError::DimensionMismatch(what.to_string()));
        if self.h.nrows() != n || self.h.ncols() != n {
            return err("H must be n x n");
        }
        if self.a_ineq.ncols() != n || self.a_ineq.nrows() != self.b_ineq.len() {
            return err("A_ineq / b_ineq");
        }
        if self.a_eq.ncols() != n || self.a_eq.nrows() != self.b_eq.len() {
            return err("A_eq / b_eq");
        }
        let finite = self.h.iter().chain(self.g.iter()).chain(self.a_ineq.iter())
            .chain(self.b_ineq.iter()).chain(self.a_eq.iter()).chain(self.b_eq.iter())
            .all(|v| v.is_finite());
        if !finite {
            return Err(OptError::NonFinite);
        }
        Ok(())
    }
}

fn push_row(a: &mut DMatrix<f64>, b: &mut DVector<f64>, coeffs: &[(usize, f64)], rhs: f64) {
    let m = a.nrows();
    let n = a.ncols();
    let old = std::mem::replace(a, DMatrix::zeros(0, 0));
    *a = old.insert_row(m, 0.0);
    for &(j, v) in coeffs {
        debug_assert!(j < n, "column {j} out of range {n}");
        a[(m, j)] += v;
    }
    let old = std::mem::replace(b, DVector::zeros(0));
    *b = old.push(rhs);
}

pub(crate) fn stack(top: &DMatrix<f64>, bottom: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(top.ncols(), bottom.ncols());
    let mut out = DMatrix::zeros(top.nrows() + bottom.nrows(), top.ncols());
    out.view_mut((0, 0), top.shape()).copy_from(top);
    out.view_mut((top.nrows(), 0), bottom.shape()).copy_from(bottom);
    out
}

pub(crate) fn concat(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(a.len() + b.len(), a.iter().chain(b.iter()).copied())
}

/// Smallest eigenvalue of a symmetric matrix (diagonal fast path).
pub fn min_eigenvalue(h: &DMatrix<f64>) -> f64 {
    if h.nrows() == 0 {
        return 0.0;
    }
    let n = h.nrows();
    let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || h[(i, j)] == 0.0));
    if diagonal {
        return (0..n).map(|i| h[(i, i)]).fold(f64::INFINITY, f64::min);
    }
    SymmetricEigen::new(h.clone()).eigenvalues.min()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    pub stationarity: f64,
    pub primal_eq: f64,
    pub primal_ineq: f64,
    pub complementarity: f64,
    /// Most negative inequality dual (0 if none is negative).
    pub dual_sign: f64,
}

impl KktReport {
    pub fn worst(&self) -> f64 {
        self.stationarity
            .max(self.primal_eq)
            .max(self.primal_ineq)
            .max(self.complementarity)
            .max(self.dual_sign)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.worst() <= tol
    }
}

/// KKT residuals of a candidate primal-dual pair, computed directly from the
/// problem data (no solver internals).
pub fn kkt_certificate(qp: &QuadraticProgram, x: &[f64], duals_eq: &[f64], duals_ineq: &[f64]) -> KktReport {
    let x = DVector::from_column_slice(x);
    let lam = DVector::from_column_slice(duals_eq);
    let mu = DVector::from_column_slice(duals_ineq);
    let mut grad = &qp.h * &x + &qp.g;
    if qp.a_eq.nrows() > 0 {
        grad += qp.a_eq.tr_mul(&lam);
    }
    if qp.a_ineq.nrows() > 0 {
        grad += qp.a_ineq.tr_mul(&mu);
    }
    let slack = &qp.b_ineq - &qp.a_ineq * &x;
    KktReport {
        stationarity: grad.amax(),
        primal_eq: (&qp.a_eq * &x - &qp.b_eq).amax(),
        primal_ineq: slack.iter().fold(0.0f64, |m, s| m.max(-s)),
        complementarity: slack.iter().zip(mu.iter()).map(|(s, m)| (s * m).abs()).sum(),
        dual_sign: mu.iter().fold(0.0f64, |m, v| m.max(-v)),
    }
}

pub fn certificate_of(qp: &QuadraticProgram, sol: &QpSolution) -> KktReport {
    kkt_certificate(qp, &sol.x, &sol.duals_eq, &sol.duals_ineq)
}

/// Rows normalized to unit infinity norm; all-zero rows are split off and
/// reported as (index, rhs).
struct ScaledRows {
    a: DMatrix<f64>,
    b: DVector<f64>,
    kept: Vec<usize>,
    scale: Vec<f64>,
    zero_rows: Vec<(usize, f64)>,
}

fn scale_rows(a: &DMatrix<f64>, b: &DVector<f64>) -> ScaledRows {
    let mut kept = Vec::new();
    let mut scale = Vec::new();
    let mut zero_rows = Vec::new();
    for i in 0..a.nrows() {
        let norm = a.row(i).amax();
        if norm == 0.0 {
            zero_rows.push((i, b[i]));
        } else {
            kept.push(i);
            scale.push(norm);
        }
    }
    let mut sa = DMatrix::zeros(kept.len(), a.ncols());
    let mut sb = DVector::zeros(kept.len());
    for (k, (&i, &d)) in kept.iter().zip(&scale).enumerate() {
        sa.row_mut(k).copy_from(&(a.row(i) / d));
        sb[k] = b[i] / d;
    }
    ScaledRows { a: sa, b: sb, kept, scale, zero_rows }
}

pub fn solve_qp(qp: &QuadraticProgram, tol: f64) -> Result<QpSolution, OptError> {
    solve_qp_with(qp, tol, MAX_ITER)
}

pub fn solve_qp_with(qp: &QuadraticProgram, tol: f64, max_iter: usize) -> Result<QpSolution, OptError> {
    qp.check_dims()?;
    let n = qp.n();
    let asym = (&qp.h - qp.h.transpose()).amax();
    if asym > 1e-12 * qp.h.amax().max(1.0) {
        return Err(OptError::NotSymmetric);
    }
    let mut h = (&qp.h + qp.h.transpose()) * 0.5;
    let min_eig = min_eigenvalue(&h);
    if min_eig < PSD_TOL {
        return Err(OptError::NotConvex { min_eig });
    }
    if min_eig <= 0.0 {
        for i in 0..n {
            h[(i, i)] += HESSIAN_RIDGE;
        }
    }

    let ineq = scale_rows(&qp.a_ineq, &qp.b_ineq);
    let eq = scale_rows(&qp.a_eq, &qp.b_eq);
    let trivially_infeasible = ineq.zero_rows.iter().any(|&(_, b)| b < -tol)
        || eq.zero_rows.iter().any(|&(_, b)| b.abs() > tol);

    let unscale = |it: &ipm::Iterate| -> (Vec<f64>, Vec<f64>) {
        let mut de = vec![0.0; qp.a_eq.nrows()];
        for (k, (&i, &d)) in eq.kept.iter().zip(&eq.scale).enumerate() {
            de[i] = it.y[k] / d;
        }
        let mut di = vec![0.0; qp.a_ineq.nrows()];
        for (k, (&i, &d)) in ineq.kept.iter().zip(&ineq.scale).enumerate() {
            di[i] = it.z[k] / d;
        }
        (de, di)
    };

    let mut best_x = vec![0.0; n];
    let mut iterations = 0;
    if !trivially_infeasible {
        let problem = ipm::IpmProblem {
            h: &h,
            g: &qp.g,
            ai: &ineq.a,
            bi: &ineq.b,
            ae: &eq.a,
            be: &eq.b,
        };
        let accept = |it: &ipm::Iterate| {
            let (de, di) = unscale(it);
            kkt_certificate(qp, it.x.as_slice(), &de, &di).passes(tol)
        };
        let out = ipm::solve(&problem, tol, max_iter, &accept);
        iterations = out.iterations;
        let (de, di) = unscale(&out.iterate);
        if out.exit == ipm::Exit::Converged {
            let x: Vec<f64> = out.iterate.x.iter().copied().collect();
            return Ok(QpSolution {
                status: QpStatus::Optimal,
                objective: qp.objective(&x),
                x,
                duals_eq: de,
                duals_ineq: di,
                iterations,
            });
        }
        best_x = out.iterate.x.iter().copied().collect();
        // the IPM gave up; classify with independent auxiliary problems
        let feas = check_feasible_with(&qp.a_ineq, &qp.b_ineq, &qp.a_eq, &qp.b_eq, tol);
        if feas.feasible {
            if has_descent_ray(qp, tol) {
                return Ok(QpSolution {
                    status: QpStatus::Unbounded,
                    objective: f64::NEG_INFINITY,
                    x: best_x,
                    duals_eq: de,
                    duals_ineq: di,
                    iterations,
                });
            }
            return Ok(QpSolution {
                status: QpStatus::MaxIter,
                objective: qp.objective(&best_x),
                x: best_x,
                duals_eq: de,
                duals_ineq: di,
                iterations,
            });
        }
    }
    Ok(QpSolution {
        status: QpStatus::Infeasible,
        objective: f64::INFINITY,
        x: best_x,
        duals_eq: vec![0.0; qp.a_eq.nrows()],
        duals_ineq: vec![0.0; qp.a_ineq.nrows()],
        iterations,
    })
}

/// `min g'x` over the polyhedron; `H = 0`.
pub fn solve_lp(
    g: &DVector<f64>,
    a_ineq: &DMatrix<f64>,
    b_ineq: &DVector<f64>,
    a_eq: &DMatrix<f64>,
    b_eq: &DVector<f64>,
    tol: f64,
) -> Result<QpSolution, OptError> {
    let n = g.len();
    let qp = QuadraticProgram {
        h: DMatrix::zeros(n, n),
        g: g.clone(),
        a_ineq: a_ineq.clone(),
        b_ineq: b_ineq.clone(),
        a_eq: a_eq.clone(),
        b_eq: b_eq.clone(),
    };
    solve_qp(&qp, tol)
}

/// Phase-1 feasibility test: minimize the largest normalized violation `t`
/// (with a tiny proximal term on `x` so the optimum is attained).
pub fn check_feasible(
    a_ineq: &DMatrix<f64>,
    b_ineq: &DVector<f64>,
    a_eq: &DMatrix<f64>,
    b_eq: &DVector<f64>,
) -> Feasibility {
    check_feasible_with(a_ineq, b_ineq, a_eq, b_eq, DEFAULT_TOL)
}

pub fn check_feasible_with(
    a_ineq: &DMatrix<f64>,
    b_ineq: &DVector<f64>,
    a_eq: &DMatrix<f64>,
    b_eq: &DVector<f64>,
    tol: f64,
) -> Feasibility {
    let n = a_ineq.ncols().max(a_eq.ncols());
    let ineq = scale_rows(a_ineq, b_ineq);
    let eq = scale_rows(a_eq, b_eq);
    let zero_violation = ineq
        .zero_rows
        .iter()
        .map(|&(_, b)| (-b).max(0.0))
        .chain(eq.zero_rows.iter().map(|&(_, b)| b.abs()))
        .fold(0.0f64, f64::max);

    // variables [x; t]
    let mi = ineq.a.nrows();
    let me = eq.a.nrows();
    let rows = mi + 2 * me + 1;
    let mut a = DMatrix::zeros(rows, n + 1);
    let mut b = DVector::zeros(rows);
    for k in 0..mi {
        a.view_mut((k, 0), (1, n)).copy_from(&ineq.a.row(k));
        a[(k, n)] = -1.0;
        b[k] = ineq.b[k];
    }
    for k in 0..me {
        let r = mi + 2 * k;
        a.view_mut((r, 0), (1, n)).copy_from(&eq.a.row(k));
        a[(r, n)] = -1.0;
        b[r] = eq.b[k];
        a.view_mut((r + 1, 0), (1, n)).copy_from(&(-eq.a.row(k)));
        a[(r + 1, n)] = -1.0;
        b[r + 1] = -eq.b[k];
    }
    a[(rows - 1, n)] = -1.0;
    let mut h = DMatrix::zeros(n + 1, n + 1);
    for i in 0..n {
        h[(i, i)] = PHASE1_PROX;
    }
    h[(n, n)] = HESSIAN_RIDGE;
    let mut g = DVector::zeros(n + 1);
    g[n] = 1.0;
    let ae = DMatrix::zeros(0, n + 1);
    let be = DVector::zeros(0);
    let problem = ipm::IpmProblem { h: &h, g: &g, ai: &a, bi: &b, ae: &ae, be: &be };
    let out = ipm::solve(&problem, 0.1 * tol, MAX_ITER, &|_| true);
    let x: Vec<f64> = out.iterate.x.rows(0, n).iter().copied().collect();
    let xv = DVector::from_column_slice(&x);
    let vi = (&ineq.a * &xv - &ineq.b).iter().fold(0.0f64, |m, v| m.max(*v));
    let ve = (&eq.a * &xv - &eq.b).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let violation = vi.max(ve).max(zero_violation);
    let feasible = violation <= tol && x.iter().all(|v| v.is_finite());
    Feasibility { feasible, witness: feasible.then_some(x), violation }
}

/// Is there a direction d with A_ineq d <= 0, A_eq d = 0, H d = 0 and g'd < 0?
fn has_descent_ray(qp: &QuadraticProgram, tol: f64) -> bool {
    let n = qp.n();
    let eig = SymmetricEigen::new((&qp.h + qp.h.transpose()) * 0.5);
    let top = eig.eigenvalues.amax().max(1.0);
    let range: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i].abs() > 1e-9 * top).collect();
    let mut a_eq = DMatrix::zeros(qp.a_eq.nrows() + range.len(), n);
    a_eq.view_mut((0, 0), qp.a_eq.shape()).copy_from(&qp.a_eq);
    for (k, &i) in range.iter().enumerate() {
        a_eq.row_mut(qp.a_eq.nrows() + k).copy_from(&eig.eigenvectors.column(i).transpose());
    }
    let b_eq = DVector::zeros(a_eq.nrows());
    let mut a_in = DMatrix::zeros(qp.a_ineq.nrows() + 2 * n, n);
    a_in.view_mut((0, 0), qp.a_ineq.shape()).copy_from(&qp.a_ineq);
    let mut b_in = DVector::zeros(a_in.nrows());
    for j in 0..n {
        let r = qp.a_ineq.nrows() + 2 * j;
        a_in[(r, j)] = 1.0;
        a_in[(r + 1, j)] = -1.0;
        b_in[r] = 1.0;
        b_in[r + 1] = 1.0;
    }
    let ray = QuadraticProgram {
        h: DMatrix::zeros(n, n),
        g: qp.g.clone(),
        a_ineq: a_in,
        b_ineq: b_in,
        a_eq,
        b_eq,
    };
    let ineq = scale_rows(&ray.a_ineq, &ray.b_ineq);
    let eq = scale_rows(&ray.a_eq, &ray.b_eq);
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        h[(i, i)] = HESSIAN_RIDGE;
    }
    let problem = ipm::IpmProblem { h: &h, g: &ray.g, ai: &ineq.a, bi: &ineq.b, ae: &eq.a, be: &eq.b };
    let out = ipm::solve(&problem, 0.1 * tol, MAX_ITER, &|_| true);
    let value = ray.g.dot(&out.iterate.x);
    value < -tol * qp.g.amax().max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qp1(h: f64, g: f64) -> QuadraticProgram {
        let mut qp = QuadraticProgram::new(1);
        qp.h[(0, 0)] = h;
        qp.g[0] = g;
        qp
    }

    fn assert_certified(qp: &QuadraticProgram, sol: &QpSolution) {
        assert_eq!(sol.status, QpStatus::Optimal);
        let rep = certificate_of(qp, sol);
        assert!(rep.passes(DEFAULT_TOL), "{rep:?}");
    }

    #[test]
    fn bound_active_quadratic() {
        // min (x-1)^2 = x^2 - 2x + 1  s.t. x <= 0
        let mut qp = qp1(2.0, -2.0);
        qp.push_ineq(&[(0, 1.0)], 0.0);
        let sol = solve_qp(&qp, DEFAULT_TOL).unwrap();
        assert_certified(&qp, &sol);
        assert!(sol.x[0].abs() < 1e-8);
        assert!((sol.objective + 1.0 - 1.0).abs() < 1e-8); // constant 1 lives outside the QP
        assert!((sol.duals_ineq[0] - 2.0).abs() < 1e-7);
    }

    #[test]
    fn equality_split() {
        let mut qp = QuadraticProgram::new(2);
        qp.h[(0, 0)] = 2.0;
        qp.h[(1, 1)] = 2.0;
        qp.push_eq(&[(0, 1.0), (1, 1.0)], 1.0);
        let sol = solve_qp(&qp, DEFAULT_TOL).unwrap();
        assert_certified(&qp, &sol);
        assert!((sol.x[0] - 0.5).abs() < 1e-9 && (sol.x[1] - 0.5).abs() < 1e-9);
        assert!((sol.objective - 0.5).abs() < 1e-9);
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let mut qp = QuadraticProgram::new(1);
        qp.push_ineq(&[(0, 1.0)], -1.0);
        qp.push_ineq(&[(0, -1.0)], 0.0);
        let sol = solve_qp(&qp, DEFAULT_TOL).unwrap();
        assert_eq!(sol.status, QpStatus::Infeasible);
    }

    #[test]
    fn lp_examples() {
        let none = DMatrix::zeros(0, 1);
        let e = DVector::zeros(0);
        // max x s.t. x <= 3
        let sol = solve_lp(
            &DVector::from_vec(vec![-1.0]),
            &DMatrix::from_row_slice(1, 1, &[1.0]),
            &DVector::from_vec(vec![3.0]),
            &none,
            &e,
            DEFAULT_TOL,
        )
        .unwrap();
        assert_eq!(sol.status, QpStatus::Optimal);
        assert!((sol.x[0] - 3.0).abs() < 1e-7);
        // max x s.t. -x <= 0
        let sol = solve_lp(
            &DVector::from_vec(vec![-1.0]),
            &DMatrix::from_row_slice(1, 1, &[-1.0]),
            &DVector::from_vec(vec![0.0]),
            &none,
            &e,
            DEFAULT_TOL,
        )
        .unwrap();
        assert_eq!(sol.status, QpStatus::Unbounded);
        // max x + y over the unit square
        let a = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, -1.0]);
        let b = DVector::from_vec(vec![1.0, 1.0, 0.0, 0.0]);
        let sol = solve_lp(&DVector::from_vec(vec![-1.0, -1.0]), &a, &b, &DMatrix::zeros(0, 2), &e, DEFAULT_TOL)
            .unwrap();
        assert_eq!(sol.status, QpStatus::Optimal);
        assert!((sol.objective + 2.0).abs() < 1e-7);
    }

    #[test]
    fn feasibility_examples() {
        let e2 = DMatrix::zeros(0, 1);
        let e = DVector::zeros(0);
        let a = DMatrix::from_row_slice(2, 1, &[-1.0, 1.0]);
        let f = check_feasible(&a, &DVector::from_vec(vec![0.0, 1.0]), &e2, &e);
        assert!(f.feasible);
        let w = f.witness.unwrap()[0];
        assert!((-1e-8..=1.0 + 1e-8).contains(&w));
        let f = check_feasible(&a, &DVector::from_vec(vec![-1.0, 0.0]), &e2, &e);
        assert!(!f.feasible);
        assert!(f.witness.is_none());
    }

    #[test]
    fn cube_slab_is_feasible() {
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for j in 0..3 {
            let mut r = [0.0; 3];
            r[j] = 1.0;
            rows.extend_from_slice(&r);
            rhs.push(1.0);
            r[j] = -1.0;
            rows.extend_from_slice(&r);
            rhs.push(0.0);
        }
        let a = DMatrix::from_row_slice(6, 3, &rows);
        let b = DVector::from_vec(rhs);
        let ae = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]);
        let f = check_feasible(&a, &b, &ae, &DVector::from_vec(vec![1.5]));
        assert!(f.feasible);
        let w = f.witness.unwrap();
        assert!((w.iter().sum::<f64>() - 1.5).abs() < 1e-8);
        // vertex oracle: sums over cube vertices span [0, 3]; 3.5 is out of range
        let f = check_feasible(&a, &b, &ae, &DVector::from_vec(vec![3.5]));
        assert!(!f.feasible);
    }

    #[test]
    fn indefinite_hessian_rejected() {
        let mut qp = QuadraticProgram::new(2);
        qp.h = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(solve_qp(&qp, DEFAULT_TOL), Err(OptError::NotConvex { .. })));
    }

    #[test]
    fn unconstrained_and_equality_only() {
        let qp = qp1(4.0, -2.0);
        let sol = solve_qp(&qp, DEFAULT_TOL).unwrap();
        assert_certified(&qp, &sol);
        assert!((sol.x[0] - 0.5).abs() < 1e-8);
    }
}
