//! Halfspace polyhedra and exact projection by Fourier-Motzkin elimination.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::{DsoModelKind, PolyhedralModel};
use crate::opt::{check_feasible, check_feasible_with, solve_lp, QpStatus};

/// Coefficients below this (after row normalization) are set to zero.
const SNAP: f64 = 1e-11;
/// A row is redundant when its support value exceeds `b` by at most this.
const REDUNDANCY_TOL: f64 = 1e-9;
/// Normalized rows closer than this are treated as the same direction.
const DEDUP_TOL: f64 = 1e-12;
/// Tolerance for the redundancy LPs.
const LP_TOL: f64 = 1e-9;
/// Second attempt for redundancy LPs that stall at `LP_TOL`.
const LP_RETRY_TOL: f64 = 1e-7;
pub const DEFAULT_ROW_CAP: usize = 200_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProjectionError {
    #[error("elimination would create {rows} rows (cap {cap})")]
    RowExplosion { rows: usize, cap: usize },
    #[error("polyhedron is unbounded")]
    Unbounded,
    #[error("polyhedron is empty")]
    Empty,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProjectionOptions {
    pub row_cap: usize,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        ProjectionOptions { row_cap: DEFAULT_ROW_CAP }
    }
}

/// `{x : A x <= b}`. Equalities are stored as two opposite rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyhedron {
    pub dim: usize,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub labels: Vec<String>,
}

impl Polyhedron {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, labels: Vec<String>) -> Self {
        assert_eq!(a.nrows(), b.len());
        assert_eq!(a.ncols(), labels.len());
        Polyhedron { dim: a.ncols(), a, b, labels }
    }

    /// The whole space.
    pub fn universe(labels: Vec<String>) -> Self {
        let dim = labels.len();
        Polyhedron { dim, a: DMatrix::zeros(0, dim), b: DVector::zeros(0), labels }
    }

    /// The canonical empty set: the single row `0 <= -1`.
    pub fn empty(labels: Vec<String>) -> Self {
        let dim = labels.len();
        Polyhedron { dim, a: DMatrix::zeros(1, dim), b: DVector::from_element(1, -1.0), labels }
    }

    /// All constraints of a model over all of its variables.
    pub fn from_model(model: &PolyhedralModel) -> Self {
        let qp = &model.qp;
        let n = model.n();
        let mi = qp.a_ineq.nrows();
        let me = qp.a_eq.nrows();
        let mut a = DMatrix::zeros(mi + 2 * me, n);
        let mut b = DVector::zeros(mi + 2 * me);
        a.view_mut((0, 0), (mi, n)).copy_from(&qp.a_ineq);
        b.rows_mut(0, mi).copy_from(&qp.b_ineq);
        for k in 0..me {
            a.row_mut(mi + 2 * k).copy_from(&qp.a_eq.row(k));
            b[mi + 2 * k] = qp.b_eq[k];
            a.row_mut(mi + 2 * k + 1).copy_from(&(-qp.a_eq.row(k)));
            b[mi + 2 * k + 1] = -qp.b_eq[k];
        }
        Polyhedron::new(a, b, model.vmap.labels())
    }

    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn contains(&self, point: &[f64], slack: f64) -> bool {
        assert_eq!(point.len(), self.dim, "point dimension");
        (0..self.rows()).all(|i| {
            let lhs: f64 = self.a.row(i).iter().zip(point).map(|(a, x)| a * x).sum();
            lhs <= self.b[i] + slack
        })
    }

    pub fn is_empty(&self) -> bool {
        !self.feasibility().feasible
    }

    fn feasibility(&self) -> crate::opt::Feasibility {
        check_feasible(&self.a, &self.b, &DMatrix::zeros(0, self.dim), &DVector::zeros(0))
    }

    /// Center and radius of the largest inscribed ball (radius capped at 1e3);
    /// `None` if empty.
    pub fn chebyshev_center(&self) -> Option<(Vec<f64>, f64)> {
        let n = self.dim;
        let m = self.rows();
        let mut a = DMatrix::zeros(m + 2, n + 1);
        let mut b = DVector::zeros(m + 2);
        for i in 0..m {
            a.view_mut((i, 0), (1, n)).copy_from(&self.a.row(i));
            a[(i, n)] = self.a.row(i).norm();
            b[i] = self.b[i];
        }
        a[(m, n)] = 1.0;
        b[m] = 1e3;
        a[(m + 1, n)] = -1.0;
        let mut g = DVector::zeros(n + 1);
        g[n] = -1.0;
        let sol = solve_lp(&g, &a, &b, &DMatrix::zeros(0, n + 1), &DVector::zeros(0), 1e-9).ok()?;
        match sol.status {
            QpStatus::Optimal | QpStatus::MaxIter => {
                let x = sol.x[..n].to_vec();
                let r = sol.x[n].max(0.0);
                self.contains(&x, 1e-8).then_some((x, r))
            }
            _ => None,
        }
    }
}

/// Coefficients and right-hand side of one inequality.
type Row = (Vec<f64>, f64);
/// Sorted indices of the rows of the last reset system combined into a row.
type History = Vec<usize>;

fn cmp_rows(a: &Row, b: &Row) -> Ordering {
    for (x, y) in a.0.iter().zip(&b.0) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    a.1.total_cmp(&b.1)
}

/// Normalize to unit infinity norm with small coefficients snapped to zero.
/// All-zero rows come back unchanged.
fn normalize(mut row: Vec<f64>, mut rhs: f64) -> (Vec<f64>, f64) {
    let norm = row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if norm == 0.0 {
        return (row, rhs);
    }
    for v in &mut row {
        *v /= norm;
        if v.abs() < SNAP {
            *v = 0.0;
        }
    }
    rhs /= norm;
    (row, rhs)
}

/// Zero out cancellation residue of a combination of unit-norm rows whose
/// multipliers sum to `scale`.
fn snap(mut row: Vec<f64>, scale: f64) -> Vec<f64> {
    for v in &mut row {
        if v.abs() < SNAP * scale {
            *v = 0.0;
        }
    }
    row
}

fn to_rows(p: &Polyhedron) -> Vec<(Vec<f64>, f64)> {
    (0..p.rows()).map(|i| (p.a.row(i).iter().copied().collect(), p.b[i])).collect()
}

/// Normalized, deduplicated (tightest rhs per direction), trivially true rows
/// dropped, sorted. An infeasible zero row collapses everything to the
/// canonical empty set.
fn canonical(rows: Vec<(Vec<f64>, f64)>, labels: Vec<String>) -> Polyhedron {
    canonical_tracked(rows.into_iter().map(|r| (r, Vec::new())).collect(), labels).0
}

/// [`canonical`] carrying each row's elimination history along. A merged
/// direction keeps the history of the row whose bound survives.
fn canonical_tracked(rows: Vec<(Row, History)>, labels: Vec<String>) -> (Polyhedron, Vec<History>) {
    let dim = labels.len();
    let mut out: Vec<(Row, History)> = Vec::with_capacity(rows.len());
    for ((r, b), h) in rows {
        let (r, b) = normalize(r, b);
        if r.iter().all(|v| *v == 0.0) {
            if b < -REDUNDANCY_TOL {
                let empty = Polyhedron::empty(labels);
                let n = empty.rows();
                return (empty, vec![Vec::new(); n]);
            }
            continue;
        }
        out.push(((r, b), h));
    }
    out.sort_by(|x, y| cmp_rows(&x.0, &y.0));
    out.dedup_by(|later, kept| {
        let same = later.0 .0.iter().zip(&kept.0 .0).all(|(x, y)| (x - y).abs() <= DEDUP_TOL);
        if same {
            let tighter = later.0 .1 < kept.0 .1 || (later.0 .1 == kept.0 .1 && later.1.len() < kept.1.len());
            if tighter {
                kept.0 .1 = later.0 .1;
                kept.1 = std::mem::take(&mut later.1);
            }
        }
        same
    });
    let (rows, hist): (Vec<Row>, Vec<History>) = out.into_iter().unzip();
    (from_rows(rows, dim, labels), hist)
}

fn from_rows(rows: Vec<(Vec<f64>, f64)>, dim: usize, labels: Vec<String>) -> Polyhedron {
    let mut a = DMatrix::zeros(rows.len(), dim);
    let mut b = DVector::zeros(rows.len());
    for (i, (r, rhs)) in rows.into_iter().enumerate() {
        for (j, v) in r.into_iter().enumerate() {
            a[(i, j)] = v;
        }
        b[i] = rhs;
    }
    Polyhedron { dim, a, b, labels }
}

fn without(labels: &[String], col: usize) -> Vec<String> {
    labels.iter().enumerate().filter(|(j, _)| *j != col).map(|(_, l)| l.clone()).collect()
}

fn drop_col(row: &[f64], col: usize) -> Vec<f64> {
    row.iter().enumerate().filter(|(j, _)| *j != col).map(|(_, v)| *v).collect()
}

fn row_key(r: &[f64], b: f64, sign: f64) -> Vec<u64> {
    // adding 0.0 maps -0.0 to +0.0
    r.iter().chain(std::iter::once(&b)).map(|v| (sign * v + 0.0).to_bits()).collect()
}

/// Rows `r` whose negation `-r` is also present (an equality).
fn paired_rows(rows: &[(Vec<f64>, f64)]) -> Vec<bool> {
    let keys: std::collections::HashSet<Vec<u64>> =
        rows.iter().map(|(r, b)| row_key(r, *b, 1.0)).collect();
    rows.iter().map(|(r, b)| keys.contains(&row_key(r, *b, -1.0))).collect()
}

/// Index of an equality row with a positive coefficient on `col` (largest
/// first), usable to substitute `col` away.
fn equality_pivot(rows: &[(Vec<f64>, f64)], paired: &[bool], col: usize) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, (r, _)) in rows.iter().enumerate() {
        if paired[i] && r[col] > 0.0 && best.is_none_or(|(_, v)| r[col] > v) {
            best = Some((i, r[col]));
        }
    }
    best.map(|(i, _)| i)
}

/// Existentially quantify column `col` away (exact). Uses substitution when an
/// equality involving `col` is present, otherwise the full Fourier-Motzkin
/// cross-combination.
pub fn eliminate_variable(
    poly: &Polyhedron,
    col: usize,
    opts: &ProjectionOptions,
) -> Result<Polyhedron, ProjectionError> {
    eliminate(poly, col, opts).map(|(p, _)| p)
}

/// Returns the result and whether substitution was used.
fn eliminate(
    poly: &Polyhedron,
    col: usize,
    opts: &ProjectionOptions,
) -> Result<(Polyhedron, bool), ProjectionError> {
    if col >= poly.dim {
        return Err(ProjectionError::DimensionMismatch(format!("column {col} of {}", poly.dim)));
    }
    let labels = without(&poly.labels, col);
    let rows: Vec<(Vec<f64>, f64)> = to_rows(poly).into_iter().map(|(r, b)| normalize(r, b)).collect();

    if let Some(piv) = equality_pivot(&rows, &paired_rows(&rows), col) {
        let (pr, pb) = rows[piv].clone();
        let mut out = Vec::with_capacity(rows.len());
        for (r, b) in &rows {
            if r[col] == 0.0 {
                out.push((drop_col(r, col), *b));
                continue;
            }
            let f = r[col] / pr[col];
            let nr: Vec<f64> = r.iter().zip(&pr).map(|(x, y)| x - f * y).collect();
            out.push((drop_col(&snap(nr, 1.0 + f.abs()), col), b - f * pb));
        }
        return Ok((canonical(out, labels), true));
    }

    let (mut pos, mut neg, mut zero) = (Vec::new(), Vec::new(), Vec::new());
    for (r, b) in rows {
        match r[col].partial_cmp(&0.0) {
            Some(Ordering::Greater) => pos.push((r, b)),
            Some(Ordering::Less) => neg.push((r, b)),
            _ => zero.push((drop_col(&r, col), b)),
        }
    }
    let total = pos.len() * neg.len() + zero.len();
    if total > opts.row_cap {
        return Err(ProjectionError::RowExplosion { rows: total, cap: opts.row_cap });
    }
    let mut out = zero;
    for (p, pb) in &pos {
        for (q, qb) in &neg {
            let (fp, fq) = (-q[col], p[col]);
            let r: Vec<f64> = p.iter().zip(q).map(|(x, y)| fp * x + fq * y).collect();
            out.push((drop_col(&snap(r, fp + fq), col), fp * pb + fq * qb));
        }
    }
    Ok((canonical(out, labels), false))
}

/// Support value `max a'x` over `poly` with row `skip` replaced by
/// `a_skip'x <= b_skip + 1`. `None` when the LP did not certify an optimum.
fn support_excluding(a: &DMatrix<f64>, b: &DVector<f64>, keep: &[usize], skip: usize) -> Option<f64> {
    let n = a.ncols();
    let mut am = DMatrix::zeros(keep.len() + 1, n);
    let mut bm = DVector::zeros(keep.len() + 1);
    for (k, &i) in keep.iter().enumerate() {
        am.row_mut(k).copy_from(&a.row(i));
        bm[k] = b[i];
    }
    am.row_mut(keep.len()).copy_from(&a.row(skip));
    bm[keep.len()] = b[skip] + 1.0;
    let g = -a.row(skip).transpose();
    let (ae, be) = (DMatrix::zeros(0, n), DVector::zeros(0));
    for tol in [LP_TOL, LP_RETRY_TOL] {
        let sol = solve_lp(&g, &am, &bm, &ae, &be, tol).ok()?;
        if sol.status == QpStatus::Optimal {
            return Some(-sol.objective);
        }
    }
    None
}

/// Drop every row implied by the others.
pub fn remove_redundant(poly: &Polyhedron) -> Polyhedron {
    let canon = canonical(to_rows(poly), poly.labels.clone());
    if canon.rows() == 0 || canon.is_empty() {
        return if canon.rows() == 0 { canon } else { Polyhedron::empty(poly.labels.clone()) };
    }
    let keep = irredundant(&canon.a, &canon.b);
    let rows = (0..canon.rows())
        .filter(|&i| keep[i])
        .map(|i| (canon.a.row(i).iter().copied().collect::<Vec<f64>>(), canon.b[i]))
        .collect();
    from_rows(rows, canon.dim, canon.labels)
}

/// Mask of rows to keep. Rows certified non-redundant against the full system
/// are kept without further work (in parallel); the remaining candidates are
/// re-checked one by one against the current system.
fn irredundant(a: &DMatrix<f64>, b: &DVector<f64>) -> Vec<bool> {
    let m = a.nrows();
    let all: Vec<usize> = (0..m).collect();
    let needed: Vec<bool> = (0..m)
        .into_par_iter()
        .map(|r| {
            let others: Vec<usize> = all.iter().copied().filter(|&i| i != r).collect();
            match support_excluding(a, b, &others, r) {
                Some(v) => v > b[r] + REDUNDANCY_TOL,
                None => true,
            }
        })
        .collect();
    let mut keep = vec![true; m];
    for r in 0..m {
        if needed[r] {
            continue;
        }
        let others: Vec<usize> = (0..m).filter(|&i| i != r && keep[i]).collect();
        if let Some(v) = support_excluding(a, b, &others, r) {
            if v <= b[r] + REDUNDANCY_TOL {
                keep[r] = false;
            }
        }
    }
    keep
}

/// One Fourier-Motzkin step that tracks row histories. After `step`
/// consecutive eliminations a row combining more than `step + 1` rows of the
/// reset system is implied by the others (Chernikov's rule) and is dropped.
fn eliminate_tracked(
    poly: &Polyhedron,
    hist: &[History],
    col: usize,
    step: usize,
    opts: &ProjectionOptions,
) -> Result<(Polyhedron, Vec<History>), ProjectionError> {
    let labels = without(&poly.labels, col);
    let (mut pos, mut neg, mut out) = (Vec::new(), Vec::new(), Vec::new());
    for ((r, b), h) in to_rows(poly).into_iter().map(|(r, b)| normalize(r, b)).zip(hist) {
        match r[col].partial_cmp(&0.0) {
            Some(Ordering::Greater) => pos.push((r, b, h)),
            Some(Ordering::Less) => neg.push((r, b, h)),
            _ => out.push(((drop_col(&r, col), b), h.clone())),
        }
    }
    let total = pos.len() * neg.len() + out.len();
    if total > opts.row_cap {
        return Err(ProjectionError::RowExplosion { rows: total, cap: opts.row_cap });
    }
    for (p, pb, ph) in &pos {
        for (q, qb, qh) in &neg {
            let h = merge_sorted(ph, qh);
            if h.len() > step + 1 {
                continue;
            }
            let (fp, fq) = (-q[col], p[col]);
            let r: Vec<f64> = p.iter().zip(q).map(|(x, y)| fp * x + fq * y).collect();
            out.push(((drop_col(&snap(r, fp + fq), col), fp * pb + fq * qb), h));
        }
    }
    Ok(canonical_tracked(out, labels))
}

fn merge_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    out.extend_from_slice(a);
    out.extend_from_slice(b);
    out.sort_unstable();
    out.dedup();
    out
}

fn fresh_history(rows: usize) -> Vec<History> {
    (0..rows).map(|i| vec![i]).collect()
}

/// Column to eliminate next: equality-substitutable columns first, then fewest
/// nonzero coefficients, then lowest index.
fn next_column(poly: &Polyhedron, candidates: &[usize]) -> usize {
    let rows: Vec<(Vec<f64>, f64)> = to_rows(poly);
    let paired = paired_rows(&rows);
    let key = |c: usize| {
        let subst = equality_pivot(&rows, &paired, c).is_some();
        let nnz = rows.iter().filter(|(r, _)| r[c] != 0.0).count();
        (!subst, nnz, c)
    };
    *candidates.iter().min_by_key(|&&c| key(c)).expect("nonempty")
}

/// Projection onto the columns in `keep`, returned in that column order.
pub fn project_onto(
    poly: &Polyhedron,
    keep: &[usize],
    opts: &ProjectionOptions,
) -> Result<Polyhedron, ProjectionError> {
    if let Some(&c) = keep.iter().find(|&&c| c >= poly.dim) {
        return Err(ProjectionError::DimensionMismatch(format!("column {c} of {}", poly.dim)));
    }
    // track original column ids through the eliminations
    let mut ids: Vec<usize> = (0..poly.dim).collect();
    let mut cur = canonical(to_rows(poly), poly.labels.clone());
    let mut hist = fresh_history(cur.rows());
    let mut fm_steps = 0;
    let mut pending_redundancy = true;
    loop {
        let cands: Vec<usize> = (0..ids.len()).filter(|&j| !keep.contains(&ids[j])).collect();
        if cands.is_empty() {
            break;
        }
        let col = next_column(&cur, &cands);
        let rows = to_rows(&cur);
        if equality_pivot(&rows, &paired_rows(&rows), col).is_some() {
            cur = eliminate(&cur, col, opts)?.0;
            hist = fresh_history(cur.rows());
            fm_steps = 0;
            pending_redundancy = true;
        } else {
            fm_steps += 1;
            let (next, next_hist) = eliminate_tracked(&cur, &hist, col, fm_steps, opts)?;
            let mask = if next.rows() == 0 || next.is_empty() {
                vec![true; next.rows()]
            } else {
                irredundant(&next.a, &next.b)
            };
            let rows: Vec<Row> = to_rows(&next).into_iter().zip(&mask).filter(|(_, k)| **k).map(|(r, _)| r).collect();
            hist = next_hist.into_iter().zip(&mask).filter(|(_, k)| **k).map(|(h, _)| h).collect();
            cur = from_rows(rows, next.dim, next.labels);
            pending_redundancy = false;
        }
        ids.remove(col);
        log::debug!("eliminated column, {} left, {} rows", ids.len(), cur.rows());
    }
    if pending_redundancy {
        cur = remove_redundant(&cur);
    }
    // permute to the requested order
    let perm: Vec<usize> = keep.iter().map(|k| ids.iter().position(|i| i == k).expect("kept")).collect();
    let rows = to_rows(&cur)
        .into_iter()
        .map(|(r, b)| (perm.iter().map(|&j| r[j]).collect(), b))
        .collect();
    let labels = keep.iter().map(|&k| poly.labels[k].clone()).collect();
    let mut out: Vec<(Vec<f64>, f64)> = rows;
    if cur.rows() == 1 && cur.a.row(0).iter().all(|v| *v == 0.0) {
        return Ok(Polyhedron::empty(labels));
    }
    out.sort_by(cmp_rows);
    Ok(from_rows(out, keep.len(), labels))
}

/// Substitute `x_col = value` and drop the column.
pub fn slice_fix(poly: &Polyhedron, col: usize, value: f64) -> Polyhedron {
    assert!(col < poly.dim, "slice column out of range");
    let rows = to_rows(poly)
        .into_iter()
        .map(|(r, b)| {
            let b = b - r[col] * value;
            (drop_col(&r, col), b)
        })
        .collect();
    canonical(rows, without(&poly.labels, col))
}

/// Full model vector with the coupling triple of slot 0 fixed to `z`, or
/// `None` when no such point exists.
pub fn lift_point(model: &PolyhedralModel, z: &[f64]) -> Option<Vec<f64>> {
    let qp = model.with_coupling_fixed(0, z);
    check_feasible_with(&qp.a_ineq, &qp.b_ineq, &qp.a_eq, &qp.b_eq, crate::opt::DEFAULT_TOL).witness
}

/// Feasible operating region of coupling slot `slot`: the exact projection of
/// the model's constraint set onto that triple.
pub fn coupling_region(
    model: &PolyhedralModel,
    slot: usize,
    opts: &ProjectionOptions,
) -> Result<Polyhedron, ProjectionError> {
    let keep: Vec<usize> = model
        .vmap
        .coupling_slot(slot)
        .ok_or_else(|| ProjectionError::DimensionMismatch(format!("no coupling slot {slot}")))?
        .collect();
    project_onto(&Polyhedron::from_model(model), &keep, opts)
}

/// Counterclockwise vertices of a bounded, nonempty polygon.
pub fn vertices_2d(poly: &Polyhedron) -> Result<Vec<[f64; 2]>, ProjectionError> {
    if poly.dim != 2 {
        return Err(ProjectionError::DimensionMismatch(format!("dimension {}", poly.dim)));
    }
    if poly.is_empty() {
        return Err(ProjectionError::Empty);
    }
    let none = DMatrix::zeros(0, 2);
    let e = DVector::zeros(0);
    for dir in [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]] {
        let g = DVector::from_row_slice(&dir);
        let sol = solve_lp(&g, &poly.a, &poly.b, &none, &e, 1e-9).map_err(|_| ProjectionError::Unbounded)?;
        if sol.status == QpStatus::Unbounded {
            return Err(ProjectionError::Unbounded);
        }
    }
    let m = poly.rows();
    let mut pts: Vec<[f64; 2]> = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            let (a1, b1, c1) = (poly.a[(i, 0)], poly.a[(i, 1)], poly.b[i]);
            let (a2, b2, c2) = (poly.a[(j, 0)], poly.a[(j, 1)], poly.b[j]);
            let det = a1 * b2 - a2 * b1;
            if det.abs() < 1e-12 {
                continue;
            }
            let p = [(c1 * b2 - c2 * b1) / det, (a1 * c2 - a2 * c1) / det];
            if poly.contains(&p, 1e-9)
                && !pts.iter().any(|q| (q[0] - p[0]).abs() < 1e-9 && (q[1] - p[1]).abs() < 1e-9)
            {
                pts.push(p);
            }
        }
    }
    if pts.is_empty() {
        return Err(ProjectionError::Empty);
    }
    let cx = pts.iter().map(|p| p[0]).sum::<f64>() / pts.len() as f64;
    let cy = pts.iter().map(|p| p[1]).sum::<f64>() / pts.len() as f64;
    pts.sort_by(|p, q| {
        let ap = (p[1] - cy).atan2(p[0] - cx);
        let aq = (q[1] - cy).atan2(q[0] - cx);
        ap.total_cmp(&aq)
    });
    // start from the lowest-leftmost vertex for a stable listing
    let start = (0..pts.len())
        .min_by(|&i, &j| pts[i][1].total_cmp(&pts[j][1]).then(pts[i][0].total_cmp(&pts[j][0])))
        .expect("nonempty");
    pts.rotate_left(start);
    Ok(pts)
}

/// Shoelace area of a vertex loop.
pub fn polygon_area(v: &[[f64; 2]]) -> f64 {
    let n = v.len();
    0.5 * (0..n).map(|i| {
        let (p, q) = (v[i], v[(i + 1) % n]);
        p[0] * q[1] - q[0] * p[1]
    }).sum::<f64>()
}

/// Metadata written next to a FOR polygon CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForSidecar {
    pub dso_index: usize,
    pub nu_value: f64,
    pub model_kind: DsoModelKind,
}

pub fn for_polygon_csv(vertices: &[[f64; 2]]) -> String {
    let mut s = String::from("p_if,q_if\n");
    for v in vertices {
        s.push_str(&format!("{},{}\n", v[0], v[1]));
    }
    s
}
