//! The joint TSO + DSO problem: the reference every coordination scheme is
//! measured against.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{build_dc_model, build_dso_model, DsoModelKind, ModelError, PolyhedralModel};
use crate::grid::Partition;
use crate::opt::QuadraticProgram;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralizedProblem {
    pub qp: QuadraticProgram,
    pub cost_constant: f64,
    /// TSO model first, then one model per DSO in partition order.
    pub models: Vec<PolyhedralModel>,
    /// First column of each model inside `qp`.
    pub offsets: Vec<usize>,
}

impl CentralizedProblem {
    pub fn cost(&self, x: &[f64]) -> f64 {
        self.qp.objective(x) + self.cost_constant
    }

    /// The variables of model `k` (0 = TSO) in a joint solution vector.
    pub fn block<'a>(&self, x: &'a [f64], k: usize) -> &'a [f64] {
        &x[self.offsets[k]..self.offsets[k] + self.models[k].n()]
    }
}

/// Stack the TSO DC model and one radial model per DSO (kind per DSO) and tie
/// each interconnection's two coupling triples together.
pub fn build_centralized_problem(
    part: &Partition,
    kinds: &[DsoModelKind],
) -> Result<CentralizedProblem, ModelError> {
    if kinds.len() != part.dsos.len() || part.links.len() != part.dsos.len() {
        return Err(ModelError::DimensionMismatch(format!(
            "{} DSOs, {} links, {} model kinds",
            part.dsos.len(),
            part.links.len(),
            kinds.len()
        )));
    }
    let tso = build_dc_model(&part.tso, &part.links)?;
    let mut models = vec![tso];
    for ((case, link), &kind) in part.dsos.iter().zip(&part.links).zip(kinds) {
        models.push(build_dso_model(case, link, kind)?);
    }
    Ok(assemble(models))
}

/// Block-diagonal stacking plus coupling equalities; model 0 is the TSO with
/// one coupling slot per DSO model.
pub(crate) fn assemble(models: Vec<PolyhedralModel>) -> CentralizedProblem {
    let mut offsets = Vec::with_capacity(models.len());
    let mut n = 0;
    for m in &models {
        offsets.push(n);
        n += m.n();
    }
    let n_dso = models.len() - 1;
    let mi: usize = models.iter().map(|m| m.qp.a_ineq.nrows()).sum();
    let me: usize = models.iter().map(|m| m.qp.a_eq.nrows()).sum::<usize>() + 3 * n_dso;

    let mut qp = QuadraticProgram {
        h: DMatrix::zeros(n, n),
        g: DVector::zeros(n),
        a_ineq: DMatrix::zeros(mi, n),
        b_ineq: DVector::zeros(mi),
        a_eq: DMatrix::zeros(me, n),
        b_eq: DVector::zeros(me),
    };
    let mut cost_constant = 0.0;
    let (mut ri, mut re) = (0, 0);
    for (m, &o) in models.iter().zip(&offsets) {
        let k = m.n();
        qp.h.view_mut((o, o), (k, k)).copy_from(&m.qp.h);
        qp.g.rows_mut(o, k).copy_from(&m.qp.g);
        let r = m.qp.a_ineq.nrows();
        qp.a_ineq.view_mut((ri, o), (r, k)).copy_from(&m.qp.a_ineq);
        qp.b_ineq.rows_mut(ri, r).copy_from(&m.qp.b_ineq);
        ri += r;
        let r = m.qp.a_eq.nrows();
        qp.a_eq.view_mut((re, o), (r, k)).copy_from(&m.qp.a_eq);
        qp.b_eq.rows_mut(re, r).copy_from(&m.qp.b_eq);
        re += r;
        cost_constant += m.cost_constant;
    }
    for d in 0..n_dso {
        let t = models[0].coupling(d);
        let s = models[d + 1].coupling(0);
        for k in 0..3 {
            qp.a_eq[(re, offsets[0] + t.start + k)] = 1.0;
            qp.a_eq[(re, offsets[d + 1] + s.start + k)] = -1.0;
            re += 1;
        }
    }
    CentralizedProblem { qp, cost_constant, models, offsets }
}
