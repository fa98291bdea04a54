//! Convex grid models as polyhedral constraint sets with quadratic generation cost.
//!
//! Every model exposes its coupling variables as ordered triples
//! `(p_if, q_if, nu_if)`: active and reactive import of the DSO (positive when
//! power flows from the TSO into the feeder) and the squared voltage magnitude
//! at the interface bus.

mod centralized;
mod dc;
mod radial;

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{GridCase, Violation};
use crate::opt::{QpStatus, QuadraticProgram};
use crate::value_function::QuadraticValueFn;

pub use centralized::{build_centralized_problem, CentralizedProblem};
pub(crate) use centralized::assemble;
pub use dc::build_dc_model;
pub use radial::{
    build_dso_model, build_lindistflow_model, build_loss_linearized_model,
    default_operating_point, line_loss_linearized,
};

/// Width of one coupling triple.
pub const COUPLING_DIM: usize = 3;
pub const COUPLING_LABELS: [&str; COUPLING_DIM] = ["p_if", "q_if", "nu_if"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid case: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Validation(Vec<Violation>),
    #[error("case is not radial")]
    NotRadial,
    #[error("operating point does not match the case: {0}")]
    OperatingPoint(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("solve for {what} ended with status {status:?}")]
    Solve { what: String, status: QpStatus },
    #[error(transparent)]
    Opt(#[from] crate::opt::OptError),
}

/// Physics used for a distribution feeder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DsoModelKind {
    #[serde(rename = "lindistflow")]
    LinDistFlow,
    LossLinearized,
}

impl DsoModelKind {
    pub fn short_name(self) -> &'static str {
        match self {
            DsoModelKind::LinDistFlow => "ldf",
            DsoModelKind::LossLinearized => "ll",
        }
    }
}

/// Column ranges of the named variable groups. Empty ranges mean the group is
/// absent from the model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct VarIndexMap {
    pub gen_p: Range<usize>,
    pub gen_q: Range<usize>,
    pub theta: Range<usize>,
    pub nu: Range<usize>,
    pub flow_p: Range<usize>,
    pub flow_q: Range<usize>,
    /// One `(p_if, q_if, nu_if)` triple per interconnection.
    pub coupling: Vec<Range<usize>>,
    pub n: usize,
}

impl VarIndexMap {
    pub(crate) fn alloc(&mut self, len: usize) -> Range<usize> {
        let r = self.n..self.n + len;
        self.n += len;
        r
    }

    pub fn coupling_slot(&self, slot: usize) -> Option<Range<usize>> {
        self.coupling.get(slot).cloned()
    }

    /// The same map with every range moved by `offset` columns.
    pub fn shifted(&self, offset: usize) -> VarIndexMap {
        let s = |r: &Range<usize>| r.start + offset..r.end + offset;
        VarIndexMap {
            gen_p: s(&self.gen_p),
            gen_q: s(&self.gen_q),
            theta: s(&self.theta),
            nu: s(&self.nu),
            flow_p: s(&self.flow_p),
            flow_q: s(&self.flow_q),
            coupling: self.coupling.iter().map(s).collect(),
            n: self.n + offset,
        }
    }

    /// Human-readable column names.
    pub fn labels(&self) -> Vec<String> {
        let mut out = vec![String::new(); self.n];
        let mut name = |r: &Range<usize>, prefix: &str| {
            for (k, j) in r.clone().enumerate() {
                out[j] = format!("{prefix}[{k}]");
            }
        };
        name(&self.gen_p, "gen_p");
        name(&self.gen_q, "gen_q");
        name(&self.theta, "theta");
        name(&self.nu, "nu");
        name(&self.flow_p, "flow_p");
        name(&self.flow_q, "flow_q");
        for (s, r) in self.coupling.iter().enumerate() {
            for (k, j) in r.clone().enumerate() {
                out[j] = format!("{}[{s}]", COUPLING_LABELS[k]);
            }
        }
        out
    }
}

/// Base point of the loss linearization, indexed like `GridCase::lines` and
/// `GridCase::buses`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub p0: Vec<f64>,
    pub q0: Vec<f64>,
    pub nu0: Vec<f64>,
}

impl OperatingPoint {
    /// Zero flows at flat voltage: the loss term vanishes.
    pub fn flat(case: &GridCase) -> Self {
        OperatingPoint {
            p0: vec![0.0; case.lines.len()],
            q0: vec![0.0; case.lines.len()],
            nu0: vec![1.0; case.buses.len()],
        }
    }
}

/// A constraint set with quadratic cost: `min ½x'Hx + g'x + cost_constant`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyhedralModel {
    pub qp: QuadraticProgram,
    pub cost_constant: f64,
    pub vmap: VarIndexMap,
    pub operating_point: Option<OperatingPoint>,
}

impl PolyhedralModel {
    pub fn n(&self) -> usize {
        self.vmap.n
    }

    /// Model cost of a full variable vector.
    pub fn cost(&self, x: &[f64]) -> f64 {
        self.qp.objective(x) + self.cost_constant
    }

    pub fn coupling(&self, slot: usize) -> Range<usize> {
        self.vmap.coupling[slot].clone()
    }

    pub fn coupling_value(&self, x: &[f64], slot: usize) -> [f64; COUPLING_DIM] {
        let r = self.coupling(slot);
        [x[r.start], x[r.start + 1], x[r.start + 2]]
    }

    /// The model's QP with the coupling triple of `slot` pinned to `z`.
    pub fn with_coupling_fixed(&self, slot: usize, z: &[f64]) -> QuadraticProgram {
        let mut qp = self.qp.clone();
        let r = self.coupling(slot);
        for (k, j) in r.enumerate() {
            qp.push_eq(&[(j, 1.0)], z[k]);
        }
        qp
    }
}

/// Collects sparse rows and materializes them once.
#[derive(Default)]
pub(crate) struct RowSet {
    rows: Vec<(Vec<(usize, f64)>, f64)>,
}

impl RowSet {
    pub fn push(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) {
        self.rows.push((coeffs, rhs));
    }

    pub fn build(self, n: usize) -> (DMatrix<f64>, DVector<f64>) {
        let mut a = DMatrix::zeros(self.rows.len(), n);
        let mut b = DVector::zeros(self.rows.len());
        for (i, (coeffs, rhs)) in self.rows.into_iter().enumerate() {
            for (j, v) in coeffs {
                a[(i, j)] += v;
            }
            b[i] = rhs;
        }
        (a, b)
    }
}

pub(crate) fn validated(case: &GridCase) -> Result<(), ModelError> {
    let v = crate::grid::validate(case);
    if v.is_empty() {
        Ok(())
    } else {
        Err(ModelError::Validation(v))
    }
}

/// Add `½ z'Qz + c'z + d` on the coupling triple `slot` to the model's cost.
pub fn attach_quadratic_cost(
    model: &PolyhedralModel,
    extra: &QuadraticValueFn,
    slot: usize,
) -> Result<PolyhedralModel, ModelError> {
    let r = model
        .vmap
        .coupling_slot(slot)
        .ok_or_else(|| ModelError::DimensionMismatch(format!("no coupling slot {slot}")))?;
    let mut out = model.clone();
    for (a, i) in r.clone().enumerate() {
        for (b, j) in r.clone().enumerate() {
            out.qp.h[(i, j)] += extra.q[a][b];
        }
        out.qp.g[i] += extra.c[a];
    }
    out.cost_constant += extra.d;
    Ok(out)
}
