//! LinDistFlow on radial feeders, optionally with first-order line losses.

use super::{
    validated, DsoModelKind, ModelError, OperatingPoint, PolyhedralModel, RowSet, VarIndexMap,
    COUPLING_DIM,
};
use crate::grid::{GridCase, Interconnection, Line, TopologyKind, Violation};
use crate::opt::{solve_qp, QpStatus, QuadraticProgram, DEFAULT_TOL};

/// Linearized active loss of `line` about `(p0, q0, nu0)`, as coefficients on
/// `(P, Q)` plus a constant: `r (2 p0 P + 2 q0 Q - (p0² + q0²)) / nu0`.
pub fn line_loss_linearized(line: &Line, p0: f64, q0: f64, nu0: f64) -> (f64, f64, f64) {
    let k = line.r / nu0;
    (2.0 * k * p0, 2.0 * k * q0, -k * (p0 * p0 + q0 * q0))
}

pub fn build_lindistflow_model(case: &GridCase, link: &Interconnection) -> Result<PolyhedralModel, ModelError> {
    build(case, link, None)
}

pub fn build_loss_linearized_model(
    case: &GridCase,
    link: &Interconnection,
    op: &OperatingPoint,
) -> Result<PolyhedralModel, ModelError> {
    if op.p0.len() != case.lines.len() || op.q0.len() != case.lines.len() {
        return Err(ModelError::OperatingPoint(format!(
            "{} base flows for {} lines",
            op.p0.len().min(op.q0.len()),
            case.lines.len()
        )));
    }
    if op.nu0.len() != case.buses.len() {
        return Err(ModelError::OperatingPoint(format!(
            "{} base voltages for {} buses",
            op.nu0.len(),
            case.buses.len()
        )));
    }
    for (b, nu) in case.buses.iter().zip(&op.nu0) {
        if !(b.v2_min - 1e-9..=b.v2_max + 1e-9).contains(nu) {
            return Err(ModelError::OperatingPoint(format!("nu0 = {nu} outside bus {} band", b.id)));
        }
    }
    build(case, link, Some(op))
}

/// Base point for the loss linearization: the lossless model solved at unit
/// interface voltage with the exchange left free.
pub fn default_operating_point(case: &GridCase, link: &Interconnection) -> Result<OperatingPoint, ModelError> {
    let m = build_lindistflow_model(case, link)?;
    let mut qp = m.qp.clone();
    qp.push_eq(&[(m.coupling(0).start + 2, 1.0)], 1.0);
    let sol = solve_qp(&qp, DEFAULT_TOL)?;
    if sol.status != QpStatus::Optimal {
        return Err(ModelError::Solve { what: "default operating point".into(), status: sol.status });
    }
    Ok(OperatingPoint {
        p0: sol.x[m.vmap.flow_p.clone()].to_vec(),
        q0: sol.x[m.vmap.flow_q.clone()].to_vec(),
        nu0: sol.x[m.vmap.nu.clone()].to_vec(),
    })
}

/// Either radial model, with the loss model linearized about the default
/// operating point.
pub fn build_dso_model(
    case: &GridCase,
    link: &Interconnection,
    kind: DsoModelKind,
) -> Result<PolyhedralModel, ModelError> {
    match kind {
        DsoModelKind::LinDistFlow => build_lindistflow_model(case, link),
        DsoModelKind::LossLinearized => {
            let op = default_operating_point(case, link)?;
            build_loss_linearized_model(case, link, &op)
        }
    }
}

fn build(case: &GridCase, link: &Interconnection, op: Option<&OperatingPoint>) -> Result<PolyhedralModel, ModelError> {
    validated(case)?;
    if case.topology_kind != TopologyKind::Radial {
        return Err(ModelError::NotRadial);
    }
    let orient = case.radial_orientation().ok_or(ModelError::NotRadial)?;
    let root = case.bus_index(case.slack_bus().expect("validated")).expect("validated");
    if case.bus_index(link.dso_root_bus) != Some(root) {
        return Err(ModelError::Validation(vec![Violation::UnknownBus {
            element: format!("root of interconnection {}", link.dso_index),
            bus: link.dso_root_bus,
        }]));
    }
    let nb = case.buses.len();
    let nl = case.lines.len();
    let ng = case.gens.len();

    let mut vmap = VarIndexMap::default();
    vmap.gen_p = vmap.alloc(ng);
    vmap.gen_q = vmap.alloc(ng);
    vmap.nu = vmap.alloc(nb);
    vmap.flow_p = vmap.alloc(nl);
    vmap.flow_q = vmap.alloc(nl);
    let cpl = vmap.alloc(COUPLING_DIM);
    vmap.coupling.push(cpl.clone());
    let n = vmap.n;
    let (pg, qg, nu, fp, fq) = (
        vmap.gen_p.start,
        vmap.gen_q.start,
        vmap.nu.start,
        vmap.flow_p.start,
        vmap.flow_q.start,
    );

    // balance at bus l: inflow (P of the parent line, or the coupling at the
    // root) minus losses charged on that line = child flows + load - generation
    let mut bal_p: Vec<(Vec<(usize, f64)>, f64)> =
        case.buses.iter().map(|b| (Vec::new(), b.p_load)).collect();
    let mut bal_q: Vec<(Vec<(usize, f64)>, f64)> =
        case.buses.iter().map(|b| (Vec::new(), b.q_load)).collect();
    for (g, gen) in case.gens.iter().enumerate() {
        let k = case.bus_index(gen.bus).expect("validated");
        bal_p[k].0.push((pg + g, 1.0));
        bal_q[k].0.push((qg + g, 1.0));
    }
    bal_p[root].0.push((cpl.start, 1.0));
    bal_q[root].0.push((cpl.start + 1, 1.0));
    for (li, &(k, l)) in orient.iter().enumerate() {
        // sending end k loses P_kl, receiving end l gains P_kl - loss
        bal_p[k].0.push((fp + li, -1.0));
        bal_q[k].0.push((fq + li, -1.0));
        bal_p[l].0.push((fp + li, 1.0));
        bal_q[l].0.push((fq + li, 1.0));
        if let Some(op) = op {
            let (cp, cq, c0) = line_loss_linearized(&case.lines[li], op.p0[li], op.q0[li], op.nu0[k]);
            bal_p[l].0.push((fp + li, -cp));
            bal_p[l].0.push((fq + li, -cq));
            bal_p[l].1 += c0;
        }
    }

    let mut eq = RowSet::default();
    let mut ineq = RowSet::default();
    for (row, rhs) in bal_p.into_iter().chain(bal_q) {
        eq.push(row, rhs);
    }
    for (li, &(k, l)) in orient.iter().enumerate() {
        let line = &case.lines[li];
        eq.push(
            vec![(nu + l, 1.0), (nu + k, -1.0), (fp + li, 2.0 * line.r), (fq + li, 2.0 * line.x)],
            0.0,
        );
        if line.s_max > 0.0 {
            for j in [fp + li, fq + li] {
                ineq.push(vec![(j, 1.0)], line.s_max);
                ineq.push(vec![(j, -1.0)], line.s_max);
            }
        }
    }
    eq.push(vec![(nu + root, 1.0), (cpl.start + 2, -1.0)], 0.0);
    for (k, b) in case.buses.iter().enumerate() {
        ineq.push(vec![(nu + k, 1.0)], b.v2_max);
        ineq.push(vec![(nu + k, -1.0)], -b.v2_min);
    }
    for (g, gen) in case.gens.iter().enumerate() {
        ineq.push(vec![(pg + g, 1.0)], gen.p_max);
        ineq.push(vec![(pg + g, -1.0)], -gen.p_min);
        ineq.push(vec![(qg + g, 1.0)], gen.q_max);
        ineq.push(vec![(qg + g, -1.0)], -gen.q_min);
    }

    let mut qp = QuadraticProgram::new(n);
    let mut cost_constant = 0.0;
    for (g, gen) in case.gens.iter().enumerate() {
        qp.h[(pg + g, pg + g)] = 2.0 * gen.cost_a2;
        qp.g[pg + g] = gen.cost_a1;
        cost_constant += gen.cost_a0;
    }
    let (a_eq, b_eq) = eq.build(n);
    let (a_ineq, b_ineq) = ineq.build(n);
    qp.a_eq = a_eq;
    qp.b_eq = b_eq;
    qp.a_ineq = a_ineq;
    qp.b_ineq = b_ineq;
    Ok(PolyhedralModel { qp, cost_constant, vmap, operating_point: op.cloned() })
}
