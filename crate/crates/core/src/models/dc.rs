//! Lossless DC power flow for the transmission grid.

use super::{validated, ModelError, PolyhedralModel, RowSet, VarIndexMap, COUPLING_DIM};
use crate::grid::{GridCase, Interconnection, Violation};
use crate::opt::QuadraticProgram;

/// Voltage magnitude the DC model assumes at every interface (p.u.²).
pub const TSO_INTERFACE_NU: f64 = 1.0;

/// Variables: generator active power, bus angles, then one coupling triple per
/// entry of `couplings`. The DSO import `p_if` is a load at `tso_bus`; `q_if`
/// is boxed by the interface rating and `nu_if` is pinned to
/// [`TSO_INTERFACE_NU`].
pub fn build_dc_model(case: &GridCase, couplings: &[Interconnection]) -> Result<PolyhedralModel, ModelError> {
    validated(case)?;
    let nb = case.buses.len();
    let mut vmap = VarIndexMap::default();
    vmap.gen_p = vmap.alloc(case.gens.len());
    vmap.theta = vmap.alloc(nb);
    let mut at_bus = Vec::with_capacity(couplings.len());
    for link in couplings {
        let k = case.bus_index(link.tso_bus).ok_or_else(|| {
            ModelError::Validation(vec![Violation::UnknownBus {
                element: format!("interconnection {}", link.dso_index),
                bus: link.tso_bus,
            }])
        })?;
        at_bus.push(k);
        let r = vmap.alloc(COUPLING_DIM);
        vmap.coupling.push(r);
    }
    let n = vmap.n;
    let theta = |k: usize| vmap.theta.start + k;

    let mut eq = RowSet::default();
    let mut ineq = RowSet::default();

    // nodal balance: generation - net outflow - DSO import = load
    let mut balance: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nb];
    for (g, gen) in case.gens.iter().enumerate() {
        let k = case.bus_index(gen.bus).expect("validated");
        balance[k].push((vmap.gen_p.start + g, 1.0));
    }
    for line in &case.lines {
        let a = case.bus_index(line.from).expect("validated");
        let b = case.bus_index(line.to).expect("validated");
        let y = 1.0 / line.x;
        // flow a -> b = y (theta_a - theta_b)
        balance[a].push((theta(a), -y));
        balance[a].push((theta(b), y));
        balance[b].push((theta(a), y));
        balance[b].push((theta(b), -y));
        if line.s_max > 0.0 {
            ineq.push(vec![(theta(a), y), (theta(b), -y)], line.s_max);
            ineq.push(vec![(theta(a), -y), (theta(b), y)], line.s_max);
        }
    }
    for (slot, &k) in at_bus.iter().enumerate() {
        balance[k].push((vmap.coupling[slot].start, -1.0));
    }
    for (k, row) in balance.into_iter().enumerate() {
        eq.push(row, case.buses[k].p_load);
    }
    let slack = case.bus_index(case.slack_bus().expect("validated")).expect("validated");
    eq.push(vec![(theta(slack), 1.0)], 0.0);

    for (g, gen) in case.gens.iter().enumerate() {
        let j = vmap.gen_p.start + g;
        ineq.push(vec![(j, 1.0)], gen.p_max);
        ineq.push(vec![(j, -1.0)], -gen.p_min);
    }
    for (slot, link) in couplings.iter().enumerate() {
        let r = vmap.coupling[slot].clone();
        ineq.push(vec![(r.start + 1, 1.0)], link.s_max);
        ineq.push(vec![(r.start + 1, -1.0)], link.s_max);
        eq.push(vec![(r.start + 2, 1.0)], TSO_INTERFACE_NU);
    }

    let mut qp = QuadraticProgram::new(n);
    let mut cost_constant = 0.0;
    for (g, gen) in case.gens.iter().enumerate() {
        let j = vmap.gen_p.start + g;
        qp.h[(j, j)] = 2.0 * gen.cost_a2;
        qp.g[j] = gen.cost_a1;
        cost_constant += gen.cost_a0;
    }
    let (a_eq, b_eq) = eq.build(n);
    let (a_ineq, b_ineq) = ineq.build(n);
    qp.a_eq = a_eq;
    qp.b_eq = b_eq;
    qp.a_ineq = a_ineq;
    qp.b_ineq = b_ineq;
    Ok(PolyhedralModel { qp, cost_constant, vmap, operating_point: None })
}
