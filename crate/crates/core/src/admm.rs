//! Consensus ADMM on the interface triples.
//!
//! The TSO and every DSO keep their own copy of each interface triple; per
//! iteration both sides solve their local augmented problem, the TSO averages
//! the copies into the consensus value and both multipliers move by the copy
//! mismatch. Residuals use the infinity norm.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::Partition;
use crate::messaging::{dso_agent, CommError, CommLog, MessageKind, SETPOINT_FLOATS, TSO_AGENT};
use crate::models::{
    assemble, build_dc_model, build_dso_model, DsoModelKind, ModelError, PolyhedralModel,
    COUPLING_DIM,
};
use crate::opt::{certificate_of, kkt_certificate, solve_qp, KktReport, OptError, QpSolution, QpStatus};

pub const DEFAULT_RHO: f64 = 100.0;
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 2000;

type Triple = [f64; COUPLING_DIM];

#[derive(Debug, Error)]
pub enum AdmmError {
    #[error("{what}: {source}")]
    Model { what: String, source: ModelError },
    #[error("{stage}, iteration {iteration}: {source}")]
    Opt { stage: String, iteration: usize, source: OptError },
    #[error("{stage}, iteration {iteration}: solve ended with status {status:?}")]
    Solve { stage: String, iteration: usize, status: QpStatus },
    #[error(transparent)]
    Comm(#[from] CommError),
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmmConfig {
    pub model: DsoModelKind,
    pub rho: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Tolerance of the local QP solves.
    pub qp_tol: f64,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        AdmmConfig {
            model: DsoModelKind::LossLinearized,
            rho: DEFAULT_RHO,
            tol: DEFAULT_RESIDUAL_TOL,
            max_iter: DEFAULT_MAX_ITER,
            qp_tol: crate::opt::DEFAULT_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmmState {
    pub z: Vec<Triple>,
    pub z_tau: Vec<Triple>,
    pub z_delta: Vec<Triple>,
    pub lambda_tau: Vec<Triple>,
    pub lambda_delta: Vec<Triple>,
    pub rho: f64,
    pub iteration: usize,
}

impl AdmmState {
    /// Every copy at `z0`, multipliers zero.
    pub fn new(n_dso: usize, rho: f64, z0: Triple) -> Self {
        AdmmState {
            z: vec![z0; n_dso],
            z_tau: vec![z0; n_dso],
            z_delta: vec![z0; n_dso],
            lambda_tau: vec![[0.0; COUPLING_DIM]; n_dso],
            lambda_delta: vec![[0.0; COUPLING_DIM]; n_dso],
            rho,
            iteration: 0,
        }
    }

    /// Largest `|lambda_tau + lambda_delta|` entry.
    pub fn dual_sum(&self) -> f64 {
        self.lambda_tau
            .iter()
            .zip(&self.lambda_delta)
            .flat_map(|(t, d)| t.iter().zip(d).map(|(a, b)| (a + b).abs()))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub primal_tau: f64,
    pub primal_delta: f64,
    pub dual: f64,
    pub cost: f64,
    pub dual_sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmmResult {
    pub converged: bool,
    pub iterations: usize,
    pub total_cost: f64,
    pub tso_cost: f64,
    pub dso_costs: Vec<f64>,
    pub state: AdmmState,
    pub history: Vec<IterationRecord>,
    /// Worst KKT residual over every local solve.
    pub max_kkt_residual: f64,
    /// Local solutions of the last iteration, TSO first.
    pub local_solutions: Vec<QpSolution>,
    pub comm: CommLog,
    /// Seconds spent in the iteration loop.
    pub timing: f64,
}

fn inf_dist(a: &Triple, b: &Triple) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Local objective plus `lambda'z_copy + rho/2 |z_copy - z|^2` on the given slots.
fn augmented(model: &PolyhedralModel, slots: &[(usize, Triple, Triple)], rho: f64) -> crate::opt::QuadraticProgram {
    let mut qp = model.qp.clone();
    for (slot, lambda, z) in slots {
        for (k, j) in model.coupling(*slot).enumerate() {
            qp.h[(j, j)] += rho;
            qp.g[j] += lambda[k] - rho * z[k];
        }
    }
    qp
}

fn solve_local(
    qp: &crate::opt::QuadraticProgram,
    tol: f64,
    stage: &str,
    iteration: usize,
) -> Result<QpSolution, AdmmError> {
    let sol = solve_qp(qp, tol)
        .map_err(|source| AdmmError::Opt { stage: stage.to_string(), iteration, source })?;
    if sol.status != QpStatus::Optimal {
        return Err(AdmmError::Solve { stage: stage.to_string(), iteration, status: sol.status });
    }
    Ok(sol)
}

/// TSO update: returns the local solution, its KKT residual and the new TSO
/// copies (one per DSO slot).
pub fn tso_step(
    tso_model: &PolyhedralModel,
    state: &AdmmState,
    tol: f64,
) -> Result<(QpSolution, f64, Vec<Triple>), AdmmError> {
    let slots: Vec<(usize, Triple, Triple)> =
        (0..state.z.len()).map(|i| (i, state.lambda_tau[i], state.z[i])).collect();
    let qp = augmented(tso_model, &slots, state.rho);
    let sol = solve_local(&qp, tol, "TSO step", state.iteration)?;
    let kkt = certificate_of(&qp, &sol).worst();
    let z_tau = (0..state.z.len()).map(|i| tso_model.coupling_value(&sol.x, i)).collect();
    Ok((sol, kkt, z_tau))
}

/// Update of DSO `i` (coupling slot 0 of its model).
pub fn dso_step(
    dso_model: &PolyhedralModel,
    state: &AdmmState,
    i: usize,
    tol: f64,
) -> Result<(QpSolution, f64, Triple), AdmmError> {
    let qp = augmented(dso_model, &[(0, state.lambda_delta[i], state.z[i])], state.rho);
    let sol = solve_local(&qp, tol, &format!("DSO {} step", i + 1), state.iteration)?;
    let kkt = certificate_of(&qp, &sol).worst();
    let z = dso_model.coupling_value(&sol.x, 0);
    Ok((sol, kkt, z))
}

/// Averaging and multiplier update. Returns the dual residual
/// `rho * |z_new - z_old|`.
pub fn consensus_step(state: &mut AdmmState) -> f64 {
    let rho = state.rho;
    let mut dual = 0.0f64;
    for i in 0..state.z.len() {
        let old = state.z[i];
        for k in 0..COUPLING_DIM {
            let z = 0.5 * (state.z_tau[i][k] + state.z_delta[i][k]);
            state.z[i][k] = z;
            state.lambda_tau[i][k] += rho * (state.z_tau[i][k] - z);
            state.lambda_delta[i][k] += rho * (state.z_delta[i][k] - z);
        }
        dual = dual.max(rho * inf_dist(&state.z[i], &old));
    }
    state.iteration += 1;
    dual
}

fn primal_residuals(state: &AdmmState) -> (f64, f64) {
    let tau = state.z_tau.iter().zip(&state.z).fold(0.0f64, |m, (a, z)| m.max(inf_dist(a, z)));
    let delta = state.z_delta.iter().zip(&state.z).fold(0.0f64, |m, (a, z)| m.max(inf_dist(a, z)));
    (tau, delta)
}

/// Run ADMM on prebuilt models: `models[0]` is the TSO with one coupling slot
/// per DSO, `models[i + 1]` is DSO `i`.
pub fn run_admm_on(models: &[PolyhedralModel], cfg: &AdmmConfig) -> Result<AdmmResult, AdmmError> {
    if !(cfg.rho > 0.0 && cfg.rho.is_finite()) {
        return Err(AdmmError::Config(format!("rho must be positive, got {}", cfg.rho)));
    }
    if !(cfg.tol > 0.0) || cfg.max_iter == 0 {
        return Err(AdmmError::Config("tol and max_iter must be positive".into()));
    }
    let (tso, dsos) = models.split_first().ok_or_else(|| AdmmError::Config("no TSO model".into()))?;
    let n = dsos.len();
    let mut state = AdmmState::new(n, cfg.rho, [0.0, 0.0, 1.0]);
    let mut log = CommLog::for_partition(n);
    let mut history = Vec::new();
    let mut max_kkt = 0.0f64;
    let mut local = Vec::new();
    let mut converged = false;

    let start = Instant::now();
    while state.iteration < cfg.max_iter {
        let (tso_out, dso_out) = rayon::join(
            || tso_step(tso, &state, cfg.qp_tol),
            || {
                dsos.par_iter()
                    .enumerate()
                    .map(|(i, m)| dso_step(m, &state, i, cfg.qp_tol))
                    .collect::<Result<Vec<_>, _>>()
            },
        );
        let (tso_sol, tso_kkt, z_tau) = tso_out?;
        let dso_out = dso_out?;
        log.begin_round();
        for k in 0..n {
            log.send(dso_agent(k), TSO_AGENT, MessageKind::MultiplierFreePayload, SETPOINT_FLOATS)?;
            log.send(TSO_AGENT, dso_agent(k), MessageKind::ConsensusZ, SETPOINT_FLOATS)?;
        }
        state.z_tau = z_tau;
        state.z_delta = dso_out.iter().map(|(_, _, z)| *z).collect();
        max_kkt = dso_out.iter().fold(max_kkt.max(tso_kkt), |m, (_, k, _)| m.max(*k));
        let dual = consensus_step(&mut state);
        let (primal_tau, primal_delta) = primal_residuals(&state);
        let cost = tso.cost(&tso_sol.x)
            + dsos.iter().zip(&dso_out).map(|(m, (s, _, _))| m.cost(&s.x)).sum::<f64>();
        history.push(IterationRecord {
            iter: state.iteration,
            primal_tau,
            primal_delta,
            dual,
            cost,
            dual_sum: state.dual_sum(),
        });
        local = std::iter::once(tso_sol).chain(dso_out.into_iter().map(|(s, _, _)| s)).collect();
        if primal_tau <= cfg.tol && primal_delta <= cfg.tol && dual <= cfg.tol {
            converged = true;
            break;
        }
    }
    let timing = start.elapsed().as_secs_f64();
    if !converged {
        log::warn!("ADMM stopped after {} iterations without meeting tol {:e}", state.iteration, cfg.tol);
    }
    let tso_cost = tso.cost(&local[0].x);
    let dso_costs: Vec<f64> = dsos.iter().zip(&local[1..]).map(|(m, s)| m.cost(&s.x)).collect();
    Ok(AdmmResult {
        converged,
        iterations: state.iteration,
        total_cost: tso_cost + dso_costs.iter().sum::<f64>(),
        tso_cost,
        dso_costs,
        state,
        history,
        max_kkt_residual: max_kkt,
        local_solutions: local,
        comm: log,
        timing,
    })
}

/// ADMM on the partition with every DSO on `cfg.model`.
pub fn run_admm(part: &Partition, cfg: &AdmmConfig) -> Result<AdmmResult, AdmmError> {
    run_admm_on(&admm_models(part, cfg.model)?, cfg)
}

/// TSO model followed by one model per DSO.
pub fn admm_models(part: &Partition, kind: DsoModelKind) -> Result<Vec<PolyhedralModel>, AdmmError> {
    let mut models = vec![build_dc_model(&part.tso, &part.links)
        .map_err(|source| AdmmError::Model { what: "TSO model".into(), source })?];
    for (case, link) in part.dsos.iter().zip(&part.links) {
        models.push(build_dso_model(case, link, kind).map_err(|source| AdmmError::Model {
            what: format!("DSO {} model", link.dso_index),
            source,
        })?);
    }
    Ok(models)
}

/// KKT residuals of the final ADMM iterate read as a point of the joint
/// problem: local primal and dual variables stacked, the TSO multipliers
/// standing in for the duals of the coupling equalities.
pub fn centralized_certificate(models: &[PolyhedralModel], result: &AdmmResult) -> KktReport {
    let cp = assemble(models.to_vec());
    let mut x = Vec::new();
    let mut de = Vec::new();
    let mut di = Vec::new();
    for s in &result.local_solutions {
        x.extend_from_slice(&s.x);
        de.extend_from_slice(&s.duals_eq);
        di.extend_from_slice(&s.duals_ineq);
    }
    for l in &result.state.lambda_tau {
        de.extend_from_slice(l);
    }
    kkt_certificate(&cp.qp, &x, &de, &di)
}

/// Per-iteration residual log as CSV.
pub fn history_csv(history: &[IterationRecord]) -> String {
    let mut out = String::from("iter,primal_tau,primal_delta,dual,cost\n");
    for r in history {
        out.push_str(&format!("{},{:e},{:e},{:e},{}\n", r.iter, r.primal_tau, r.primal_delta, r.dual, r.cost));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::VarIndexMap;
    use crate::opt::QuadraticProgram;

    /// Three free coupling variables with cost `(v0 - target)^2`.
    fn toy(target: f64) -> PolyhedralModel {
        let mut qp = QuadraticProgram::new(3);
        qp.h[(0, 0)] = 2.0;
        qp.g[0] = -2.0 * target;
        let vmap = VarIndexMap { coupling: vec![0..3], n: 3, ..Default::default() };
        PolyhedralModel { qp, cost_constant: target * target, vmap, operating_point: None }
    }

    fn toy_state(rho: f64) -> AdmmState {
        AdmmState::new(1, rho, [0.0; 3])
    }

    #[test]
    fn tso_toy_minimizer() {
        let (_, _, z) = tso_step(&toy(1.0), &toy_state(2.0), 1e-10).unwrap();
        assert!((z[0][0] - 0.5).abs() < 1e-8);
        assert!(z[0][1].abs() < 1e-8);
    }

    #[test]
    fn dso_toy_minimizer() {
        let (_, _, z) = dso_step(&toy(-1.0), &toy_state(2.0), 0, 1e-10).unwrap();
        assert!((z[0] + 0.5).abs() < 1e-8);
    }

    #[test]
    fn multiplier_shift_moves_minimizer() {
        // minimizer of (a-1)^2 + delta*a + a^2 is (2 - delta) / 4
        let mut s = toy_state(2.0);
        s.lambda_tau[0][0] = 0.4;
        let (_, _, z) = tso_step(&toy(1.0), &s, 1e-10).unwrap();
        assert!((z[0][0] - (0.5 - 0.4 / 4.0)).abs() < 1e-8);
    }

    #[test]
    fn large_rho_pins_copy_to_consensus() {
        let mut s = toy_state(1e2);
        s.z[0] = [0.3, 0.1, 0.2];
        let (_, _, lo) = tso_step(&toy(1.0), &s, 1e-10).unwrap();
        s.rho = 1e6;
        let (_, _, hi) = tso_step(&toy(1.0), &s, 1e-10).unwrap();
        assert!(inf_dist(&hi[0], &s.z[0]) < inf_dist(&lo[0], &s.z[0]));
        assert!(inf_dist(&hi[0], &s.z[0]) < 1e-5);
    }

    #[test]
    fn unconstrained_zero_cost_copy() {
        let mut s = toy_state(4.0);
        s.z[0] = [0.5, -0.25, 1.0];
        s.lambda_delta[0] = [1.0, 2.0, -4.0];
        let (_, _, z) = dso_step(&toy(0.0), &s, 0, 1e-10).unwrap();
        // first coordinate also carries (v0)^2: (2 + 4) v = 4*0.5 - 1
        assert!((z[0] - 1.0 / 6.0).abs() < 1e-8);
        assert!((z[1] - (-0.25 - 2.0 / 4.0)).abs() < 1e-8);
        assert!((z[2] - (1.0 + 4.0 / 4.0)).abs() < 1e-8);
    }

    #[test]
    fn averaging_and_multipliers() {
        let mut s = toy_state(2.0);
        s.z_tau[0] = [1.0, 0.0, 0.0];
        s.z_delta[0] = [0.0, 0.0, 0.0];
        consensus_step(&mut s);
        assert_eq!(s.z[0][0], 0.5);
        assert_eq!(s.dual_sum(), 0.0);
        let before = s.clone();
        s.z_tau = s.z.clone();
        s.z_delta = s.z.clone();
        assert_eq!(consensus_step(&mut s), 0.0);
        assert_eq!(s.lambda_tau, before.lambda_tau);
    }

    #[test]
    fn toy_consensus_converges() {
        let models = vec![toy(1.0), toy(-1.0)];
        let r = run_admm_on(&models, &AdmmConfig { rho: 2.0, ..Default::default() }).unwrap();
        assert!(r.converged);
        assert!(r.state.z[0][0].abs() < 1e-5);
        assert!((r.total_cost - 2.0).abs() < 1e-5);
        assert_eq!(r.comm.rounds, r.iterations);
        assert!(r.history.iter().all(|h| h.dual_sum <= 1e-12));
        let last = r.history.last().unwrap();
        assert!(last.primal_tau <= 1e-6 && last.primal_delta <= 1e-6 && last.dual <= 1e-6);
    }

    #[test]
    fn non_convergence_is_flagged() {
        let models = vec![toy(1.0), toy(-1.0)];
        let cfg = AdmmConfig { rho: 2.0, max_iter: 3, ..Default::default() };
        let r = run_admm_on(&models, &cfg).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 3);
    }

    #[test]
    fn csv_has_one_line_per_iteration() {
        let models = vec![toy(1.0), toy(-1.0)];
        let r = run_admm_on(&models, &AdmmConfig { rho: 2.0, max_iter: 5, ..Default::default() }).unwrap();
        let csv = history_csv(&r.history);
        assert_eq!(csv.lines().count(), 6);
        assert!(csv.starts_with("iter,primal_tau,primal_delta,dual,cost\n"));
    }

    #[test]
    fn rejects_bad_rho() {
        let cfg = AdmmConfig { rho: 0.0, ..Default::default() };
        assert!(matches!(run_admm_on(&[toy(0.0)], &cfg), Err(AdmmError::Config(_))));
    }
}
