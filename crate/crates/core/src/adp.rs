//! Flexibility aggregation coordinator.
//!
//! Backward sweep: every DSO projects its constraint set onto its interface
//! triple and (optionally) fits a quadratic surrogate of its cost there, then
//! ships both to the TSO. Forward sweep: the TSO dispatches against the
//! aggregates, each DSO tracks the set-point with a quadratic penalty, and one
//! extra round re-pins the TSO to the achieved exchange if a DSO missed it.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::Partition;
use crate::messaging::{
    dso_agent, CommError, CommLog, MessageKind, FLOATS_PER_FOR_ROW, SETPOINT_FLOATS, TSO_AGENT,
};
use crate::models::{
    attach_quadratic_cost, build_dc_model, build_dso_model, DsoModelKind, ModelError,
    PolyhedralModel, COUPLING_DIM,
};
use crate::opt::{certificate_of, solve_qp, OptError, QpSolution, QpStatus, DEFAULT_TOL};
use crate::projection::{coupling_region, Polyhedron, ProjectionError, ProjectionOptions};
use crate::value_function::{
    fit_quadratic, sample_value_function, QuadraticValueFn, ValueFnError, DEFAULT_SAMPLES,
    PAYLOAD_FLOATS,
};

pub const DEFAULT_WEIGHT: f64 = 1e4;
pub const DEFAULT_RENEGOTIATION_TOL: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum AdpError {
    #[error("{what}: {source}")]
    Model { what: String, source: ModelError },
    #[error("DSO {dso}: projection failed: {source}")]
    Projection { dso: usize, source: ProjectionError },
    #[error("DSO {dso}: feasible operating region is empty")]
    EmptyRegion { dso: usize },
    #[error("DSO {dso}: value function: {source}")]
    ValueFn { dso: usize, source: ValueFnError },
    #[error("{stage}: {source}")]
    Opt { stage: String, source: OptError },
    #[error("{stage} ended with status {status:?}")]
    Solve { stage: String, status: QpStatus },
    #[error(transparent)]
    Comm(#[from] CommError),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueMode {
    Zero,
    Quadratic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdpConfig {
    /// Physics used for the FOR and the value function.
    pub for_model: DsoModelKind,
    /// Physics used by the DSOs when tracking the set-point; `None` means
    /// `for_model`.
    pub disaggregation_model: Option<DsoModelKind>,
    pub value_mode: ValueMode,
    pub n_samples: usize,
    pub seed: u64,
    pub weight: f64,
    pub renegotiation_tol: f64,
    pub tol: f64,
}

impl Default for AdpConfig {
    fn default() -> Self {
        AdpConfig {
            for_model: DsoModelKind::LossLinearized,
            disaggregation_model: None,
            value_mode: ValueMode::Quadratic,
            n_samples: DEFAULT_SAMPLES,
            seed: 0,
            weight: DEFAULT_WEIGHT,
            renegotiation_tol: DEFAULT_RENEGOTIATION_TOL,
            tol: DEFAULT_TOL,
        }
    }
}

impl AdpConfig {
    fn validate(&self) -> Result<(), AdpError> {
        if !(self.weight > 0.0 && self.weight.is_finite()) {
            return Err(AdpError::Config(format!("weight must be positive, got {}", self.weight)));
        }
        if !(self.renegotiation_tol > 0.0 && self.tol > 0.0) {
            return Err(AdpError::Config("tolerances must be positive".into()));
        }
        Ok(())
    }

    pub fn disaggregation_kind(&self) -> DsoModelKind {
        self.disaggregation_model.unwrap_or(self.for_model)
    }
}

/// What one DSO sends upward in the backward sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForPackage {
    pub dso_index: usize,
    pub region: Polyhedron,
    pub value_fn: QuadraticValueFn,
    pub model_kind: DsoModelKind,
    /// Fit residual on the training samples; `None` for the zero surrogate.
    pub fit_rms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Disaggregation {
    pub x: Vec<f64>,
    pub achieved: [f64; COUPLING_DIM],
    /// True DSO cost, penalty excluded.
    pub dso_cost: f64,
    pub penalty: f64,
    pub kkt_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdpResult {
    /// TSO dispatch of the interface triples.
    pub tso_setpoints: Vec<[f64; COUPLING_DIM]>,
    /// Triples the DSOs actually realized.
    pub achieved: Vec<[f64; COUPLING_DIM]>,
    /// TSO-side triples after the last TSO solve.
    pub final_coupling: Vec<[f64; COUPLING_DIM]>,
    pub tso_cost: f64,
    pub dso_costs: Vec<f64>,
    pub total_cost: f64,
    pub feasible: bool,
    pub renegotiated: bool,
    pub for_rows: Vec<usize>,
    pub fit_rms: Vec<Option<f64>>,
    /// Worst KKT residual over every QP solved in the run.
    pub max_kkt_residual: f64,
    pub comm: CommLog,
    /// Seconds per stage.
    pub timings: BTreeMap<String, f64>,
}

impl AdpResult {
    /// Communication rounds, plus one for the extra TSO solve when it happened.
    pub fn operations(&self) -> usize {
        self.comm.rounds + usize::from(self.renegotiated)
    }
}

fn model_err(what: String) -> impl FnOnce(ModelError) -> AdpError {
    move |source| AdpError::Model { what, source }
}

fn opt_err(stage: &str) -> impl FnOnce(OptError) -> AdpError + '_ {
    move |source| AdpError::Opt { stage: stage.to_string(), source }
}

fn solve_optimal(qp: &crate::opt::QuadraticProgram, tol: f64, stage: &str) -> Result<QpSolution, AdpError> {
    let sol = solve_qp(qp, tol).map_err(opt_err(stage))?;
    if sol.status != QpStatus::Optimal {
        return Err(AdpError::Solve { stage: stage.to_string(), status: sol.status });
    }
    Ok(sol)
}

/// Build one DSO's package: model, exact FOR, surrogate cost.
pub fn build_package(
    model: &PolyhedralModel,
    dso_index: usize,
    kind: DsoModelKind,
    value_mode: ValueMode,
    n_samples: usize,
    seed: u64,
) -> Result<ForPackage, AdpError> {
    let region = coupling_region(model, 0, &ProjectionOptions::default())
        .map_err(|source| AdpError::Projection { dso: dso_index, source })?;
    if region.is_empty() {
        return Err(AdpError::EmptyRegion { dso: dso_index });
    }
    let (mut value_fn, fit_rms) = match value_mode {
        ValueMode::Zero => (QuadraticValueFn::zero(), None),
        ValueMode::Quadratic => {
            let vf_err = |source| AdpError::ValueFn { dso: dso_index, source };
            let samples = sample_value_function(model, &region, n_samples, seed).map_err(vf_err)?;
            let fit = fit_quadratic(&samples).map_err(vf_err)?;
            (fit.vf, Some(fit.rms))
        }
    };
    value_fn.domain_hint = Some(region.clone());
    Ok(ForPackage { dso_index, region, value_fn, model_kind: kind, fit_rms })
}

/// Packages for every DSO (computed in parallel), sent to the TSO in one
/// round. Feeder `k` samples with seed `seed + k`.
pub fn backward_sweep(
    part: &Partition,
    cfg: &AdpConfig,
    log: &mut CommLog,
) -> Result<Vec<ForPackage>, AdpError> {
    let packages = part
        .dsos
        .par_iter()
        .zip(&part.links)
        .enumerate()
        .map(|(k, (case, link))| {
            let model = build_dso_model(case, link, cfg.for_model)
                .map_err(model_err(format!("DSO {} model", link.dso_index)))?;
            build_package(
                &model,
                link.dso_index,
                cfg.for_model,
                cfg.value_mode,
                cfg.n_samples,
                cfg.seed.wrapping_add(k as u64),
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    if !packages.is_empty() {
        log.begin_round();
        for (k, p) in packages.iter().enumerate() {
            log.send(dso_agent(k), TSO_AGENT, MessageKind::ForPackage, p.region.rows() * FLOATS_PER_FOR_ROW)?;
            log.send(dso_agent(k), TSO_AGENT, MessageKind::ValueFn, PAYLOAD_FLOATS)?;
        }
    }
    Ok(packages)
}

/// TSO model restricted to each package's region on the matching coupling
/// slot, with each surrogate added to the objective. Package `k` goes to slot `k`.
pub fn build_tso_problem(
    tso_model: &PolyhedralModel,
    packages: &[ForPackage],
) -> Result<PolyhedralModel, AdpError> {
    if packages.len() > tso_model.vmap.coupling.len() {
        return Err(AdpError::DimensionMismatch(format!(
            "{} packages for {} coupling slots",
            packages.len(),
            tso_model.vmap.coupling.len()
        )));
    }
    let mut out = tso_model.clone();
    for (slot, p) in packages.iter().enumerate() {
        if p.region.dim != COUPLING_DIM {
            return Err(AdpError::DimensionMismatch(format!(
                "DSO {} region has dimension {}",
                p.dso_index, p.region.dim
            )));
        }
        let cols = out.coupling(slot);
        for i in 0..p.region.rows() {
            let coeffs: Vec<(usize, f64)> = cols.clone().zip(p.region.a.row(i).iter().copied()).collect();
            out.qp.push_ineq(&coeffs, p.region.b[i]);
        }
        out = attach_quadratic_cost(&out, &p.value_fn, slot).map_err(model_err("TSO problem".into()))?;
    }
    Ok(out)
}

/// Track `z_star` on coupling slot 0: minimize the DSO cost plus
/// `weight * |z - z_star|^2` over the DSO's constraint set.
pub fn disaggregate(
    model: &PolyhedralModel,
    z_star: &[f64; COUPLING_DIM],
    weight: f64,
    tol: f64,
) -> Result<Disaggregation, AdpError> {
    // scaled by 1/(2w) so large weights stay well conditioned
    let s = 1.0 / (2.0 * weight).max(1.0);
    let mut qp = model.qp.clone();
    qp.h *= s;
    qp.g *= s;
    for (k, j) in model.coupling(0).enumerate() {
        qp.h[(j, j)] += 2.0 * weight * s;
        qp.g[j] -= 2.0 * weight * s * z_star[k];
    }
    let sol = solve_optimal(&qp, tol, "disaggregation")?;
    let achieved = model.coupling_value(&sol.x, 0);
    let penalty = weight * achieved.iter().zip(z_star).map(|(a, z)| (a - z).powi(2)).sum::<f64>();
    Ok(Disaggregation {
        dso_cost: model.cost(&sol.x),
        achieved,
        penalty,
        kkt_residual: certificate_of(&qp, &sol).worst(),
        x: sol.x,
    })
}

fn inf_dist(a: &[f64; COUPLING_DIM], b: &[f64; COUPLING_DIM]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Run both sweeps on `part`.
pub fn run_fp_adp(part: &Partition, cfg: &AdpConfig) -> Result<AdpResult, AdpError> {
    cfg.validate()?;
    let n = part.dsos.len();
    let mut timings = BTreeMap::new();
    let mut log = CommLog::for_partition(n);
    let tso_model = build_dc_model(&part.tso, &part.links).map_err(model_err("TSO model".into()))?;

    let t = Instant::now();
    let packages = backward_sweep(part, cfg, &mut log)?;
    timings.insert("backward_sweep".to_string(), t.elapsed().as_secs_f64());

    let t = Instant::now();
    let tso_problem = build_tso_problem(&tso_model, &packages)?;
    let sol = solve_optimal(&tso_problem.qp, cfg.tol, "TSO dispatch")?;
    let mut max_kkt = certificate_of(&tso_problem.qp, &sol).worst();
    let mut y = sol.x;
    let setpoints: Vec<[f64; COUPLING_DIM]> = (0..n).map(|k| tso_model.coupling_value(&y, k)).collect();
    timings.insert("tso_dispatch".to_string(), t.elapsed().as_secs_f64());

    let t = Instant::now();
    if n > 0 {
        log.begin_round();
        for k in 0..n {
            log.send(TSO_AGENT, dso_agent(k), MessageKind::Setpoint, SETPOINT_FLOATS)?;
        }
    }
    let kind = cfg.disaggregation_kind();
    let dis = part
        .dsos
        .par_iter()
        .zip(&part.links)
        .zip(&setpoints)
        .map(|((case, link), z)| {
            let model = build_dso_model(case, link, kind)
                .map_err(model_err(format!("DSO {} model", link.dso_index)))?;
            disaggregate(&model, z, cfg.weight, cfg.tol)
        })
        .collect::<Result<Vec<_>, _>>()?;
    timings.insert("disaggregation".to_string(), t.elapsed().as_secs_f64());
    max_kkt = dis.iter().fold(max_kkt, |m, d| m.max(d.kkt_residual));
    let achieved: Vec<[f64; COUPLING_DIM]> = dis.iter().map(|d| d.achieved).collect();

    let mut feasible = true;
    let renegotiated = setpoints.iter().zip(&achieved).any(|(z, a)| inf_dist(z, a) > cfg.renegotiation_tol);
    if renegotiated {
        let t = Instant::now();
        log.begin_round();
        for k in 0..n {
            log.send(dso_agent(k), TSO_AGENT, MessageKind::AchievedSetpoint, SETPOINT_FLOATS)?;
        }
        // the TSO interface voltage is fixed by its own model, so only the
        // power exchange is pinned
        let mut qp = tso_model.qp.clone();
        for (k, a) in achieved.iter().enumerate() {
            let cols = tso_model.coupling(k);
            qp.push_eq(&[(cols.start, 1.0)], a[0]);
            qp.push_eq(&[(cols.start + 1, 1.0)], a[1]);
        }
        let sol = solve_qp(&qp, cfg.tol).map_err(opt_err("TSO re-dispatch"))?;
        if sol.status == QpStatus::Optimal {
            max_kkt = max_kkt.max(certificate_of(&qp, &sol).worst());
            y = sol.x;
        } else {
            log::warn!("TSO re-dispatch ended with status {:?}", sol.status);
            feasible = false;
        }
        timings.insert("renegotiation".to_string(), t.elapsed().as_secs_f64());
    }
    let final_coupling: Vec<[f64; COUPLING_DIM]> = (0..n).map(|k| tso_model.coupling_value(&y, k)).collect();
    let mismatch = final_coupling.iter().zip(&achieved).fold(0.0f64, |m, (z, a)| m.max(inf_dist(z, a)));
    if mismatch > cfg.renegotiation_tol {
        log::warn!("interface mismatch {mismatch:.3e} after the last TSO solve");
        feasible = false;
    }

    let tso_cost = tso_model.cost(&y);
    let dso_costs: Vec<f64> = dis.iter().map(|d| d.dso_cost).collect();
    Ok(AdpResult {
        tso_setpoints: setpoints,
        achieved,
        final_coupling,
        tso_cost,
        total_cost: tso_cost + dso_costs.iter().sum::<f64>(),
        dso_costs,
        feasible,
        renegotiated,
        for_rows: packages.iter().map(|p| p.region.rows()).collect(),
        fit_rms: packages.iter().map(|p| p.fit_rms).collect(),
        max_kkt_residual: max_kkt,
        comm: log,
        timings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{
        builtin_benchmark, Bus, BusKind, Generator, GridCase, Interconnection, TopologyKind,
    };
    use crate::models::build_centralized_problem;
    use crate::projection::lift_point;

    fn one_bus(load: f64, gen: Option<(f64, f64)>) -> GridCase {
        GridCase {
            base_mva: 100.0,
            buses: vec![Bus { id: 1, kind: BusKind::Slack, p_load: load, q_load: 0.1, v2_min: 0.81, v2_max: 1.21 }],
            lines: vec![],
            gens: gen
                .map(|(a2, a1)| Generator {
                    bus: 1,
                    p_min: 0.0,
                    p_max: 5.0,
                    q_min: -1.0,
                    q_max: 1.0,
                    cost_a2: a2,
                    cost_a1: a1,
                    cost_a0: 0.0,
                })
                .into_iter()
                .collect(),
            topology_kind: TopologyKind::Radial,
        }
    }

    fn toy_partition() -> Partition {
        Partition {
            tso: one_bus(1.0, Some((0.5, 1.0))),
            dsos: vec![one_bus(1.0, Some((1.0, 2.0)))],
            links: vec![Interconnection { dso_index: 1, tso_bus: 1, dso_root_bus: 1, s_max: 2.0 }],
        }
    }

    #[test]
    fn zero_mode_ships_zero_surrogates() {
        let part = builtin_benchmark().unwrap();
        let cfg = AdpConfig { value_mode: ValueMode::Zero, ..Default::default() };
        let mut log = CommLog::for_partition(2);
        let pk = backward_sweep(&part, &cfg, &mut log).unwrap();
        assert_eq!(pk.len(), 2);
        assert!(pk.iter().all(|p| p.value_fn.is_zero() && p.fit_rms.is_none()));
        assert!(pk.iter().all(|p| p.value_fn.domain_hint.as_ref() == Some(&p.region)));
        assert_eq!(log.stats().rounds, 1);
        let expect: usize = pk.iter().map(|p| p.region.rows() * 4 + 13).sum();
        assert_eq!(log.stats().total_floats, expect);
    }

    #[test]
    fn no_packages_leaves_tso_model_unchanged() {
        let part = builtin_benchmark().unwrap();
        let m = build_dc_model(&part.tso, &part.links).unwrap();
        assert_eq!(build_tso_problem(&m, &[]).unwrap(), m);
    }

    #[test]
    fn pinned_region_forces_coupling() {
        let part = toy_partition();
        let m = build_dc_model(&part.tso, &part.links).unwrap();
        let z0 = [0.3, -0.05, 1.0];
        let mut rows = Vec::new();
        for k in 0..3 {
            let mut r = [0.0; 3];
            r[k] = 1.0;
            rows.push((r, z0[k]));
            r[k] = -1.0;
            rows.push((r, -z0[k]));
        }
        let a = nalgebra::DMatrix::from_fn(6, 3, |i, j| rows[i].0[j]);
        let b = nalgebra::DVector::from_fn(6, |i, _| rows[i].1);
        let region = Polyhedron::new(a, b, vec!["p".into(), "q".into(), "nu".into()]);
        let pk = ForPackage {
            dso_index: 1,
            region,
            value_fn: QuadraticValueFn::zero(),
            model_kind: DsoModelKind::LinDistFlow,
            fit_rms: None,
        };
        let tp = build_tso_problem(&m, &[pk]).unwrap();
        let sol = solve_qp(&tp.qp, DEFAULT_TOL).unwrap();
        let z = m.coupling_value(&sol.x, 0);
        assert!(inf_dist(&z, &z0) < 1e-8, "{z:?}");
    }

    #[test]
    fn penalty_tracks_closer_with_larger_weight() {
        let part = builtin_benchmark().unwrap();
        let m = build_dso_model(&part.dsos[0], &part.links[0], DsoModelKind::LinDistFlow).unwrap();
        // far outside the region in p
        let z = [0.2, 0.0, 1.0];
        let lo = disaggregate(&m, &z, 1e4, DEFAULT_TOL).unwrap();
        let hi = disaggregate(&m, &z, 1e8, DEFAULT_TOL).unwrap();
        let (dl, dh) = (inf_dist(&lo.achieved, &z), inf_dist(&hi.achieved, &z));
        assert!(dl > 0.0 && dh <= dl + 1e-9, "{dl} {dh}");
        assert!(lift_point(&m, &lo.achieved).is_some());
    }

    #[test]
    fn cost_excludes_penalty() {
        let part = builtin_benchmark().unwrap();
        let m = build_dso_model(&part.dsos[1], &part.links[1], DsoModelKind::LossLinearized).unwrap();
        let d = disaggregate(&m, &[0.0, 0.0, 1.0], 1e4, DEFAULT_TOL).unwrap();
        assert!(d.penalty > 0.0);
        assert!((d.dso_cost - m.cost(&d.x)).abs() <= 1e-12);
    }

    #[test]
    fn toy_exact_value_function_matches_centralized() {
        let part = toy_partition();
        let cfg = AdpConfig { for_model: DsoModelKind::LinDistFlow, n_samples: 40, ..Default::default() };
        let r = run_fp_adp(&part, &cfg).unwrap();
        let cp = build_centralized_problem(&part, &[DsoModelKind::LinDistFlow]).unwrap();
        let sol = solve_qp(&cp.qp, DEFAULT_TOL).unwrap();
        let central = cp.cost(&sol.x);
        assert!(r.feasible);
        assert!(((r.total_cost - central) / central).abs() <= 1e-6, "{} {}", r.total_cost, central);
        // the penalty pulls the DSO off z* by |dV/dz| / 2w = (2/3 + 2) / 2e4
        assert_eq!(r.renegotiated, inf_dist(&r.tso_setpoints[0], &r.achieved[0]) > 1e-4);
        assert!((r.achieved[0][0] - r.tso_setpoints[0][0] - (8.0 / 3.0) / 2e4).abs() < 1e-6);
        assert_eq!(r.comm.rounds, 2 + usize::from(r.renegotiated));
    }

    #[test]
    fn no_feeders_is_a_plain_tso_solve() {
        let mut part = toy_partition();
        part.dsos.clear();
        part.links.clear();
        let r = run_fp_adp(&part, &AdpConfig::default()).unwrap();
        assert_eq!(r.comm.stats().rounds, 0);
        assert!(r.feasible);
        // 0.5 p^2 + p at p = 1
        assert!((r.total_cost - 1.5).abs() < 1e-7);
    }

    #[test]
    fn rejects_nonpositive_weight() {
        let cfg = AdpConfig { weight: 0.0, ..Default::default() };
        assert!(matches!(run_fp_adp(&toy_partition(), &cfg), Err(AdpError::Config(_))));
    }
}
