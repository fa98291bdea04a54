//! Acceptance criteria 1-10. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line; the process fails if any does.

mod common;

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gridcoord::admm::{run_admm, AdmmConfig};
use gridcoord::adp::{run_fp_adp, AdpConfig, ValueMode};
use gridcoord::bench::{compare, run_centralized, ComparisonReport, RunConfig};
use gridcoord::grid::{builtin_benchmark, Bus, BusKind, Generator, GridCase, Interconnection, TopologyKind};
use gridcoord::models::{build_centralized_problem, build_dso_model, DsoModelKind};
use gridcoord::opt::{check_feasible, solve_qp, DEFAULT_TOL};
use gridcoord::projection::{coupling_region, lift_point, project_onto, ProjectionOptions};
use gridcoord::value_function::{fit_quadratic, hit_and_run, rms, sample_value_function, ValueSample};
use gridcoord::{Partition, Polyhedron, QpStatus, QuadraticValueFn};

use common::{normal, projected_gradient, random_qp};

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn benchmark() -> Partition {
    builtin_benchmark().expect("builtin benchmark loads")
}

/// Criterion 1: FM projection membership agrees with lifted phase-1 LPs.
fn projection_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut points = 0;
    let mut inside = 0;
    for inst in 0..50 {
        let dim = rng.random_range(3..=6);
        let elim = rng.random_range(1..=(dim - 1).min(4));
        let extra = rng.random_range(4..=30 - 2 * dim);
        // a box keeps the instance bounded; random cuts shape it
        let m = 2 * dim + extra;
        let mut a = DMatrix::zeros(m, dim);
        let mut b = DVector::zeros(m);
        for j in 0..dim {
            a[(2 * j, j)] = 1.0;
            a[(2 * j + 1, j)] = -1.0;
            b[2 * j] = 1.0;
            b[2 * j + 1] = 1.0;
        }
        let c: Vec<f64> = (0..dim).map(|_| 0.3 * normal(&mut rng)).collect();
        for i in 2 * dim..m {
            let mut dot = 0.0;
            for j in 0..dim {
                a[(i, j)] = normal(&mut rng);
                dot += a[(i, j)] * c[j];
            }
            b[i] = dot + rng.random_range(0.05..0.8);
        }
        let labels = (0..dim).map(|j| format!("x{j}")).collect();
        let poly = Polyhedron::new(a.clone(), b.clone(), labels);
        let keep: Vec<usize> = (0..dim - elim).collect();
        let proj = project_onto(&poly, &keep, &ProjectionOptions::default())
            .map_err(|e| format!("instance {inst}: {e}"))?;
        let k = keep.len();
        for p in 0..200 {
            let x: Vec<f64> = (0..k).map(|_| rng.random_range(-1.2..1.2)).collect();
            let rhs = &b - a.columns(0, k) * DVector::from_column_slice(&x);
            let rest = a.columns(k, elim).into_owned();
            let lifted = check_feasible(&rest, &rhs.add_scalar(1e-7), &DMatrix::zeros(0, elim), &DVector::zeros(0));
            let member = proj.contains(&x, 1e-7);
            if member != lifted.feasible {
                return Err(format!("instance {inst} point {p}: projection {member}, lift {}", lifted.feasible));
            }
            points += 1;
            inside += usize::from(member);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(secs <= 60.0, format!("{points} points agree ({inside} inside), {secs:.1} s"))
}

/// Criterion 2: interior FOR points lift, points 1e-3 outside a face do not.
fn for_lift() -> Outcome {
    let part = benchmark();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut summary = Vec::new();
    for kind in [DsoModelKind::LinDistFlow, DsoModelKind::LossLinearized] {
        for (k, (case, link)) in part.dsos.iter().zip(&part.links).enumerate() {
            let model = build_dso_model(case, link, kind).map_err(|e| e.to_string())?;
            let region = coupling_region(&model, 0, &ProjectionOptions::default()).map_err(|e| e.to_string())?;
            let inner = hit_and_run(&region, 500, 100 + k as u64).map_err(|e| e.to_string())?;
            if let Some(p) = inner.iter().find(|p| lift_point(&model, p).is_none()) {
                return Err(format!("{kind:?} DSO {k}: interior point {p:?} does not lift"));
            }
            for (t, x) in inner.iter().take(100).enumerate() {
                let d: Vec<f64> = (0..3).map(|_| normal(&mut rng)).collect();
                let (step, face) = exit_along(&region, x, &d);
                let row = region.a.row(face);
                let norm = row.norm();
                let z: Vec<f64> = (0..3).map(|j| x[j] + step * d[j] + 1e-3 * row[j] / norm).collect();
                if lift_point(&model, &z).is_some() {
                    return Err(format!("{kind:?} DSO {k}: outside point {t} lifts"));
                }
            }
            summary.push(format!("{}/{}: {} rows", kind.short_name(), k + 1, region.rows()));
        }
    }
    Ok(format!("500 in / 100 out per region; {}", summary.join(", ")))
}

/// Distance along `d` to the boundary of `region` from interior `x`, and the
/// row reached first.
fn exit_along(region: &Polyhedron, x: &[f64], d: &[f64]) -> (f64, usize) {
    let mut best = (f64::INFINITY, 0);
    for i in 0..region.rows() {
        let ad: f64 = (0..3).map(|j| region.a[(i, j)] * d[j]).sum();
        if ad > 1e-12 {
            let ax: f64 = (0..3).map(|j| region.a[(i, j)] * x[j]).sum();
            let t = (region.b[i] - ax) / ad;
            if t < best.0 {
                best = (t, i);
            }
        }
    }
    best
}

fn single_bus(load: (f64, f64), gen: (f64, f64), p_max: f64) -> GridCase {
    GridCase {
        base_mva: 100.0,
        buses: vec![Bus { id: 1, kind: BusKind::Slack, p_load: load.0, q_load: load.1, v2_min: 0.81, v2_max: 1.21 }],
        lines: vec![],
        gens: vec![Generator {
            bus: 1,
            p_min: 0.0,
            p_max,
            q_min: -1.0,
            q_max: 1.0,
            cost_a2: gen.0,
            cost_a1: gen.1,
            cost_a0: 0.0,
        }],
        topology_kind: TopologyKind::Radial,
    }
}

/// Criterion 3: a feeder whose optimal cost is exactly quadratic in the coupling.
fn exact_quadratic_instance() -> Outcome {
    let part = Partition {
        tso: single_bus((1.2, 0.2), (0.4, 1.5), 4.0),
        dsos: vec![single_bus((0.9, 0.15), (0.8, 1.0), 3.0)],
        links: vec![Interconnection { dso_index: 1, tso_bus: 1, dso_root_bus: 1, s_max: 2.0 }],
    };
    let kind = DsoModelKind::LinDistFlow;
    let cfg = AdpConfig { for_model: kind, n_samples: 60, seed: 3, ..Default::default() };
    let r = run_fp_adp(&part, &cfg).map_err(|e| e.to_string())?;
    let cp = build_centralized_problem(&part, &[kind]).map_err(|e| e.to_string())?;
    let sol = solve_qp(&cp.qp, DEFAULT_TOL).map_err(|e| e.to_string())?;
    if sol.status != QpStatus::Optimal {
        return Err(format!("centralized status {:?}", sol.status));
    }
    let central = cp.cost(&sol.x);
    let rel = ((r.total_cost - central) / central).abs();
    let fit = r.fit_rms[0].unwrap_or(f64::NAN);
    check(
        r.feasible && rel <= 1e-5,
        format!("adp {:.9} central {central:.9} rel {rel:.1e} fit rms {fit:.1e}", r.total_cost),
    )
}

/// Criterion 4: ADMM reaches the centralized cost with a vanishing dual sum.
fn admm_vs_centralized(central: f64) -> Outcome {
    let cfg = AdmmConfig { rho: 100.0, tol: 1e-6, ..Default::default() };
    let r = run_admm(&benchmark(), &cfg).map_err(|e| e.to_string())?;
    let rel = (r.total_cost - central).abs() / central;
    let dual_sum = r.history.iter().map(|h| h.dual_sum).fold(0.0f64, f64::max);
    check(
        r.converged && r.iterations <= 2000 && rel <= 1e-4 && dual_sum <= 1e-12,
        format!("{} iterations, rel {rel:.1e}, max dual sum {dual_sum:.1e}", r.iterations),
    )
}

fn row(report: &ComparisonReport, name: &str) -> Result<(f64, usize), String> {
    let r = report
        .rows
        .iter()
        .find(|r| r.algorithm == name)
        .ok_or_else(|| format!("missing row {name}"))?;
    match (r.total_cost, r.feasible) {
        (Some(c), true) => Ok((c, r.operations)),
        _ => Err(format!("{name} failed: {:?}", r.error)),
    }
}

/// Criterion 5: cost and operation orderings of the comparison table.
fn orderings(report: &ComparisonReport) -> Outcome {
    let (central, c_ops) = row(report, "centralized")?;
    let (admm, a_ops) = row(report, "admm")?;
    let mut notes = Vec::new();
    let mut ok = c_ops == 1 && a_ops >= 10 && central <= admm + 1e-6;
    for model in ["ll", "ldf"] {
        let (with, w_ops) = row(report, &format!("adp_{model}_quadratic"))?;
        let (without, wo_ops) = row(report, &format!("adp_{model}_none"))?;
        let gap = (with - central) / central;
        ok &= admm <= with && with < without;
        ok &= (2..=4).contains(&w_ops) && (2..=4).contains(&wo_ops) && wo_ops < a_ops && w_ops < a_ops;
        ok &= gap <= 0.02;
        notes.push(format!("{model}: gap {:.3}% ops {w_ops}/{wo_ops}", 100.0 * gap));
    }
    check(ok, format!("central {central:.6} <= admm {admm:.6}; {}; admm ops {a_ops}", notes.join("; ")))
}

/// Criterion 6: ldf regions with ll disaggregation trigger one more round.
fn renegotiation() -> Outcome {
    let cfg = AdpConfig {
        for_model: DsoModelKind::LinDistFlow,
        disaggregation_model: Some(DsoModelKind::LossLinearized),
        ..Default::default()
    };
    let r = run_fp_adp(&benchmark(), &cfg).map_err(|e| e.to_string())?;
    let rounds = r.comm.stats().rounds;
    check(
        r.renegotiated && rounds == 3 && r.feasible,
        format!("renegotiated {} rounds {rounds} feasible {}", r.renegotiated, r.feasible),
    )
}

/// Criterion 7: exact recovery of a quadratic, and the residual of the
/// benchmark value function over nested sample sets, measured on an
/// independent evaluation set.
fn value_fn_fitting() -> Outcome {
    let truth = QuadraticValueFn {
        q: [[2.0, 0.3, -0.1], [0.3, 1.5, 0.2], [-0.1, 0.2, 0.8]],
        c: [-1.0, 0.5, 2.0],
        d: 0.75,
        domain_hint: None,
    };
    let labels = vec!["p".into(), "q".into(), "nu".into()];
    let mut a = DMatrix::zeros(6, 3);
    let mut b = DVector::zeros(6);
    for j in 0..3 {
        a[(2 * j, j)] = 1.0;
        a[(2 * j + 1, j)] = -1.0;
        b[2 * j] = 1.0;
        b[2 * j + 1] = 1.0;
    }
    let cube = Polyhedron::new(a, b, labels);
    let samples: Vec<ValueSample> = hit_and_run(&cube, 40, 7)
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|p| ValueSample { z: [p[0], p[1], p[2]], value: truth.evaluate(&p), feasible: true })
        .collect();
    let fit = fit_quadratic(&samples).map_err(|e| e.to_string())?;
    let coef_err = truth
        .to_floats()
        .iter()
        .zip(fit.vf.to_floats())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0f64, f64::max);

    let part = benchmark();
    let model = build_dso_model(&part.dsos[0], &part.links[0], DsoModelKind::LossLinearized)
        .map_err(|e| e.to_string())?;
    let region = coupling_region(&model, 0, &ProjectionOptions::default()).map_err(|e| e.to_string())?;
    let pool = sample_value_function(&model, &region, 200, 70).map_err(|e| e.to_string())?;
    let held_out = sample_value_function(&model, &region, 2000, 71).map_err(|e| e.to_string())?;
    let mut residuals = Vec::new();
    for n in [10, 50, 200] {
        let f = fit_quadratic(&pool[..n]).map_err(|e| e.to_string())?;
        residuals.push(rms(&f.vf, &held_out));
    }
    let monotone = residuals.windows(2).all(|w| w[1] <= w[0]);
    let shown: Vec<String> = residuals.iter().map(|r| format!("{r:.3e}")).collect();
    check(
        coef_err <= 1e-6 && monotone,
        format!("max coef error {coef_err:.1e}; held-out rms (10/50/200) {}", shown.join(" / ")),
    )
}

/// Criterion 8: KKT certificates on benchmark solves and the random-QP oracle.
fn qp_kernel(central_kkt: f64) -> Outcome {
    let part = benchmark();
    let mut worst = central_kkt;
    for kind in [DsoModelKind::LossLinearized, DsoModelKind::LinDistFlow] {
        for mode in [ValueMode::Quadratic, ValueMode::Zero] {
            let cfg = AdpConfig {
                for_model: kind,
                disaggregation_model: Some(DsoModelKind::LossLinearized),
                value_mode: mode,
                ..Default::default()
            };
            let r = run_fp_adp(&part, &cfg).map_err(|e| e.to_string())?;
            worst = worst.max(r.max_kkt_residual);
        }
    }
    let admm = run_admm(&part, &AdmmConfig::default()).map_err(|e| e.to_string())?;
    worst = worst.max(admm.max_kkt_residual);

    let mut max_diff = 0.0f64;
    for seed in 0..100 {
        let qp = random_qp(6, 10, 1000 + seed);
        let sol = solve_qp(&qp, DEFAULT_TOL).map_err(|e| e.to_string())?;
        let oracle = projected_gradient(&qp);
        if sol.status != QpStatus::Optimal || oracle.violation > 1e-7 {
            return Err(format!("random QP {seed}: status {:?}, oracle violation {:.1e}", sol.status, oracle.violation));
        }
        max_diff = max_diff.max((sol.objective - oracle.objective).abs());
    }
    check(
        worst <= 1e-8 && max_diff <= 1e-6,
        format!("worst benchmark KKT {worst:.1e}; oracle max diff {max_diff:.1e} over 100 QPs"),
    )
}

/// Criterion 9: identical seeds give identical reports apart from timing.
fn determinism(first: &ComparisonReport, cfg: &RunConfig) -> Outcome {
    let second = compare(&benchmark(), cfg);
    check(
        first.reproducible_json() == second.reproducible_json(),
        format!("{} bytes of report JSON compared", first.reproducible_json().len()),
    )
}

fn main() {
    let start = Instant::now();
    let central = run_centralized(&benchmark(), DsoModelKind::LossLinearized, DEFAULT_TOL)
        .expect("centralized benchmark solve");
    let cfg = RunConfig { seed: 7, ..Default::default() };
    let t = Instant::now();
    let report = compare(&benchmark(), &cfg);
    let compare_secs = t.elapsed().as_secs_f64();

    let results: Vec<(&str, Outcome)> = vec![
        ("projection oracle equivalence", projection_oracle()),
        ("FOR feasibility guarantee", for_lift()),
        ("exact quadratic value function instance", exact_quadratic_instance()),
        ("ADMM vs centralized", admm_vs_centralized(central.total_cost)),
        ("comparison orderings", orderings(&report)),
        ("renegotiation path", renegotiation()),
        ("value function fitting", value_fn_fitting()),
        ("QP kernel", qp_kernel(central.kkt_residual)),
        ("determinism", determinism(&report, &cfg)),
        ("end-to-end runtime", check(compare_secs <= 60.0, format!("compare took {compare_secs:.2} s"))),
    ];
    let mut failed = 0;
    for (k, (name, out)) in results.iter().enumerate() {
        let (tag, detail) = match out {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {tag}  {name}: {detail}", k + 1);
    }
    println!("acceptance: {}/{} passed in {:.1} s", results.len() - failed, results.len(), start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
