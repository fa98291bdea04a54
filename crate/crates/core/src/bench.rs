//! Method runner and comparison harness behind the `gridcoord` binary.
//!
//! Wall times cover the coordination loop only; model building and the
//! backward-sweep projection are reported separately as setup time.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::admm::{run_admm, AdmmConfig, AdmmError, AdmmResult, DEFAULT_MAX_ITER, DEFAULT_RESIDUAL_TOL, DEFAULT_RHO};
use crate::adp::{run_fp_adp, AdpConfig, AdpError, AdpResult, ValueMode, DEFAULT_WEIGHT};
use crate::grid::{compose_benchmark, load_case, CaseFormat, GridError, Interconnection, Partition, INTERFACE_RATING};
use crate::models::{build_centralized_problem, build_dso_model, DsoModelKind, ModelError, COUPLING_DIM};
use crate::opt::{certificate_of, solve_qp, OptError, QpStatus, DEFAULT_TOL};
use crate::projection::{
    coupling_region, for_polygon_csv, slice_fix, vertices_2d, ForSidecar, ProjectionError, ProjectionOptions,
};
use crate::value_function::DEFAULT_SAMPLES;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Opt(#[from] OptError),
    #[error(transparent)]
    Adp(#[from] AdpError),
    #[error(transparent)]
    Admm(#[from] AdmmError),
    #[error("DSO {dso}: {source}")]
    Projection { dso: usize, source: ProjectionError },
    #[error("DSO {dso}: operating region is empty at nu = {nu}")]
    EmptySlice { dso: usize, nu: f64 },
    #[error("invalid input: {0}")]
    Input(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BenchError + '_ {
    move |source| BenchError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Centralized,
    Admm,
    Adp,
}

/// Options shared by `run` and `compare`. `compare` ignores `method`,
/// `for_model` and `value_mode` and sweeps them instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub method: Method,
    pub for_model: DsoModelKind,
    pub value_mode: ValueMode,
    /// Feeder physics for the centralized solve, ADMM and ADP disaggregation.
    pub physics: DsoModelKind,
    pub samples: usize,
    pub seed: u64,
    pub weight: f64,
    pub rho: f64,
    /// ADMM residual tolerance.
    pub tol: f64,
    pub max_iter: usize,
    /// Tolerance of every QP solve.
    pub qp_tol: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            method: Method::Centralized,
            for_model: DsoModelKind::LossLinearized,
            value_mode: ValueMode::Quadratic,
            physics: DsoModelKind::LossLinearized,
            samples: DEFAULT_SAMPLES,
            seed: 0,
            weight: DEFAULT_WEIGHT,
            rho: DEFAULT_RHO,
            tol: DEFAULT_RESIDUAL_TOL,
            max_iter: DEFAULT_MAX_ITER,
            qp_tol: DEFAULT_TOL,
        }
    }
}

impl RunConfig {
    pub fn adp_config(&self) -> AdpConfig {
        AdpConfig {
            for_model: self.for_model,
            disaggregation_model: Some(self.physics),
            value_mode: self.value_mode,
            n_samples: self.samples,
            seed: self.seed,
            weight: self.weight,
            tol: self.qp_tol,
            ..AdpConfig::default()
        }
    }

    pub fn admm_config(&self) -> AdmmConfig {
        AdmmConfig {
            model: self.physics,
            rho: self.rho,
            tol: self.tol,
            max_iter: self.max_iter,
            qp_tol: self.qp_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralizedResult {
    pub status: QpStatus,
    pub total_cost: f64,
    pub tso_cost: f64,
    pub dso_costs: Vec<f64>,
    /// TSO-side coupling triple per DSO.
    pub coupling: Vec<[f64; COUPLING_DIM]>,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub timing: f64,
}

/// Joint solve of the TSO and all feeders on `physics`.
pub fn run_centralized(part: &Partition, physics: DsoModelKind, tol: f64) -> Result<CentralizedResult, BenchError> {
    let problem = build_centralized_problem(part, &vec![physics; part.dsos.len()])?;
    let t = Instant::now();
    let sol = solve_qp(&problem.qp, tol)?;
    let timing = t.elapsed().as_secs_f64();
    let tso = &problem.models[0];
    let tso_x = problem.block(&sol.x, 0);
    let dso_costs: Vec<f64> = (1..problem.models.len())
        .map(|k| problem.models[k].cost(problem.block(&sol.x, k)))
        .collect();
    Ok(CentralizedResult {
        status: sol.status,
        total_cost: problem.cost(&sol.x),
        tso_cost: tso.cost(tso_x),
        dso_costs,
        coupling: (0..part.dsos.len()).map(|k| tso.coupling_value(tso_x, k)).collect(),
        kkt_residual: certificate_of(&problem.qp, &sol).worst(),
        iterations: sol.iterations,
        timing,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum MethodResult {
    Centralized(CentralizedResult),
    Admm(AdmmResult),
    Adp(AdpResult),
}

impl MethodResult {
    pub fn total_cost(&self) -> f64 {
        match self {
            MethodResult::Centralized(r) => r.total_cost,
            MethodResult::Admm(r) => r.total_cost,
            MethodResult::Adp(r) => r.total_cost,
        }
    }

    /// One solve for the centralized run, communication rounds (plus the
    /// renegotiation solve) for ADP, iterations for ADMM.
    pub fn operations(&self) -> usize {
        match self {
            MethodResult::Centralized(_) => 1,
            MethodResult::Admm(r) => r.iterations,
            MethodResult::Adp(r) => r.operations(),
        }
    }

    /// Optimal for the centralized run, converged for ADMM, consistent
    /// interface for ADP.
    pub fn feasible(&self) -> bool {
        match self {
            MethodResult::Centralized(r) => r.status == QpStatus::Optimal,
            MethodResult::Admm(r) => r.converged,
            MethodResult::Adp(r) => r.feasible,
        }
    }

    /// Coordination time in seconds.
    pub fn comp_time(&self) -> f64 {
        match self {
            MethodResult::Centralized(r) => r.timing,
            MethodResult::Admm(r) => r.timing,
            MethodResult::Adp(r) => ["tso_dispatch", "disaggregation", "renegotiation"]
                .iter()
                .filter_map(|k| r.timings.get(*k))
                .sum(),
        }
    }
}

pub fn run_method(part: &Partition, cfg: &RunConfig) -> Result<MethodResult, BenchError> {
    Ok(match cfg.method {
        Method::Centralized => MethodResult::Centralized(run_centralized(part, cfg.physics, cfg.qp_tol)?),
        Method::Admm => MethodResult::Admm(run_admm(part, &cfg.admm_config())?),
        Method::Adp => MethodResult::Adp(run_fp_adp(part, &cfg.adp_config())?),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub algorithm: String,
    /// `None` when the run failed.
    pub total_cost: Option<f64>,
    pub operations: usize,
    pub feasible: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub seed: u64,
    pub samples: usize,
    pub weight: f64,
    pub rho: f64,
    pub admm_tol: f64,
    pub max_iter: usize,
    pub qp_tol: f64,
    pub physics: DsoModelKind,
    pub version: String,
}

/// Wall-clock data, kept apart from the reproducible part of the report.
/// Entries are indexed like `ComparisonReport::rows`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportTiming {
    pub comp_time_s: Vec<f64>,
    pub setup_s: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub rows: Vec<ReportRow>,
    pub metadata: ReportMetadata,
    pub timing: ReportTiming,
}

pub const CSV_HEADER: &str = "algorithm,total_cost,operations,comp_time_s,feasible";

/// Row labels of [`compare`], in order.
pub fn compare_rows() -> Vec<(String, Method, DsoModelKind, ValueMode)> {
    let mut out = vec![
        ("centralized".to_string(), Method::Centralized, DsoModelKind::LossLinearized, ValueMode::Quadratic),
        ("admm".to_string(), Method::Admm, DsoModelKind::LossLinearized, ValueMode::Quadratic),
    ];
    for kind in [DsoModelKind::LossLinearized, DsoModelKind::LinDistFlow] {
        for (mode, tag) in [(ValueMode::Quadratic, "quadratic"), (ValueMode::Zero, "none")] {
            out.push((format!("adp_{}_{tag}", kind.short_name()), Method::Adp, kind, mode));
        }
    }
    out
}

/// Centralized, ADMM and the four ADP variants ({ll, ldf} FOR x {quadratic,
/// zero} value function). A failing method yields a row flagged as failed.
pub fn compare(part: &Partition, cfg: &RunConfig) -> ComparisonReport {
    let mut rows = Vec::new();
    let mut timing = ReportTiming { comp_time_s: Vec::new(), setup_s: Vec::new() };
    for (name, method, for_model, value_mode) in compare_rows() {
        let run_cfg = RunConfig { method, for_model, value_mode, ..cfg.clone() };
        log::info!("running {name}");
        let t = Instant::now();
        let out = run_method(part, &run_cfg);
        let total = t.elapsed().as_secs_f64();
        match out {
            Ok(r) => {
                let comp = r.comp_time();
                rows.push(ReportRow {
                    algorithm: name,
                    total_cost: Some(r.total_cost()),
                    operations: r.operations(),
                    feasible: r.feasible(),
                    error: None,
                });
                timing.comp_time_s.push(comp);
                timing.setup_s.push((total - comp).max(0.0));
            }
            Err(e) => {
                log::error!("{name} failed: {e}");
                rows.push(ReportRow {
                    algorithm: name,
                    total_cost: None,
                    operations: 0,
                    feasible: false,
                    error: Some(e.to_string()),
                });
                timing.comp_time_s.push(0.0);
                timing.setup_s.push(total);
            }
        }
    }
    ComparisonReport {
        rows,
        metadata: ReportMetadata {
            seed: cfg.seed,
            samples: cfg.samples,
            weight: cfg.weight,
            rho: cfg.rho,
            admm_tol: cfg.tol,
            max_iter: cfg.max_iter,
            qp_tol: cfg.qp_tol,
            physics: cfg.physics,
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
        timing,
    }
}

impl ComparisonReport {
    pub fn to_csv(&self) -> String {
        let mut s = format!("{CSV_HEADER}\n");
        for (k, r) in self.rows.iter().enumerate() {
            let cost = r.total_cost.map_or("nan".to_string(), |c| format!("{c}"));
            let t = self.timing.comp_time_s.get(k).copied().unwrap_or(0.0);
            s.push_str(&format!("{},{cost},{},{t},{}\n", r.algorithm, r.operations, r.feasible));
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// The report without its timing block, for reproducibility checks.
    pub fn reproducible_json(&self) -> String {
        #[derive(Serialize)]
        struct Stable<'a> {
            rows: &'a [ReportRow],
            metadata: &'a ReportMetadata,
        }
        serde_json::to_string_pretty(&Stable { rows: &self.rows, metadata: &self.metadata })
            .expect("report serializes")
    }

    /// Fixed-width table for the terminal.
    pub fn table(&self) -> String {
        let w = self.rows.iter().map(|r| r.algorithm.len()).max().unwrap_or(0).max("Algorithm".len());
        let mut s = format!(
            "{:<w$}  {:>14}  {:>12}  {:>14}  {}\n",
            "Algorithm", "Total Cost", "# Operations", "Comp. Time (s)", "Feasible"
        );
        for (k, r) in self.rows.iter().enumerate() {
            let cost = r.total_cost.map_or("failed".to_string(), |c| format!("{c:.8}"));
            let t = self.timing.comp_time_s.get(k).copied().unwrap_or(0.0);
            s.push_str(&format!(
                "{:<w$}  {:>14}  {:>12}  {:>14.4}  {}\n",
                r.algorithm, cost, r.operations, t, r.feasible
            ));
        }
        s
    }
}

/// Write `compare.csv` and `compare.json` into `dir`.
pub fn export_report(report: &ComparisonReport, dir: &Path) -> Result<Vec<PathBuf>, BenchError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let csv = dir.join("compare.csv");
    fs::write(&csv, report.to_csv()).map_err(io_err(&csv))?;
    let json = dir.join("compare.json");
    fs::write(&json, report.to_json()).map_err(io_err(&json))?;
    Ok(vec![csv, json])
}

/// The slice of one DSO's operating region at a fixed interface voltage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForSlice {
    pub dso_index: usize,
    pub model_kind: DsoModelKind,
    pub nu_value: f64,
    /// Inequalities of the 3-D region before slicing.
    pub region_rows: usize,
    /// Counter-clockwise `(p_if, q_if)` vertices.
    pub vertices: Vec<[f64; 2]>,
    /// The DSO's own cost-optimal exchange at this voltage.
    pub exchange_point: Option<[f64; 2]>,
}

impl ForSlice {
    pub fn sidecar(&self) -> ForSidecar {
        ForSidecar { dso_index: self.dso_index, nu_value: self.nu_value, model_kind: self.model_kind }
    }
}

/// Project every feeder onto its interface and slice at `nu_if = nu`.
pub fn project_for(part: &Partition, kind: DsoModelKind, nu: f64) -> Vec<Result<ForSlice, BenchError>> {
    part.dsos
        .iter()
        .zip(&part.links)
        .map(|(case, link)| slice_one(case, link, kind, nu))
        .collect()
}

fn slice_one(
    case: &crate::grid::GridCase,
    link: &Interconnection,
    kind: DsoModelKind,
    nu: f64,
) -> Result<ForSlice, BenchError> {
    let dso = link.dso_index;
    let model = build_dso_model(case, link, kind)?;
    let region = coupling_region(&model, 0, &ProjectionOptions::default())
        .map_err(|source| BenchError::Projection { dso, source })?;
    let slice = slice_fix(&region, COUPLING_DIM - 1, nu);
    if slice.is_empty() {
        return Err(BenchError::EmptySlice { dso, nu });
    }
    let vertices = vertices_2d(&slice).map_err(|source| match source {
        ProjectionError::Empty => BenchError::EmptySlice { dso, nu },
        source => BenchError::Projection { dso, source },
    })?;
    let cols = model.coupling(0);
    let mut qp = model.qp.clone();
    qp.push_eq(&[(cols.end - 1, 1.0)], nu);
    let exchange_point = solve_qp(&qp, DEFAULT_TOL)
        .ok()
        .filter(|s| s.is_optimal())
        .map(|s| [s.x[cols.start], s.x[cols.start + 1]]);
    Ok(ForSlice { dso_index: dso, model_kind: kind, nu_value: nu, region_rows: region.rows(), vertices, exchange_point })
}

/// Write `for_dso{k}_{kind}.csv` and its JSON sidecar into `dir`.
pub fn export_for_slice(slice: &ForSlice, dir: &Path) -> Result<Vec<PathBuf>, BenchError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let stem = format!("for_dso{}_{}", slice.dso_index, slice.model_kind.short_name());
    let csv = dir.join(format!("{stem}.csv"));
    fs::write(&csv, for_polygon_csv(&slice.vertices)).map_err(io_err(&csv))?;
    let json = dir.join(format!("{stem}.json"));
    let body = serde_json::to_string_pretty(&slice.sidecar()).expect("sidecar serializes");
    fs::write(&json, body).map_err(io_err(&json))?;
    Ok(vec![csv, json])
}

/// A feeder file given on the command line as `PATH` or `PATH@TSO_BUS`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeederSource {
    pub path: PathBuf,
    pub tso_bus: Option<usize>,
}

impl std::str::FromStr for FeederSource {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.rsplit_once('@') {
            Some((path, bus)) => {
                let bus = bus
                    .parse()
                    .map_err(|_| BenchError::Input(format!("bad attachment bus in {s:?}")))?;
                Ok(FeederSource { path: path.into(), tso_bus: Some(bus) })
            }
            None => Ok(FeederSource { path: s.into(), tso_bus: None }),
        }
    }
}

fn format_of(path: &Path) -> Result<CaseFormat, BenchError> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("m") => Ok(CaseFormat::MatpowerM),
        Some("json") => Ok(CaseFormat::NativeJson),
        _ => Err(BenchError::Input(format!("{}: expected a .m or .json case", path.display()))),
    }
}

pub fn read_case(path: &Path) -> Result<crate::grid::GridCase, BenchError> {
    let format = format_of(path)?;
    let bytes = fs::read(path).map_err(io_err(path))?;
    Ok(load_case(&bytes, format)?)
}

/// Assemble a partition from case files. A single feeder without an
/// attachment bus is composed into the two-feeder study layout; otherwise
/// every feeder is attached as given at its `@TSO_BUS`.
pub fn load_partition(tso: &Path, feeders: &[FeederSource]) -> Result<Partition, BenchError> {
    let tso_case = read_case(tso)?;
    match feeders {
        [] => Err(BenchError::Input("at least one --dso case is required".into())),
        [only] if only.tso_bus.is_none() => Ok(compose_benchmark(&tso_case, &read_case(&only.path)?)?),
        _ => {
            let mut dsos = Vec::new();
            let mut links = Vec::new();
            for (k, f) in feeders.iter().enumerate() {
                let tso_bus = f.tso_bus.ok_or_else(|| {
                    BenchError::Input(format!("{}: attachment bus required (PATH@BUS)", f.path.display()))
                })?;
                if tso_case.bus(tso_bus).is_none() {
                    return Err(BenchError::Input(format!("TSO has no bus {tso_bus}")));
                }
                let case = read_case(&f.path)?;
                let root = case
                    .slack_bus()
                    .ok_or_else(|| BenchError::Input(format!("{}: no slack bus", f.path.display())))?;
                links.push(Interconnection { dso_index: k + 1, tso_bus, dso_root_bus: root, s_max: INTERFACE_RATING });
                dsos.push(case);
            }
            Ok(Partition { tso: tso_case, dsos, links })
        }
    }
}

/// A partition stored as one native JSON document.
pub fn read_partition(path: &Path) -> Result<Partition, BenchError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    let part: Partition = serde_json::from_slice(&bytes).map_err(GridError::from)?;
    for case in std::iter::once(&part.tso).chain(&part.dsos) {
        let v = crate::grid::validate(case);
        if !v.is_empty() {
            return Err(GridError::Validation(v).into());
        }
    }
    Ok(part)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::builtin_benchmark;

    fn sample_report() -> ComparisonReport {
        let rows = compare_rows()
            .into_iter()
            .enumerate()
            .map(|(k, (algorithm, ..))| ReportRow {
                algorithm,
                total_cost: if k == 3 { None } else { Some(4.0 + k as f64 * 0.125) },
                operations: k + 1,
                feasible: k != 3,
                error: (k == 3).then(|| "boom".to_string()),
            })
            .collect();
        ComparisonReport {
            rows,
            metadata: ReportMetadata {
                seed: 7,
                samples: 100,
                weight: 1e4,
                rho: 100.0,
                admm_tol: 1e-6,
                max_iter: 2000,
                qp_tol: 1e-8,
                physics: DsoModelKind::LossLinearized,
                version: "0".into(),
            },
            timing: ReportTiming { comp_time_s: vec![0.5; 6], setup_s: vec![0.25; 6] },
        }
    }

    #[test]
    fn compare_has_six_named_rows() {
        let names: Vec<String> = compare_rows().into_iter().map(|r| r.0).collect();
        assert_eq!(
            names,
            ["centralized", "admm", "adp_ll_quadratic", "adp_ll_none", "adp_ldf_quadratic", "adp_ldf_none"]
        );
    }

    #[test]
    fn csv_has_header_and_one_line_per_row() {
        let csv = sample_report().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 7);
        assert_eq!(lines[0], CSV_HEADER);
        let fields: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(fields, ["centralized", "4", "1", "0.5", "true"]);
        assert!(lines[4].starts_with("adp_ll_none,nan,4,"));
    }

    #[test]
    fn json_round_trip() {
        let r = sample_report();
        let back: ComparisonReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn reproducible_json_ignores_timing() {
        let a = sample_report();
        let mut b = a.clone();
        b.timing.comp_time_s[0] = 9.0;
        assert_eq!(a.reproducible_json(), b.reproducible_json());
        assert!(!a.reproducible_json().contains("comp_time_s"));
    }

    #[test]
    fn table_marks_failed_rows() {
        let t = sample_report().table();
        assert_eq!(t.lines().count(), 7);
        assert!(t.lines().nth(4).unwrap().contains("failed"));
    }

    #[test]
    fn feeder_source_parsing() {
        let f: FeederSource = "a/b.m@8".parse().unwrap();
        assert_eq!(f, FeederSource { path: "a/b.m".into(), tso_bus: Some(8) });
        let f: FeederSource = "x.json".parse().unwrap();
        assert_eq!(f.tso_bus, None);
        assert!("x.m@bus".parse::<FeederSource>().is_err());
    }

    #[test]
    fn unknown_extension_is_rejected() {
        assert!(matches!(format_of(Path::new("case.txt")), Err(BenchError::Input(_))));
    }

    #[test]
    fn centralized_on_benchmark() {
        let part = builtin_benchmark().unwrap();
        let r = run_centralized(&part, DsoModelKind::LossLinearized, DEFAULT_TOL).unwrap();
        assert_eq!(r.status, QpStatus::Optimal);
        assert!(r.kkt_residual <= DEFAULT_TOL);
        let parts = r.tso_cost + r.dso_costs.iter().sum::<f64>();
        assert!((parts - r.total_cost).abs() < 1e-9);
    }

    #[test]
    fn slice_outside_voltage_band_is_empty() {
        let part = builtin_benchmark().unwrap();
        let out = project_for(&part, DsoModelKind::LinDistFlow, 1.5);
        assert_eq!(out.len(), 2);
        for r in out {
            assert!(matches!(r, Err(BenchError::EmptySlice { .. })), "{r:?}");
        }
    }

    #[test]
    fn slice_at_flat_voltage_contains_exchange_point() {
        let part = builtin_benchmark().unwrap();
        for r in project_for(&part, DsoModelKind::LinDistFlow, 1.0) {
            let s = r.unwrap();
            let p = s.exchange_point.unwrap();
            let n = s.vertices.len();
            assert!(n >= 3);
            for i in 0..n {
                let (a, b) = (s.vertices[i], s.vertices[(i + 1) % n]);
                let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
                assert!(cross >= -1e-7, "point outside edge {i}");
            }
        }
    }
}
