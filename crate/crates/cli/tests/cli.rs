use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn gridcoord(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gridcoord"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn data(name: &str) -> String {
    format!("{}/../core/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn run_centralized_writes_positive_cost() {
    let dir = tempfile::tempdir().unwrap();
    let o = gridcoord(&["run", "centralized", "--benchmark"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&dir.path().join("run_centralized.json"));
    assert_eq!(v["method"], "centralized");
    assert!(v["total_cost"].as_f64().unwrap() > 0.0);
}

#[test]
fn run_admm_converges() {
    let dir = tempfile::tempdir().unwrap();
    let o = gridcoord(&["run", "admm", "--benchmark", "--tol", "1e-6"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let v = json(&dir.path().join("run_admm.json"));
    assert_eq!(v["converged"], true);
    assert!(v["iterations"].as_u64().unwrap() >= 1);
    let hist = std::fs::read_to_string(dir.path().join("admm_history.csv")).unwrap();
    assert_eq!(hist.lines().next(), Some("iter,primal_tau,primal_delta,dual,cost"));
}

#[test]
fn adp_without_value_fn_costs_more() {
    let dir = tempfile::tempdir().unwrap();
    let cost = |vf: &str| {
        let o = gridcoord(&["run", "adp", "--benchmark", "--for-model", "ll", "--value-fn", vf], dir.path());
        assert_eq!(o.status.code(), Some(0));
        let v = json(&dir.path().join("run_adp.json"));
        assert_eq!(v["feasible"], true);
        v["total_cost"].as_f64().unwrap()
    };
    let with = cost("quadratic");
    let without = cost("none");
    assert!(without > with, "{without} vs {with}");
}

#[test]
fn compare_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let o = gridcoord(&["compare", "--benchmark", "--seed", "7"], dir.path());
        assert_eq!(o.status.code(), Some(0));
    }
    let strip = |d: &Path| {
        let mut v = json(&d.join("compare.json"));
        v.as_object_mut().unwrap().remove("timing");
        v.to_string()
    };
    assert_eq!(strip(a.path()), strip(b.path()));

    let csv = std::fs::read_to_string(a.path().join("compare.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 7);
    assert_eq!(lines[0], "algorithm,total_cost,operations,comp_time_s,feasible");
    for line in &lines[1..] {
        let f: Vec<&str> = line.split(',').collect();
        for x in &f[1..4] {
            assert!(x.parse::<f64>().unwrap().is_finite(), "{line}");
        }
    }
}

#[test]
fn project_for_writes_convex_polygons() {
    let dir = tempfile::tempdir().unwrap();
    let o = gridcoord(&["project-for", "--benchmark", "--for-model", "ldf", "--nu", "1"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    for k in [1, 2] {
        let csv = std::fs::read_to_string(dir.path().join(format!("for_dso{k}_ldf.csv"))).unwrap();
        let v: Vec<[f64; 2]> = csv
            .lines()
            .skip(1)
            .map(|l| {
                let (p, q) = l.split_once(',').unwrap();
                [p.parse().unwrap(), q.parse().unwrap()]
            })
            .collect();
        let n = v.len();
        assert!(n >= 3);
        for i in 0..n {
            let (a, b, c) = (v[i], v[(i + 1) % n], v[(i + 2) % n]);
            let cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
            assert!(cross >= -1e-12);
        }
        let side = json(&dir.path().join(format!("for_dso{k}_ldf.json")));
        assert_eq!(side["dso_index"], k);
        assert_eq!(side["nu_value"], 1.0);
    }
}

#[test]
fn project_for_outside_voltage_band_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = gridcoord(&["project-for", "--benchmark", "--nu", "1.5"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("empty"));
}

#[test]
fn misapplied_flag_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = gridcoord(&["run", "centralized", "--benchmark", "--rho", "5"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let o = gridcoord(&["run", "nonsense", "--benchmark"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn non_convergence_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = gridcoord(&["run", "admm", "--benchmark", "--max-iter", "3"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(json(&dir.path().join("run_admm.json"))["converged"], false);
}

#[test]
fn case_files_compose_like_the_builtin_layout() {
    let dir = tempfile::tempdir().unwrap();
    let (tso, dso) = (data("case9.m"), data("case15.m"));
    let o = gridcoord(&["run", "centralized", "--tso", &tso, "--dso", &dso], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&dir.path().join("run_centralized.json"));
    assert_eq!(v["dso_costs"].as_array().unwrap().len(), 2);
}

#[test]
fn explicit_attachment_buses() {
    let dir = tempfile::tempdir().unwrap();
    let tso = data("case9.m");
    let dso = format!("{}@5", data("case15.m"));
    let o = gridcoord(&["run", "centralized", "--tso", &tso, "--dso", &dso], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&dir.path().join("run_centralized.json"));
    assert_eq!(v["coupling"].as_array().unwrap().len(), 1);
}

#[test]
fn partition_document_matches_benchmark() {
    let dir = tempfile::tempdir().unwrap();
    let o = gridcoord(&["run", "centralized", "--partition", &data("benchmark.json")], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let a = json(&dir.path().join("run_centralized.json"))["total_cost"].as_f64().unwrap();
    let o = gridcoord(&["run", "centralized", "--benchmark"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let b = json(&dir.path().join("run_centralized.json"))["total_cost"].as_f64().unwrap();
    assert!((a - b).abs() <= 1e-9 * b.abs());
}
