use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use gridcoord::adp::ValueMode;
use gridcoord::admm::history_csv;
use gridcoord::bench::{
    compare, export_for_slice, export_report, load_partition, project_for, read_partition, run_method,
    BenchError, FeederSource, Method, MethodResult, RunConfig,
};
use gridcoord::grid::builtin_benchmark;
use gridcoord::models::DsoModelKind;
use gridcoord::Partition;

const EXIT_DECLARED: u8 = 2;

#[derive(Parser)]
#[command(name = "gridcoord", version, about = "TSO-DSO OPF coordination benchmark")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one coordination method.
    Run {
        #[arg(value_enum)]
        method: MethodArg,
        #[command(flatten)]
        case: CaseArgs,
        #[command(flatten)]
        opts: MethodOpts,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run every method and write the comparison table.
    Compare {
        #[command(flatten)]
        case: CaseArgs,
        #[command(flatten)]
        opts: MethodOpts,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Export each feeder's operating region sliced at a fixed interface voltage.
    ProjectFor {
        #[command(flatten)]
        case: CaseArgs,
        #[arg(long, value_enum, default_value = "ldf")]
        for_model: ModelArg,
        /// Squared interface voltage of the slice.
        #[arg(long, default_value_t = 1.0)]
        nu: f64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct CaseArgs {
    /// Use the bundled 9-bus + 2x15-bus study system.
    #[arg(long, conflicts_with_all = ["tso", "partition"])]
    benchmark: bool,
    /// Partition stored as one native JSON document.
    #[arg(long, conflicts_with = "tso")]
    partition: Option<PathBuf>,
    /// Transmission case (.m or .json).
    #[arg(long, requires = "dso")]
    tso: Option<PathBuf>,
    /// Feeder case, `PATH` or `PATH@TSO_BUS`.
    #[arg(long, num_args = 1.., requires = "tso")]
    dso: Vec<String>,
}

#[derive(Args)]
struct MethodOpts {
    #[arg(long, value_enum)]
    for_model: Option<ModelArg>,
    #[arg(long, value_enum)]
    value_fn: Option<ValueFnArg>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Soft-penalty weight of the disaggregation step.
    #[arg(long)]
    weight: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    /// ADMM residual tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Feeder physics for the centralized solve, ADMM and disaggregation.
    #[arg(long, value_enum)]
    physics: Option<ModelArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Centralized,
    Admm,
    Adp,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Ldf,
    Ll,
}

impl From<ModelArg> for DsoModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Ldf => DsoModelKind::LinDistFlow,
            ModelArg::Ll => DsoModelKind::LossLinearized,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ValueFnArg {
    None,
    Quadratic,
}

impl CaseArgs {
    fn load(&self) -> Result<Partition> {
        if self.benchmark {
            return Ok(builtin_benchmark()?);
        }
        if let Some(p) = &self.partition {
            return Ok(read_partition(p)?);
        }
        let Some(tso) = &self.tso else {
            bail!("choose --benchmark, --partition FILE or --tso FILE --dso FILE...");
        };
        let feeders = self.dso.iter().map(|s| s.parse()).collect::<Result<Vec<FeederSource>, _>>()?;
        Ok(load_partition(tso, &feeders)?)
    }
}

impl MethodOpts {
    /// Reject flags that the chosen method would silently ignore.
    fn check_applicable(&self, method: Method) -> Result<()> {
        let adp_only = [
            ("--for-model", self.for_model.is_some()),
            ("--value-fn", self.value_fn.is_some()),
            ("--samples", self.samples.is_some()),
            ("--seed", self.seed.is_some()),
            ("--weight", self.weight.is_some()),
        ];
        let admm_only = [
            ("--rho", self.rho.is_some()),
            ("--tol", self.tol.is_some()),
            ("--max-iter", self.max_iter.is_some()),
        ];
        let check = |flags: &[(&str, bool)], allowed: bool, owner: &str| -> Result<()> {
            if let Some((name, _)) = flags.iter().find(|(_, set)| *set && !allowed) {
                bail!("{name} applies only to {owner}");
            }
            Ok(())
        };
        check(&adp_only, method == Method::Adp, "adp")?;
        check(&admm_only, method == Method::Admm, "admm")
    }

    fn config(&self, method: Method) -> RunConfig {
        let d = RunConfig::default();
        RunConfig {
            method,
            for_model: self.for_model.map_or(d.for_model, Into::into),
            value_mode: match self.value_fn {
                Some(ValueFnArg::None) => ValueMode::Zero,
                Some(ValueFnArg::Quadratic) | None => d.value_mode,
            },
            physics: self.physics.map_or(d.physics, Into::into),
            samples: self.samples.unwrap_or(d.samples),
            seed: self.seed.unwrap_or(d.seed),
            weight: self.weight.unwrap_or(d.weight),
            rho: self.rho.unwrap_or(d.rho),
            tol: self.tol.unwrap_or(d.tol),
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            qp_tol: d.qp_tol,
        }
    }
}

fn write(path: &Path, body: &str) -> Result<()> {
    fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}

fn cmd_run(method: MethodArg, case: &CaseArgs, opts: &MethodOpts, out: &Path) -> Result<bool> {
    let method = match method {
        MethodArg::Centralized => Method::Centralized,
        MethodArg::Admm => Method::Admm,
        MethodArg::Adp => Method::Adp,
    };
    opts.check_applicable(method)?;
    let part = case.load()?;
    let result = run_method(&part, &opts.config(method))?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let name = match method {
        Method::Centralized => "centralized",
        Method::Admm => "admm",
        Method::Adp => "adp",
    };
    write(&out.join(format!("run_{name}.json")), &serde_json::to_string_pretty(&result)?)?;
    if let MethodResult::Admm(r) = &result {
        write(&out.join("admm_history.csv"), &history_csv(&r.history))?;
    }
    println!(
        "{name}: total_cost {:.8} operations {} feasible {}",
        result.total_cost(),
        result.operations(),
        result.feasible()
    );
    Ok(result.feasible())
}

fn cmd_compare(case: &CaseArgs, opts: &MethodOpts, out: &Path) -> Result<bool> {
    if opts.for_model.is_some() || opts.value_fn.is_some() {
        bail!("compare sweeps --for-model and --value-fn itself");
    }
    let part = case.load()?;
    let report = compare(&part, &opts.config(Method::Centralized));
    export_report(&report, out)?;
    print!("{}", report.table());
    Ok(report.rows.iter().all(|r| r.feasible))
}

fn cmd_project_for(case: &CaseArgs, kind: ModelArg, nu: f64, out: &Path) -> Result<bool> {
    let part = case.load()?;
    let mut all_ok = true;
    for r in project_for(&part, kind.into(), nu) {
        match r {
            Ok(slice) => {
                let files = export_for_slice(&slice, out)?;
                println!("DSO {}: {} vertices -> {}", slice.dso_index, slice.vertices.len(), files[0].display());
            }
            Err(e @ BenchError::EmptySlice { .. }) => {
                eprintln!("{e}");
                all_ok = false;
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(all_ok)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GRIDCOORD_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool: {e}");
        }
    }
    let outcome = match &cli.command {
        Command::Run { method, case, opts, out } => cmd_run(*method, case, opts, out),
        Command::Compare { case, opts, out } => cmd_compare(case, opts, out),
        Command::ProjectFor { case, for_model, nu, out } => cmd_project_for(case, *for_model, *nu, out),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_DECLARED),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
