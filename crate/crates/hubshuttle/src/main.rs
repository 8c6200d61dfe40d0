use clap::{Args, Parser, Subcommand, ValueEnum};
use hubshuttle::benders::{solve_benders, BendersConfig, BendersError};
use hubshuttle::cuts::BundlingScheme;
use hubshuttle::export::{
    network_dot, network_geojson, run_report, write_trace_csv, ReductionReport, SolveReport,
};
use hubshuttle::generator::{generate, GeneratorConfig};
use hubshuttle::instance::{CostParams, Instance};
use hubshuttle::monolith::{brute_force, solve_monolith, MonolithError};
use hubshuttle::preprocess::preprocess;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

/// Designs hub-and-shuttle transit networks: choose which hub-to-hub bus
/// legs to open so that leg costs plus optimal trip routings are minimal.
#[derive(Parser)]
#[command(name = "hubshuttle", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance and write it as JSON.
    Generate(GenerateArgs),
    /// Check an instance file for structural problems.
    Validate(ValidateArgs),
    /// Solve an instance and write result files.
    Solve(SolveArgs),
    /// Sweep solver configurations over seeded instances; one CSV row per run.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 30)]
    nodes: usize,
    #[arg(long, default_value_t = 5)]
    hubs: usize,
    #[arg(long, default_value_t = 100)]
    trips: usize,
    /// Time-vs-money weight in [0,1].
    #[arg(long)]
    alpha: Option<f64>,
    /// Output file; stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    instance: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Benders,
    Mip,
    Brute,
}

#[derive(Clone, Copy, ValueEnum)]
enum Toggle {
    On,
    Off,
}

impl Toggle {
    fn on(self) -> bool {
        matches!(self, Toggle::On)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    One,
    Multi,
    Hubs,
    Origin,
    Legs,
}

impl From<SchemeArg> for BundlingScheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::One => BundlingScheme::One,
            SchemeArg::Multi => BundlingScheme::Multi,
            SchemeArg::Hubs => BundlingScheme::Hubs,
            SchemeArg::Origin => BundlingScheme::Origin,
            SchemeArg::Legs => BundlingScheme::Legs,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    #[arg(long, value_enum, default_value_t = Method::Benders)]
    method: Method,
    #[arg(long, value_enum, default_value_t = SchemeArg::Multi)]
    bundling: SchemeArg,
    #[arg(long, value_enum, default_value_t = Toggle::On)]
    pareto: Toggle,
    #[arg(long = "core-update", value_enum, default_value_t = Toggle::On)]
    core_update: Toggle,
    #[arg(long, default_value_t = 0.5)]
    zeta: f64,
    #[arg(long = "max-iter", default_value_t = 100)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    gap: f64,
    /// Subproblem worker pool size; all cores when omitted.
    #[arg(long)]
    threads: Option<usize>,
    /// Override the instance's alpha.
    #[arg(long)]
    alpha: Option<f64>,
    /// Output prefix: writes PREFIX.json, PREFIX.dot, PREFIX.trace.csv and
    /// PREFIX.geojson (when coordinates exist). JSON also goes to stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 30)]
    nodes: usize,
    #[arg(long, default_value_t = 5)]
    hubs: usize,
    /// Comma-separated trip counts, one instance per count.
    #[arg(long, default_value = "100,200,400", value_delimiter = ',')]
    trips: Vec<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Also time the monolithic MIP on each instance.
    #[arg(long, default_value_t = false)]
    monolith: bool,
    /// Largest trip count the monolith is attempted on; its dense tableau
    /// grows quadratically with the instance.
    #[arg(long = "monolith-cap", default_value_t = 200)]
    monolith_cap: usize,
    #[arg(long = "max-iter", default_value_t = 100)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    gap: f64,
    #[arg(long)]
    threads: Option<usize>,
    /// Output CSV file; stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

enum CliError {
    /// Bad input data or arguments.
    Input(String),
    /// A solver broke its own contract.
    Solver(String),
}

impl CliError {
    fn code(&self) -> ExitCode {
        match self {
            CliError::Input(_) => ExitCode::from(1),
            CliError::Solver(_) => ExitCode::from(2),
        }
    }
    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Solver(m) => m,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(format!("io error: {e}"))
    }
}

impl From<BendersError> for CliError {
    fn from(e: BendersError) -> Self {
        match e {
            BendersError::BadMaxIter | BendersError::BadGapTol(_) => {
                CliError::Input(e.to_string())
            }
            BendersError::Subproblem(hubshuttle::subproblem::SubproblemError::BadZeta(_)) => {
                CliError::Input(e.to_string())
            }
            other => CliError::Solver(other.to_string()),
        }
    }
}

impl From<MonolithError> for CliError {
    fn from(e: MonolithError) -> Self {
        match e {
            MonolithError::TooManyHubs(_) => CliError::Input(e.to_string()),
            other => CliError::Solver(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Validate(args) => cmd_validate(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

fn set_threads(threads: Option<usize>) -> Result<(), CliError> {
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Input(format!("cannot size worker pool: {e}")))?;
    }
    Ok(())
}

fn load_instance(path: &PathBuf, alpha: Option<f64>) -> Result<Instance, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let mut inst: Instance = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("bad instance JSON: {e}")))?;
    if let Some(a) = alpha {
        inst.params.alpha = a;
    }
    let violations = inst.validate();
    let errors: Vec<_> = violations.iter().filter(|v| !v.is_warning()).collect();
    if !errors.is_empty() {
        let mut msg = String::from("instance is invalid:");
        for v in errors {
            let _ = write!(msg, "\n  {v}");
        }
        return Err(CliError::Input(msg));
    }
    for v in violations.iter().filter(|v| v.is_warning()) {
        eprintln!("warning: {v}");
    }
    inst.drop_self_loop_trips();
    Ok(inst)
}

fn cmd_generate(args: GenerateArgs) -> Result<(), CliError> {
    let params = CostParams {
        alpha: args.alpha.unwrap_or(CostParams::default().alpha),
        ..CostParams::default()
    };
    if !(0.0..=1.0).contains(&params.alpha) {
        return Err(CliError::Input(format!("alpha {} outside [0,1]", params.alpha)));
    }
    let inst = generate(
        args.seed,
        args.nodes,
        args.hubs,
        args.trips,
        params,
        GeneratorConfig::default(),
    )
    .map_err(|e| CliError::Input(e.to_string()))?;
    let json = serde_json::to_string_pretty(&inst).expect("instance always serializes");
    match args.out {
        Some(path) => fs::write(path, json)?,
        None => println!("{json}"),
    }
    Ok(())
}

fn cmd_validate(args: ValidateArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.instance)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", args.instance.display())))?;
    let inst: Instance = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("bad instance JSON: {e}")))?;
    let violations = inst.validate();
    for v in &violations {
        eprintln!("{}: {v}", if v.is_warning() { "warning" } else { "error" });
    }
    if violations.iter().any(|v| !v.is_warning()) {
        return Err(CliError::Input("instance is invalid".into()));
    }
    println!(
        "ok: {} nodes, {} hubs, {} trips",
        inst.n(),
        inst.hubs.len(),
        inst.trips.len()
    );
    Ok(())
}

fn cmd_solve(args: SolveArgs) -> Result<(), CliError> {
    set_threads(args.threads)?;
    let inst = load_instance(&args.instance, args.alpha)?;
    let report = match args.method {
        Method::Benders => {
            let config = BendersConfig {
                scheme: args.bundling.into(),
                pareto: args.pareto.on(),
                core_update: args.core_update.on(),
                zeta: args.zeta,
                max_iter: args.max_iter,
                gap_tol: args.gap,
                ..Default::default()
            };
            let run = solve_benders(&inst, &config)?;
            let trace_path = args
                .out
                .as_ref()
                .map(|p| with_suffix(p, ".trace.csv").display().to_string());
            if let Some(path) = &trace_path {
                let mut buf = Vec::new();
                write_trace_csv(&mut buf, &run.iterations)?;
                fs::write(path, buf)?;
            }
            run_report(&run, trace_path)
        }
        Method::Mip | Method::Brute => {
            let pre = preprocess(&inst);
            let (objective, open_legs) = if args.method == Method::Mip {
                let s = solve_monolith(&inst, args.gap.min(1e-9))?;
                (s.objective, s.open_legs)
            } else {
                let s = brute_force(&inst)?;
                (s.objective, s.open_legs)
            };
            SolveReport {
                status: "optimal",
                objective,
                lower_bound: objective,
                open_legs,
                iterations: 0,
                cuts_total: 0,
                dropped_cost: pre.dropped_cost,
                reductions: ReductionReport::from(&pre.stats),
                trace_path: None,
            }
        }
    };
    let json = serde_json::to_string_pretty(&report).expect("report always serializes");
    println!("{json}");
    if let Some(prefix) = &args.out {
        fs::write(with_suffix(prefix, ".json"), &json)?;
        fs::write(with_suffix(prefix, ".dot"), network_dot(&inst, &report.open_legs))?;
        if let Some(gj) = network_geojson(&inst, &report.open_legs) {
            fs::write(
                with_suffix(prefix, ".geojson"),
                serde_json::to_string_pretty(&gj).expect("geojson serializes"),
            )?;
        }
    }
    Ok(())
}

fn with_suffix(prefix: &PathBuf, suffix: &str) -> PathBuf {
    let mut s = prefix.clone().into_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

fn cmd_bench(args: BenchArgs) -> Result<(), CliError> {
    set_threads(args.threads)?;
    let params = CostParams {
        alpha: args.alpha.unwrap_or(CostParams::default().alpha),
        ..CostParams::default()
    };
    let mut csv = String::from(
        "trips,method,scheme,pareto,core_update,seed,status,objective,iterations,cuts,time_ms\n",
    );
    for &trips in &args.trips {
        let inst = generate(
            args.seed,
            args.nodes,
            args.hubs,
            trips,
            params,
            GeneratorConfig::default(),
        )
        .map_err(|e| CliError::Input(e.to_string()))?;
        for scheme in BundlingScheme::ALL {
            for pareto in [true, false] {
                let config = BendersConfig {
                    scheme,
                    pareto,
                    core_update: pareto,
                    max_iter: args.max_iter,
                    gap_tol: args.gap,
                    ..Default::default()
                };
                let t0 = Instant::now();
                let run = solve_benders(&inst, &config)?;
                let ms = t0.elapsed().as_millis();
                let scheme_name = serde_json::to_value(scheme)
                    .expect("scheme serializes")
                    .as_str()
                    .unwrap()
                    .to_string();
                let _ = writeln!(
                    csv,
                    "{trips},benders,{scheme_name},{},{},{},{},{:.6},{},{},{ms}",
                    pareto,
                    config.core_update,
                    args.seed,
                    match run.status {
                        hubshuttle::benders::BendersStatus::Optimal => "optimal",
                        hubshuttle::benders::BendersStatus::IterationLimit => "iteration-limit",
                    },
                    run.objective,
                    run.iterations.len(),
                    run.cuts_total,
                );
            }
        }
        if args.monolith && trips <= args.monolith_cap {
            let t0 = Instant::now();
            let s = solve_monolith(&inst, 1e-9)?;
            let ms = t0.elapsed().as_millis();
            let _ = writeln!(
                csv,
                "{trips},mip,-,-,-,{},optimal,{:.6},0,0,{ms}",
                args.seed, s.objective,
            );
        }
        eprintln!("bench: finished |T| = {trips}");
    }
    match args.out {
        Some(path) => fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}
