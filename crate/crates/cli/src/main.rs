//! `limbswing` command-line front end.
//!
//! Exit codes: 0 success, 2 invalid input, 3 infeasible or stalled solve,
//! 4 numerical failure.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use limbswing::checks::{check_model, CheckReport};
use limbswing::model_io::{resolve_model, BUILTIN_MODELS};
use limbswing::opt::{optimize_flight, playback, FlightConfig, FlightProblem, PlaybackReport, CONSTRAINT_LABELS};
use limbswing::solver::{SolveResult, SolverError, TerminationReason};
use limbswing::traj::{GammaFile, TrajectoryMatrix};
use limbswing::{Error, Result};

#[derive(Parser, Debug)]
#[command(
    name = "limbswing",
    version,
    about = "Flight-phase limb-swing trajectory optimization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Randomized consistency checks of a model's centroidal momentum matrix.
    CheckModel {
        /// Built-in id or URDF path.
        #[arg(long)]
        model: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Directory for check_report.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a flight problem and replay the result.
    Optimize {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Replay a stored trajectory.
    Playback {
        #[command(flatten)]
        run: RunArgs,
        /// Trajectory written by `optimize`.
        #[arg(long)]
        gamma: PathBuf,
    },
    /// Time repeated solves of one problem.
    Bench {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 20)]
        repeats: usize,
    },
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    /// Problem config, or a result.json whose `config` field is used.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's model.
    #[arg(long)]
    model: Option<String>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Recorded in the outputs; the solve itself uses no randomness.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    n_verify: Option<usize>,
    /// Measure the liftoff foot against the touchdown CoM.
    #[arg(long)]
    literal_constraint_3: bool,
}

#[derive(Debug, Serialize)]
struct RunManifest {
    command: &'static str,
    config: String,
    model: String,
    out: String,
    seed: u64,
}

#[derive(Serialize)]
struct ResultFile<'a> {
    manifest: &'a RunManifest,
    config: &'a FlightConfig,
    #[serde(flatten)]
    result: &'a SolveResult,
    gamma: &'a GammaFile,
    playback: &'a PlaybackReport,
}

#[derive(Debug, Serialize)]
struct BenchReport {
    manifest: RunManifest,
    repeats: usize,
    median_ms: f64,
    p95_ms: f64,
    min_ms: f64,
    max_ms: f64,
    /// Whether every repeat returned bit-identical variables.
    deterministic: bool,
    outer_iterations: usize,
    function_evaluations: usize,
    machine: Machine,
}

#[derive(Debug, Serialize)]
struct Machine {
    os: &'static str,
    arch: &'static str,
    cpu: Option<String>,
    available_parallelism: usize,
    debug_build: bool,
}

impl Machine {
    fn detect() -> Self {
        let cpu = fs::read_to_string("/proc/cpuinfo").ok().and_then(|s| {
            s.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split(':').nth(1))
                .map(|v| v.trim().to_owned())
        });
        Self {
            os: std::env::consts::OS,
            arch: std::env::consts::ARCH,
            cpu,
            available_parallelism: std::thread::available_parallelism().map_or(1, |n| n.get()),
            debug_build: cfg!(debug_assertions),
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Solver(SolverError::Infeasible { .. } | SolverError::LineSearchStall { .. }) => 3,
        Error::Solver(SolverError::NonFinite { .. }) | Error::IllConditioned { .. } => 4,
        _ => 2,
    }
}

/// Reads a config, accepting either a bare config or a result file.
fn read_config(args: &RunArgs) -> Result<FlightConfig> {
    let text = fs::read_to_string(&args.config)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let mut config: FlightConfig = match value.get("config") {
        Some(inner) => serde_json::from_value(inner.clone())?,
        None => serde_json::from_value(value)?,
    };
    if let Some(model) = &args.model {
        config.model = model.clone();
    } else if !BUILTIN_MODELS.contains(&config.model.as_str()) {
        // Model paths in a config are relative to the config file.
        let path = Path::new(&config.model);
        if path.is_relative() {
            if let Some(dir) = args.config.parent() {
                config.model = dir.join(path).to_string_lossy().into_owned();
            }
        }
    }
    if let Some(n) = args.n_verify {
        config.n_verify = n;
    }
    config.literal_constraint_3 |= args.literal_constraint_3;
    Ok(config)
}

fn problem(args: &RunArgs) -> Result<FlightProblem> {
    let config = read_config(args)?;
    let model = resolve_model(&config.model)?;
    FlightProblem::new(model, config)
}

fn manifest(command: &'static str, args: &RunArgs, problem: &FlightProblem) -> RunManifest {
    RunManifest {
        command,
        config: args.config.display().to_string(),
        model: problem.config.model.clone(),
        out: args.out.display().to_string(),
        seed: args.seed,
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn playback_text(problem: &FlightProblem, report: &PlaybackReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "model: {}", problem.config.model);
    let _ = writeln!(s, "flight time: {} s", problem.t_f());
    let _ = writeln!(s, "verification steps: {}", report.steps);
    let _ = writeln!(
        s,
        "touchdown angle: {:.6} rad ({:.3} deg)",
        report.touchdown_angle,
        report.touchdown_angle.to_degrees()
    );
    let _ = writeln!(s, "max residual: {:.3e}", report.max_residual);
    for (label, r) in CONSTRAINT_LABELS.iter().zip(&report.residuals) {
        let _ = writeln!(s, "  {label:<26} {r:+.3e}");
    }
    let _ = writeln!(s, "momentum drift: {:.3e}", report.momentum_drift);
    let _ = writeln!(s, "body peak |k_y|: {:.4e}", report.body_peak_k_y);
    for (limb, peak) in &report.limb_peak_k_y {
        let _ = writeln!(s, "  {limb:<26} {peak:.4e}");
    }
    let _ = writeln!(s, "body share below leg peaks: {}", report.body_share_bounded);
    s
}

fn write_flight(out: &Path, log: &limbswing::flight::FlightLog) -> Result<()> {
    log.write_csv(fs::File::create(out.join("flight.csv"))?)
}

fn run_optimize(args: &RunArgs) -> Result<u8> {
    let problem = problem(args)?;
    fs::create_dir_all(&args.out)?;
    let solution = optimize_flight(&problem)?;
    let manifest = manifest("optimize", args, &problem);
    let gamma = GammaFile::from_trajectory(&solution.trajectory, &problem.model);
    let r = &solution.result;
    write_json(
        &args.out.join("result.json"),
        &ResultFile {
            manifest: &manifest,
            config: &problem.config,
            result: r,
            gamma: &gamma,
            playback: &solution.report,
        },
    )?;
    write_json(&args.out.join("gamma.json"), &gamma)?;
    write_flight(&args.out, &solution.log)?;

    let mut text = playback_text(&problem, &solution.report);
    let _ = writeln!(text, "termination: {:?}", r.termination_reason);
    let _ = writeln!(text, "outer iterations: {}", r.outer_iterations);
    let _ = writeln!(text, "function evaluations: {}", r.function_evaluations);
    let _ = writeln!(text, "solve wall time: {:.3} ms", r.wall_time * 1e3);
    let _ = writeln!(text, "cost at solve resolution: {:.6e} rad", r.cost_star);
    fs::write(args.out.join("report.txt"), &text)?;
    print!("{text}");
    Ok(if r.termination_reason == TerminationReason::LineSearchStall {
        eprintln!("solve stalled in a line search; outputs hold the last feasible point");
        3
    } else {
        0
    })
}

fn run_playback(args: &RunArgs, gamma_path: &Path) -> Result<u8> {
    let problem = problem(args)?;
    let gamma: GammaFile = serde_json::from_str(&fs::read_to_string(gamma_path)?)?;
    let names: Vec<&str> = (0..problem.model.n()).map(|d| problem.model.dof_name(d)).collect();
    if gamma.joint_names != names {
        return Err(Error::InvalidInput(format!(
            "trajectory joints {:?} do not match the model's {:?}",
            gamma.joint_names, names
        )));
    }
    let traj: TrajectoryMatrix = gamma.to_trajectory()?;
    fs::create_dir_all(&args.out)?;
    let (log, report) = playback(&problem, &traj, problem.config.n_verify)?;
    write_flight(&args.out, &log)?;
    write_json(&args.out.join("playback.json"), &report)?;
    let text = playback_text(&problem, &report);
    fs::write(args.out.join("report.txt"), &text)?;
    print!("{text}");
    Ok(0)
}

fn percentile(sorted: &[f64], p: f64) -> f64 {
    // Nearest rank.
    let rank = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

fn run_bench(args: &RunArgs, repeats: usize) -> Result<u8> {
    if repeats == 0 {
        return Err(Error::InvalidInput("repeats must be at least 1".into()));
    }
    let problem = problem(args)?;
    let mut times = Vec::with_capacity(repeats);
    let mut first: Option<SolveResult> = None;
    let mut deterministic = true;
    for _ in 0..repeats {
        let r = optimize_flight(&problem)?.result;
        times.push(r.wall_time * 1e3);
        match &first {
            None => first = Some(r),
            Some(f) => {
                deterministic &= f.x_star.iter().zip(&r.x_star).all(|(a, b)| a.to_bits() == b.to_bits());
            }
        }
    }
    let first = first.expect("at least one repeat");
    times.sort_by(f64::total_cmp);
    let report = BenchReport {
        manifest: manifest("bench", args, &problem),
        repeats,
        median_ms: percentile(&times, 0.5),
        p95_ms: percentile(&times, 0.95),
        min_ms: times[0],
        max_ms: times[times.len() - 1],
        deterministic,
        outer_iterations: first.outer_iterations,
        function_evaluations: first.function_evaluations,
        machine: Machine::detect(),
    };
    fs::create_dir_all(&args.out)?;
    write_json(&args.out.join("bench.json"), &report)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(0)
}

fn check_text(report: &CheckReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "model: {} ({} samples, seed {})",
        report.model, report.samples, report.seed
    );
    let _ = writeln!(s, "max |A_v|: {:.3e}", report.max_abs_a_v);
    let _ = writeln!(s, "max A_omega identity residual: {:.3e}", report.max_a_omega_residual);
    let _ = writeln!(
        s,
        "min A_omega singular value: {:.3e}",
        report.min_a_omega_singular_value
    );
    let _ = writeln!(s, "max momentum error: {:.3e}", report.max_momentum_error);
    let _ = writeln!(s, "{}", if report.passed { "PASS" } else { "FAIL" });
    if let Some(f) = &report.first_failure {
        let _ = writeln!(s, "first failure: {}", serde_json::to_string(f).unwrap_or_default());
    }
    s
}

fn run_check(model: &str, seed: u64, samples: usize, out: Option<&Path>) -> Result<u8> {
    let model = resolve_model(model)?;
    let report = check_model(&model, samples, seed)?;
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        write_json(&dir.join("check_report.json"), &report)?;
    }
    print!("{}", check_text(&report));
    Ok(if report.passed { 0 } else { 4 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::CheckModel {
            model,
            seed,
            samples,
            out,
        } => run_check(model, *seed, *samples, out.as_deref()),
        Command::Optimize { run } => run_optimize(run),
        Command::Playback { run, gamma } => run_playback(run, gamma),
        Command::Bench { run, repeats } => run_bench(run, *repeats),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
