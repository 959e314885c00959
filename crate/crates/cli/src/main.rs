use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use poseamm::bench::{generate_scene, parse_noise_grid, run_sweep, summarize, ProblemKind, SceneConfig, SweepConfig};
use poseamm::io::{format_pose, format_solution, format_sweep_csv, parse_vec3, read_correspondence_file, write_correspondence_file};
use poseamm::{estimate_pose, AmmConfig, InitKind, SolveError, SolverKind};

/// Pose estimation by alternating minimization: benchmark sweeps and single solves.
#[derive(Parser)]
#[command(name = "poseamm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a noise sweep on synthetic scenes and write per-trial CSV.
    Bench(BenchArgs),
    /// Solve one problem read from a correspondence file.
    Solve(SolveArgs),
    /// Write a synthetic scene to a correspondence file and print its true pose.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct SolverOpts {
    /// Initializer: linear or identity.
    #[arg(long, default_value = "linear", value_parser = parse_init)]
    init: InitKind,
    /// Outer stop threshold on the objective change.
    #[arg(long)]
    tol: Option<f64>,
    /// Outer iteration cap.
    #[arg(long)]
    max_iters: Option<usize>,
    /// Use the exact translation minimizer instead of the gradient solve.
    #[arg(long)]
    closed_form_t: bool,
}

impl SolverOpts {
    fn amm_config(&self) -> Result<AmmConfig, String> {
        let mut cfg = AmmConfig::default();
        if let Some(t) = self.tol {
            cfg.tol_outer = t;
        }
        if let Some(k) = self.max_iters {
            cfg.max_outer_iters = k;
        }
        cfg.use_closed_form_translation = self.closed_form_t;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct BenchArgs {
    /// relative-noncentral, absolute-central or absolute-noncentral.
    #[arg(value_parser = parse_problem)]
    problem: ProblemKind,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    /// Noise levels in pixels as min:step:max, inclusive.
    #[arg(long, default_value = "0:1:10")]
    noise: String,
    #[arg(long, default_value_t = 20)]
    points: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Solver to run; repeat for several. Defaults to every solver suited to the problem.
    #[arg(long = "solver", value_parser = parse_solver)]
    solvers: Vec<SolverKind>,
    #[command(flatten)]
    solver: SolverOpts,
    /// Append per-level mean rows.
    #[arg(long)]
    summary: bool,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write 0 in the time column so repeated runs are byte-identical.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_parser = parse_solver)]
    solver: SolverKind,
    /// Initial translation as x,y,z, overriding the initializer's.
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    t0: Option<poseamm::Vec3>,
    #[command(flatten)]
    opts: SolverOpts,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(value_parser = parse_problem)]
    problem: ProblemKind,
    #[arg(long, default_value_t = 20)]
    points: usize,
    /// Pixel noise standard deviation.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn parse_problem(s: &str) -> Result<ProblemKind, String> {
    s.parse()
}

fn parse_solver(s: &str) -> Result<SolverKind, String> {
    s.parse()
}

fn parse_init(s: &str) -> Result<InitKind, String> {
    s.parse()
}

enum Failure {
    Usage(String),
    Runtime(String),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let outcome = match cli.command {
        Command::Bench(args) => bench(args),
        Command::Solve(args) => solve(args),
        Command::Generate(args) => generate(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn threads_from_env() -> Result<usize, Failure> {
    match std::env::var("POSEAMM_THREADS") {
        Ok(v) => v.trim().parse().map_err(|_| Failure::Usage(format!("POSEAMM_THREADS must be a count, got '{v}'"))),
        Err(_) => Ok(0),
    }
}

fn bench(args: BenchArgs) -> Result<(), Failure> {
    let mut cfg = SweepConfig::new(args.problem);
    cfg.noise_levels = parse_noise_grid(&args.noise).map_err(Failure::Usage)?;
    cfg.trials = args.trials;
    cfg.scene = SceneConfig { num_correspondences: args.points, seed: args.seed, ..SceneConfig::default() };
    if !args.solvers.is_empty() {
        cfg.solvers = args.solvers;
    }
    cfg.init = args.solver.init;
    cfg.amm = args.solver.amm_config().map_err(Failure::Usage)?;
    cfg.record_timing = !args.no_timing;
    cfg.threads = threads_from_env()?;
    cfg.validate().map_err(Failure::Usage)?;

    let rows = run_sweep(&cfg);
    if !rows.is_empty() && rows.iter().all(|r| r.final_objective.is_nan()) {
        return Err(Failure::Runtime("every trial failed".into()));
    }
    let summary = if args.summary { summarize(&rows) } else { Vec::new() };
    let csv = format_sweep_csv(&rows, &summary);
    match args.out {
        Some(path) => std::fs::write(&path, csv)
            .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(csv.as_bytes())
            .map_err(|e| Failure::Runtime(format!("cannot write output: {e}"))),
    }
}

fn solve(args: SolveArgs) -> Result<(), Failure> {
    let data = read_correspondence_file(&args.input).map_err(|e| match e {
        poseamm::io::IoError::Io(err) => Failure::Usage(format!("cannot read {}: {err}", args.input.display())),
        other => Failure::Usage(format!("{}: {other}", args.input.display())),
    })?;
    let cfg = args.opts.amm_config().map_err(Failure::Usage)?;
    match estimate_pose(args.solver, &data, args.opts.init, args.t0, &cfg) {
        Ok(res) => {
            print!("{}", format_solution(&res));
            Ok(())
        }
        Err(e @ SolveError::KindMismatch { .. }) => Err(Failure::Usage(e.to_string())),
        Err(SolveError::Pose(e)) => Err(Failure::Runtime(format!("{e:?}: {e}"))),
    }
}

fn generate(args: GenerateArgs) -> Result<(), Failure> {
    let cfg = SceneConfig {
        num_correspondences: args.points,
        noise_sigma_px: args.noise,
        seed: args.seed,
        ..SceneConfig::default()
    };
    cfg.validate().map_err(Failure::Usage)?;
    let scene = generate_scene(args.problem, &cfg);
    write_correspondence_file(&args.out, &scene.data)
        .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", args.out.display())))?;
    print!("{}", format_pose(&scene.ground_truth));
    Ok(())
}
