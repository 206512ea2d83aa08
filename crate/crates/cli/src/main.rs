//! Command-line runner: simulate scenes, compare paired runs, validate
//! configurations.
//!
//! Exit codes: 0 success, 2 configuration/input error, 3 numerical
//! divergence (non-finite state, reported with the first offending step).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use vortiflow::diagnostics;
use vortiflow::sceneio;
use vortiflow::sim::{RunOptions, Simulation, SolverKind};
use vortiflow::Error;

#[derive(Parser)]
#[command(name = "vortiflow", version, about = "SPH fluid simulator with vorticity refinement")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scene and write snapshots plus diagnostics.csv.
    Run(RunArgs),
    /// Compare the diagnostics of two finished runs (baseline second).
    Compare(CompareArgs),
    /// Load and validate a scene without simulating.
    Validate(ValidateArgs),
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum SolverChoice {
    Baseline,
    Vr,
}

#[derive(Args)]
struct RunArgs {
    /// Scene configuration file (JSON).
    #[arg(long)]
    scene: PathBuf,

    /// Solver to advance the fluid with.
    #[arg(long, value_enum, default_value = "vr")]
    solver: SolverChoice,

    /// Vorticity refinement gain; overrides the scene value.
    #[arg(long)]
    alpha: Option<f64>,

    /// Time step in seconds; overrides the scene value.
    #[arg(long)]
    dt: Option<f64>,

    /// Number of steps to simulate.
    #[arg(long, conflicts_with = "duration")]
    steps: Option<u64>,

    /// Simulated duration in seconds (converted to steps, rounding up).
    #[arg(long)]
    duration: Option<f64>,

    /// Output directory; overrides the scene value.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Steps between snapshots; overrides the scene value. 0 disables.
    #[arg(long)]
    snapshot_every: Option<u64>,

    /// Single-threaded ordered sweeps and zeroed timing columns; repeated
    /// runs produce bitwise-identical outputs.
    #[arg(long)]
    deterministic: bool,

    /// Worker thread count (0 = all cores).
    #[arg(long, env = "VORTIFLOW_THREADS", default_value_t = 0)]
    threads: usize,
}

#[derive(Args)]
struct CompareArgs {
    /// Directory of the candidate run (e.g. the VR run).
    run_a: PathBuf,
    /// Directory of the baseline run.
    run_b: PathBuf,
    /// Write the comparison CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Scene configuration file (JSON).
    #[arg(long)]
    scene: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Validate(args) => cmd_validate(args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Diverged { .. } => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn cmd_run(args: RunArgs) -> Result<ExitCode, Error> {
    let threads = if args.deterministic { 1 } else { args.threads };
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    }

    let mut config = sceneio::load_scene(&args.scene)?;
    if let Some(alpha) = args.alpha {
        config.solver.alpha = Some(alpha);
    }
    if let Some(dt) = args.dt {
        config.solver.dt = Some(dt);
    }
    let params = config.sim_params()?;

    if params.alpha > 1.2 {
        eprintln!(
            "warning: alpha = {} exceeds 1.2; gains this large risk non-convergence \
             (the energy added can keep the fluid from settling)",
            params.alpha
        );
    }

    let steps = match (args.steps, args.duration) {
        (Some(steps), None) => steps,
        (None, Some(duration)) => {
            if !(duration > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "duration must be positive, got {duration}"
                )));
            }
            (duration / params.dt - 1e-9).ceil() as u64
        }
        (None, None) => {
            return Err(Error::InvalidInput(
                "exactly one of --steps or --duration is required".into(),
            ))
        }
        (Some(_), Some(_)) => unreachable!("clap enforces the conflict"),
    };

    let kind = match args.solver {
        SolverChoice::Baseline => SolverKind::Baseline,
        SolverChoice::Vr => SolverKind::Vr,
    };
    let mut sim = Simulation::from_scene(&config, kind)?;
    sim.deterministic = args.deterministic;

    let options = RunOptions {
        output_dir: Some(args.out.unwrap_or(config.output_directory.clone())),
        snapshot_every: args.snapshot_every.unwrap_or(config.snapshot_every),
    };
    let summary = sim.run(steps, &options)?;

    if summary.cfl_violations > 0 {
        eprintln!(
            "warning: dt exceeded 0.4 h / |v|_max on {} of {} steps (first at step {}); \
             fixed stepping keeps timings comparable, results may lose accuracy",
            summary.cfl_violations,
            summary.steps,
            sim.first_cfl_step.unwrap_or(0)
        );
    }
    if summary.density_non_converged > 0 || summary.divergence_non_converged > 0 {
        eprintln!(
            "warning: solver hit the iteration cap without converging \
             (density: {} steps, divergence: {} steps)",
            summary.density_non_converged, summary.divergence_non_converged
        );
    }
    println!(
        "{} particles, {} steps, {:.1} s total",
        summary.particles, summary.steps, summary.wall_seconds
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_compare(args: CompareArgs) -> Result<ExitCode, Error> {
    let candidate = diagnostics::read_csv(&args.run_a.join("diagnostics.csv"))?;
    let baseline = diagnostics::read_csv(&args.run_b.join("diagnostics.csv"))?;
    let comparison = diagnostics::compare_runs(&candidate, &baseline)?;

    match &args.out {
        Some(path) => {
            let file = std::fs::File::create(path)?;
            diagnostics::write_comparison(&comparison, std::io::BufWriter::new(file))?;
        }
        None => {
            let stdout = std::io::stdout();
            diagnostics::write_comparison(&comparison, stdout.lock())?;
        }
    }
    eprintln!(
        "integrated enstrophy ratio {:.4}, active-window [10%,70%] {:.4}, \
         final-window mean energy ratio {:.4}",
        comparison.integrated_enstrophy_ratio,
        comparison.active_window_enstrophy_ratio,
        comparison.final_window_energy_ratio
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(args: ValidateArgs) -> Result<ExitCode, Error> {
    let config = sceneio::load_scene(&args.scene)?;
    let params = config.sim_params()?;
    let state = sceneio::emit_fluid_particles(&config)?;
    let boundary = config.build_boundary()?;

    let n_fluid = state.len();
    let n_boundary = boundary.len();
    // State arrays, solver scratch, vorticity fields, and the pair caches
    // at ~35 fluid pairs per particle.
    let per_fluid = 10 * 24 + 4 * 8 + 6 * 24;
    let pair_bytes = 2 * 35 * (24 + 8 + 4);
    let per_boundary = 2 * 24 + 2 * 8;
    let estimate_mb = (n_fluid * (per_fluid + pair_bytes) + n_boundary * per_boundary) as f64
        / (1024.0 * 1024.0);

    println!(
        "scene ok: {n_fluid} fluid particles, {n_boundary} boundary particles, \
         dt = {} s, h = {} m, ~{estimate_mb:.0} MB estimated",
        params.dt, params.h
    );
    Ok(ExitCode::SUCCESS)
}
