use std::path::PathBuf;
use std::process::ExitCode;

use binorm_gs::analysis::RadialFn;
use binorm_gs_cli::{emit_plot_data, result_files, run, ExperimentConfig, RunError, Task};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "binorm-gs", version, about = "Two-constraint NLS ground states and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Experiment config in flat `section.key = value` form.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Solver seed (overrides `solver.rng_seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to `BINORM_GS_THREADS`, then all cores.
    #[arg(long, global = true, env = "BINORM_GS_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every task in the config.
    Run,
    /// Minimize the configured problem.
    Solve,
    /// Compare e(α) with all splittings on a θ grid.
    ScanSubadd,
    /// Fit exponential tails of both components.
    DecayFit,
    /// Glue a trapped piece to a translated free piece and track the energy gap.
    GlueTest,
    /// Pohozaev residuals of the potential-free scalar problems.
    Pohozaev,
    /// Scan the pointwise interaction inequalities.
    CheckInequalities,
    /// Compare scaled convolutions with their limit.
    ConvLimit,
    /// Write plot CSVs for the results in `--out` (or the given files).
    EmitPlots { inputs: Vec<PathBuf> },
}

fn default_task(command: &Command, config: &ExperimentConfig) -> Option<Task> {
    let p = &config.problem;
    Some(match command {
        Command::Solve => Task::Solve { required: true },
        Command::ScanSubadd => Task::ScanSubadd {
            theta: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            required: true,
        },
        Command::DecayFit => Task::Decay {
            windows: Vec::new(),
            required: true,
        },
        Command::GlueTest => Task::Glue {
            separations: (8..=20).map(|d| d * 64).collect(),
            split: [p.alpha1 / 8.0, p.alpha2 / 8.0],
            required: true,
        },
        Command::Pohozaev => Task::Pohozaev { required: true },
        Command::CheckInequalities => Task::Inequalities {
            p: p.p3,
            eta: None,
            constant: None,
            x_max: 100.0,
            samples: 1000,
            resolution: 1e-3,
        },
        Command::ConvLimit => Task::Convolution {
            f: RadialFn::exp(2.0),
            g: RadialFn::exp(1.0),
            alpha: 0.0,
            beta: 1.0,
            gamma: 1.0,
            r: vec![20.0],
            omegas: vec![[1.0, 0.0], [-1.0, 0.0]],
        },
        Command::Run | Command::EmitPlots { .. } => return None,
    })
}

fn load(common: &Common, required: bool) -> Result<ExperimentConfig, String> {
    let mut config = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            ExperimentConfig::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None if required => return Err("--config is required".into()),
        None => ExperimentConfig::default(),
    };
    if let Some(out) = &common.out {
        config.output_dir = out.clone();
    }
    if let Some(seed) = common.seed {
        config.solver.rng_seed = seed;
    }
    Ok(config)
}

fn emit(common: &Common, inputs: &[PathBuf]) -> ExitCode {
    let dir = common.out.clone().unwrap_or_else(|| PathBuf::from("results"));
    let inputs = if inputs.is_empty() {
        match result_files(&dir) {
            Ok(files) => files,
            Err(e) => {
                eprintln!("{}: {e}", dir.display());
                return ExitCode::from(1);
            }
        }
    } else {
        inputs.to_vec()
    };
    let report = emit_plot_data(&inputs, &dir.join("plots"));
    for path in &report.written {
        println!("wrote {}", path.display());
    }
    for (path, problem) in &report.problems {
        eprintln!("{}: {problem}", path.display());
    }
    if report.problems.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    if let Command::EmitPlots { inputs } = &cli.command {
        return emit(&cli.common, inputs);
    }
    let is_run = matches!(cli.command, Command::Run);
    let mut config = match load(&cli.common, is_run) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Some(task) = default_task(&cli.command, &config) {
        let wanted = task.name();
        config.tasks.retain(|t| t.name() == wanted);
        if config.tasks.is_empty() {
            config.tasks.push(task);
        }
    }
    match run(&config) {
        Ok(summary) => {
            for t in &summary.tasks {
                println!("{}: {}", t.stem, t.summary);
            }
            println!("results in {}", summary.output_dir.display());
            let code = summary.exit_code();
            if code == 2 {
                eprintln!("not converged: {}", summary.unconverged_required().join(", "));
            }
            ExitCode::from(code as u8)
        }
        Err(e @ (RunError::Validation(_) | RunError::Config(_) | RunError::Grid(_))) => {
            eprintln!("invalid input: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
