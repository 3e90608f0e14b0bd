use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use exploration_design::mc::DesignMode;
use exploration_design::StrategyKind;
use exploration_design_cli::commands::{self, strategy_from};
use exploration_design_cli::output::OutputDir;
use exploration_design_cli::{CliError, Overrides, RunConfig};

#[derive(Parser)]
#[command(
    name = "xdesign",
    version,
    about = "Exploration schedule design and Monte Carlo evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML configuration file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed of the noise bank.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Run a single system instead of the configured list.
    #[arg(long, global = true, allow_hyphen_values = true)]
    theta0: Option<f64>,

    #[arg(long, global = true, value_enum)]
    design: Option<DesignArg>,

    /// Use the true parameter in design-time formulas.
    #[arg(long, global = true)]
    oracle_design: Option<bool>,

    /// Worker threads (default: all cores). Outputs do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum DesignArg {
    A,
    B,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal lazy-or-immediate schedule per system and family.
    Plan,
    /// Immediate-exploration condition per system and family.
    CheckCondition,
    /// Simulate one fixed strategy.
    Simulate {
        #[arg(long)]
        strategy: StrategyKind,
        /// Comma-separated: x for immediate strategies, `c,p` for decaying.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        tuning: Vec<f64>,
    },
    /// Tuned regret table and trajectories for all systems.
    Reproduce,
    /// Exhaustive small-horizon structure check.
    Verify {
        #[arg(long)]
        verbose: bool,
    },
    /// Dump every grid-search point.
    Sweep,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let overrides = Overrides {
        seed: cli.seed,
        theta0: cli.theta0,
        design: cli.design.map(|d| match d {
            DesignArg::A => DesignMode::A,
            DesignArg::B => DesignMode::B,
            DesignArg::Both => DesignMode::Both,
        }),
        oracle_design: cli.oracle_design,
    };
    let cfg = RunConfig::load(cli.config.as_deref(), &overrides)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        builder = builder.num_threads(j);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let out = OutputDir::create(&cli.out)?;
    let manifest = pool.install(|| {
        let w = &mut std::io::stdout().lock();
        match cli.command {
            Command::Plan => commands::cmd_plan(&cfg, out, w),
            Command::CheckCondition => commands::cmd_check_condition(&cfg, out, w),
            Command::Simulate { strategy, tuning } => {
                let s = strategy_from(strategy, &tuning)?;
                commands::cmd_simulate(&cfg, s, out, w)
            }
            Command::Reproduce => commands::cmd_reproduce(&cfg, out, w),
            Command::Verify { verbose } => commands::cmd_verify(&cfg, verbose, out, w),
            Command::Sweep => commands::cmd_sweep(&cfg, out, w),
        }
    })?;
    log::info!(
        "wrote {} file(s) to {} in {:.1}s",
        manifest.outputs.len(),
        cli.out.display(),
        manifest.wall_time_seconds
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
