use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use flm_cli::config::{Experiment, OcpSection, RunConfig};
use flm_cli::{execute, parse_seeds, CliError, Result};
use flm_core::ocp::IcMode;

/// Fourier Learning Machine experiments.
#[derive(Debug, Parser)]
#[command(name = "flm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides FLM_OUT_DIR and the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seeds, e.g. `0..9` (inclusive) or `0,3,7`.
    #[arg(long)]
    seeds: Option<String>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train on one of the PDE problems.
    SolvePde {
        #[command(flatten)]
        common: Common,
        /// heat, poisson or gbs.
        #[arg(long)]
        problem: Option<String>,
    },
    /// Train the penalty-method controller.
    SolveOcp {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = ["fixed", "varying"])]
        mode: Option<String>,
    },
    /// Reference solutions of the optimal control problem by shooting.
    BvpRef {
        #[command(flatten)]
        common: Common,
    },
    /// Separable sine/cosine coefficients of a checkpoint.
    TranslateCoeffs {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Grid search over sub-networks, learning rates and betas.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        problem: Option<String>,
    },
    /// Run whatever experiment the config names.
    Run {
        #[command(flatten)]
        common: Common,
    },
}

fn base_config(common: &Common, experiment: Option<Experiment>) -> Result<RunConfig> {
    let mut cfg = match (&common.config, experiment) {
        (Some(path), _) => RunConfig::load(path)?,
        (None, Some(e)) => RunConfig::new(e),
        (None, None) => return Err(CliError::Config("`run` needs --config".into())),
    };
    if let Some(e) = experiment {
        if cfg.experiment != e {
            return Err(CliError::Config(format!(
                "config describes a {:?} experiment, not {e:?}",
                cfg.experiment
            )));
        }
    }
    if let Some(seeds) = &common.seeds {
        cfg.seeds = parse_seeds(seeds)?;
    }
    Ok(cfg)
}

fn out_dir(common: &Common, cfg: &RunConfig) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| std::env::var_os("FLM_OUT_DIR").map(PathBuf::from))
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("runs"))
}

fn prepare(command: Command) -> Result<(RunConfig, Common)> {
    Ok(match command {
        Command::SolvePde { common, problem } => {
            let mut cfg = base_config(&common, Some(Experiment::Pde))?;
            if problem.is_some() {
                cfg.problem = problem;
            }
            (cfg, common)
        }
        Command::Sweep { common, problem } => {
            let mut cfg = base_config(&common, Some(Experiment::Sweep))?;
            if problem.is_some() {
                cfg.problem = problem;
            }
            (cfg, common)
        }
        Command::SolveOcp { common, mode } => {
            let mut cfg = base_config(&common, Some(Experiment::Ocp))?;
            if let Some(mode) = mode {
                let mode: IcMode = mode.parse()?;
                match &mut cfg.ocp {
                    Some(section) => section.mode = mode,
                    None => cfg.ocp = Some(OcpSection::new(mode)),
                }
            }
            (cfg, common)
        }
        Command::BvpRef { common } => (base_config(&common, Some(Experiment::Bvp))?, common),
        Command::TranslateCoeffs { common, checkpoint } => {
            let mut cfg = base_config(&common, Some(Experiment::Translate))?;
            if checkpoint.is_some() {
                cfg.checkpoint = checkpoint;
            }
            (cfg, common)
        }
        Command::Run { common } => (base_config(&common, None)?, common),
    })
}

fn run(cli: Cli) -> Result<()> {
    let (cfg, common) = prepare(cli.command)?;
    let dir = out_dir(&common, &cfg);
    let mut cfg = cfg.resolve()?;
    cfg.out_dir = Some(dir.clone());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(common.threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let manifest = pool.install(|| execute(cfg, &dir))?;
    let failed = manifest
        .runs
        .iter()
        .filter(|r| r.status != flm_cli::Status::Ok)
        .count();
    eprintln!(
        "{} runs ({failed} not ok) in {:.1}s, manifest at {}",
        manifest.runs.len(),
        manifest.wall_s,
        dir.join("manifest.json").display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
