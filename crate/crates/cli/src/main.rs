use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use hopgr::Metric;
use hopgr_cli::commands;
use hopgr_cli::{CliError, Mode, RunConfig};

#[derive(Parser)]
#[command(
    name = "hopgr",
    version,
    about = "Physiological Gabor orientation descriptors for finger-vein images"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// key=value config file; unset keys keep their defaults
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    #[arg(long, global = true, value_enum)]
    mode: Option<ModeArg>,

    #[arg(long, global = true, value_enum)]
    metric: Option<MetricArg>,

    /// Reject images whose size differs from roi_width x roi_height
    #[arg(long, global = true)]
    strict_dims: bool,

    /// Override a config key (repeatable), e.g. --set cell=8
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Learn the physiological directions from a training corpus
    LearnPrior,
    /// Extract descriptors for a dataset into an archive
    Extract,
    /// Score an archive and report the equal error rate
    Evaluate,
    /// Render a synthetic labeled dataset
    Synth,
    /// Print the effective configuration
    ShowConfig,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Physio,
    Uniform,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Euclidean,
    Chi2,
    Cosine,
}

fn build_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    for kv in &cli.overrides {
        let (k, v) = kv.split_once('=').ok_or_else(|| CliError::Config {
            line: 0,
            message: format!("--set expects KEY=VALUE, got `{kv}`"),
        })?;
        cfg.set(k.trim(), v.trim())
            .map_err(|message| CliError::Config { line: 0, message })?;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(mode) = cli.mode {
        cfg.mode = match mode {
            ModeArg::Physio => Mode::Physio,
            ModeArg::Uniform => Mode::Uniform,
        };
    }
    if let Some(metric) = cli.metric {
        cfg.metric = match metric {
            MetricArg::Euclidean => Metric::Euclidean,
            MetricArg::Chi2 => Metric::ChiSquare,
            MetricArg::Cosine => Metric::Cosine,
        };
    }
    if cli.strict_dims {
        cfg.roi = hopgr_cli::config::RoiPolicy::Strict;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = build_config(cli)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(CliError::Config {
                line: 0,
                message: "--workers must be >= 1".into(),
            });
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::Config {
        line: 0,
        message: format!("cannot start worker pool: {e}"),
    })?;

    pool.install(|| {
        let (mut out, mut log) = (std::io::stdout().lock(), std::io::stderr().lock());
        match cli.command {
            Command::LearnPrior => commands::learn_prior(&cfg, &mut out, &mut log),
            Command::Extract => commands::extract(&cfg, &mut out, &mut log),
            Command::Evaluate => commands::evaluate(&cfg, &mut out, &mut log),
            Command::Synth => commands::synth(&cfg, &mut out, &mut log),
            Command::ShowConfig => commands::show_config(&cfg, &mut out),
        }?;
        out.flush()?;
        Ok(())
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.report_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
