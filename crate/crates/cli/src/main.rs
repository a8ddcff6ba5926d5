mod config;
mod pipeline;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use regiofit::prep::SmoothingSpec;
use regiofit::{FitWindow, RegionCode};
use thiserror::Error;

use config::{parse_window, PipelineConfig};
use pipeline::Workspace;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("solver failure: {0}")]
    Solver(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Solver(_) => 3,
        }
    }
}

/// Regional excess-mortality model pipeline.
#[derive(Parser)]
#[command(name = "regiofit", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// Pipeline configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Restrict to one region code; repeat for several.
    #[arg(long = "region", global = true)]
    regions: Vec<RegionCode>,
    /// Fit window as <start>:<end>, e.g. 2020-03-17:2020-04-28.
    #[arg(long, global = true, value_parser = parse_window)]
    window: Option<FitWindow>,
    /// Moving average as <days>:<centered|trailing>.
    #[arg(long, global = true)]
    smooth: Option<SmoothingSpec>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Convert raw source files into canonical CSV.
    Ingest,
    /// Build smoothed excess deaths and the corrected fitting signal.
    Prep,
    /// Fit the shared model to every selected region.
    Identify,
    /// Simulate the identified model.
    Simulate {
        /// Number of days from the window start (default: through the lag window).
        #[arg(long)]
        days: Option<usize>,
    },
    /// Fit lag and scale of each measured indicator against the model.
    Validate,
    /// Draw the named series, one SVG per region.
    Plot {
        /// Indicator tag to draw; repeat for several.
        #[arg(long = "series")]
        series: Vec<String>,
    },
    /// Run every stage and bundle the results with an index page.
    Report,
}

fn configure(global: &GlobalArgs) -> Result<PipelineConfig, CliError> {
    let mut cfg = match &global.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if !global.regions.is_empty() {
        cfg.regions = global.regions.clone();
    }
    if let Some(w) = global.window {
        cfg.window = w;
    }
    if let Some(s) = global.smooth {
        cfg.smoothing = s;
    }
    if let Some(out) = &global.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = configure(&cli.global)?;
    let mut ws = Workspace::new(cfg.output_dir.clone());
    let summary = match &cli.command {
        Command::Ingest => pipeline::ingest(&cfg, &mut ws)?,
        Command::Prep => pipeline::prep(&cfg, &mut ws)?,
        Command::Identify => pipeline::identify_stage(&cfg, &mut ws)?,
        Command::Simulate { days } => pipeline::simulate(&cfg, &mut ws, *days)?,
        Command::Validate => pipeline::validate(&cfg, &mut ws)?,
        Command::Plot { series } => pipeline::plot(&cfg, &mut ws, series)?,
        Command::Report => pipeline::report(&cfg, &mut ws)?,
    };
    for line in summary {
        match line.strip_prefix("warning: ") {
            Some(w) => eprintln!("warning: {w}"),
            None => println!("{line}"),
        }
    }
    for path in ws.commit()? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
