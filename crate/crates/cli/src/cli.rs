use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use shearless_core::entanglement::builtin_estimators;
use shearless_core::scheme::builtin_schemes;

use crate::config::{resolve, ConfigError, Overrides};
use crate::experiments::{experiments, reproduce_paper, run_experiment, RunError, PANELS};
use crate::plot::{emit_plot_script, FigureKind};

#[derive(Debug, Parser)]
#[command(name = "shearless", version, about = "Driven Harper spin-chain experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML configuration file; defaults apply to every missing key.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub omega: Option<f64>,
    #[arg(long, global = true)]
    pub j0: Option<usize>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub k0: Option<f64>,
    /// Smoothing width of the quasienergy spectrum.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub sigma: Option<f64>,
    /// Period count for sos, evolve, concurrence and ensemble.
    #[arg(long, global = true)]
    pub periods: Option<usize>,
    /// Ensemble RNG seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            output_dir: self.out.clone(),
            omega: self.omega,
            j0: self.j0,
            k0: self.k0,
            sigma: self.sigma,
            periods: self.periods,
            seed: self.seed,
        }
    }

    fn config_text(&self) -> Result<String, ConfigError> {
        match &self.config {
            None => Ok(String::new()),
            Some(path) => fs::read_to_string(path).map_err(|e| ConfigError::Read {
                path: path.display().to_string(),
                message: e.to_string(),
            }),
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classical surface of section.
    Sos,
    /// Wavepacket evolution P(j, t).
    Evolve,
    /// Local quasienergy spectrum.
    Floquet,
    /// Concurrence time series.
    Concurrence,
    /// Rotation-number profile and shearless momentum.
    Rotation,
    /// Classical ensemble spreading.
    Ensemble,
    /// Run every figure panel, each into its own subdirectory.
    ReproducePaper,
    /// Print the resolved configuration.
    Config,
    /// List experiments, integrators, concurrence estimators and figure kinds.
    List,
    /// Write a gnuplot script for an existing table.
    Plot {
        /// One of sos, heatmap, spectrum, concurrence, series.
        kind: String,
        csv: PathBuf,
    },
}

impl Command {
    fn experiment(&self) -> Option<&'static str> {
        Some(match self {
            Command::Sos => "sos",
            Command::Evolve => "evolve",
            Command::Floquet => "floquet",
            Command::Concurrence => "concurrence",
            Command::Rotation => "rotation",
            Command::Ensemble => "ensemble",
            _ => return None,
        })
    }
}

/// Column names: the first line of the table that is not a comment.
fn csv_columns(path: &Path) -> Result<Vec<String>, RunError> {
    let text = fs::read_to_string(path)?;
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap_or("");
    Ok(header.split(',').map(str::to_string).collect())
}

pub fn run(cli: &Cli) -> Result<(), RunError> {
    if let Some(name) = cli.command.experiment() {
        let (config, params) = resolve(&cli.common.config_text()?, &cli.common.overrides())?;
        for w in params.warnings() {
            eprintln!("warning: {w}");
        }
        for path in run_experiment(name, &config, &params, &config.output_dir)? {
            println!("{}", path.display());
        }
        return Ok(());
    }
    match &cli.command {
        Command::ReproducePaper => {
            let (config, _) = resolve(&cli.common.config_text()?, &cli.common.overrides())?;
            let mut worst: Option<RunError> = None;
            for outcome in reproduce_paper(&config, &PANELS) {
                let p = outcome.panel;
                match outcome.result {
                    Ok(files) => println!("{} {} omega={} k0={}: {} files", p.id, p.experiment, p.omega, p.k0, files.len()),
                    Err(e) => {
                        eprintln!("{} {} omega={} k0={}: {e}", p.id, p.experiment, p.omega, p.k0);
                        if worst.as_ref().is_none_or(|w| e.exit_code() > w.exit_code()) {
                            worst = Some(e);
                        }
                    }
                }
            }
            worst.map_or(Ok(()), Err)
        }
        Command::Config => {
            let (config, _) = resolve(&cli.common.config_text()?, &cli.common.overrides())?;
            print!("{}", config.to_toml());
            Ok(())
        }
        Command::List => {
            println!("experiments:");
            for e in experiments().iter() {
                println!("  {:<12} {}", e.name(), e.description());
            }
            println!("integrators:");
            for s in builtin_schemes().iter() {
                println!("  {:<12} order {}, {}", s.name(), s.order(), s.description());
            }
            println!("concurrence estimators:");
            for name in builtin_estimators().names() {
                println!("  {name}");
            }
            println!("figure kinds: {}", FigureKind::NAMES.join(", "));
            Ok(())
        }
        Command::Plot { kind, csv } => {
            kind.parse::<FigureKind>()?;
            let columns = csv_columns(csv)?;
            let dir = csv.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
            let stem = csv.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let path = emit_plot_script(dir, &stem, kind, std::slice::from_ref(csv), &columns)?;
            println!("{}", path.display());
            Ok(())
        }
        _ => unreachable!("experiment commands are handled above"),
    }
}
