//! Command-line front end for `phonon-eq`.
//!
//! [`run`] parses arguments, dispatches to one of the `cmd_*` functions and
//! writes results; it returns the process exit code so tests can drive the
//! whole pipeline in-process.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use phonon_eq::verify::VerifyOptions;

pub mod commands;
pub mod config;
pub mod error;

pub use commands::{
    cmd_curves, cmd_phase_diagram, cmd_solve, cmd_thresholds, cmd_verify, curves_csv, phase_csv,
    CurvesReport, PhaseCell, PhaseDiagram, SolveReport, SweepGrid, TGrid, ThresholdsReport,
};
pub use config::{CommonArgs, ModelKind, OutputFormat, RunConfig, Statistics};
pub use error::{exit, CliError};

#[derive(Debug, Parser)]
#[command(name = "phonon-eq", version, about = "Entropy maximizers of kinetic wave equations on lattice tori")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Entropy maximizer for one (mass, energy) target.
    Solve {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Condensation thresholds a, alpha, beta and I.
    Thresholds {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Sampled boundary curves of the Bose-Einstein region.
    Curves {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        t_min: Option<f64>,
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long)]
        t_count: Option<usize>,
    },
    /// Regime of every cell of a rectangular (M, E) grid, as CSV.
    PhaseDiagram {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        grid: GridArgs,
        /// Companion `curve,t,M,E` file; defaults to `<output>.curves.csv`
        /// when `--output` is given.
        #[arg(long)]
        curves_output: Option<PathBuf>,
    },
    /// Run the invariant battery; exit 1 if any check fails.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Inject a fault into one check.
        #[arg(long)]
        corrupt: Option<Corruption>,
        /// Use the printed low-energy classical formulas.
        #[arg(long)]
        paper_literal: bool,
        #[arg(long, default_value_t = VerifyOptions::default().seed)]
        seed: u64,
        /// Random cases per randomized check.
        #[arg(long, default_value_t = VerifyOptions::default().samples)]
        samples: usize,
        /// Also write the report as JSON here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Corruption {
    /// Scale every computed mass by 1.01 in the `μE + νM` identity check.
    Identity,
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct GridArgs {
    #[arg(long)]
    pub m_min: Option<f64>,
    #[arg(long)]
    pub m_max: Option<f64>,
    #[arg(long)]
    pub m_steps: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub e_min: Option<f64>,
    #[arg(long)]
    pub e_max: Option<f64>,
    #[arg(long)]
    pub e_steps: Option<usize>,
}

impl GridArgs {
    fn apply(&self, mut g: SweepGrid) -> SweepGrid {
        g.m_min = self.m_min.unwrap_or(g.m_min);
        g.m_max = self.m_max.unwrap_or(g.m_max);
        g.m_steps = self.m_steps.unwrap_or(g.m_steps);
        g.e_min = self.e_min.unwrap_or(g.e_min);
        g.e_max = self.e_max.unwrap_or(g.e_max);
        g.e_steps = self.e_steps.unwrap_or(g.e_steps);
        g
    }
}

/// Parse `args` (including the program name), run, and return the exit
/// code. Results go to `out` or the `--output` file; errors go to `err` as
/// one JSON line.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => exit::OK,
                _ => exit::OTHER,
            };
            let _ = if code == exit::OK {
                write!(out, "{e}")
            } else {
                write!(err, "{e}")
            };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "{}", e.to_json());
            e.exit_code()
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<i32, CliError> {
    match command {
        Command::Solve { common } => {
            let cfg = RunConfig::resolve(&common)?;
            let report = cmd_solve(&cfg)?;
            emit(&cfg, out, &json(&report)?)?;
            commands::check_residuals(&report)?;
            Ok(exit::OK)
        }
        Command::Thresholds { common } => {
            let cfg = RunConfig::resolve(&common)?;
            emit(&cfg, out, &json(&cmd_thresholds(&cfg)?)?)?;
            Ok(exit::OK)
        }
        Command::Curves {
            common,
            t_min,
            t_max,
            t_count,
        } => {
            let cfg = RunConfig::resolve(&common)?;
            let grid = if t_min.is_some() || t_max.is_some() || t_count.is_some() {
                let g = TGrid {
                    t_min: t_min.unwrap_or(1e-3),
                    t_max: t_max.unwrap_or(50.0),
                    count: t_count.unwrap_or(200),
                };
                if !(g.t_min > 0.0 && g.t_min < g.t_max && g.count >= 2) {
                    return Err(CliError::Usage(format!("invalid t grid {g:?}")));
                }
                Some(g)
            } else {
                None
            };
            let report = cmd_curves(&cfg, grid)?;
            let text = match cfg.format {
                OutputFormat::Json => json(&report)?,
                OutputFormat::Csv => curves_csv(&report.curves),
            };
            emit(&cfg, out, &text)?;
            Ok(exit::OK)
        }
        Command::PhaseDiagram {
            common,
            grid,
            curves_output,
        } => {
            let cfg = RunConfig::resolve(&common)?;
            let omega = cfg.dispersion()?;
            let sweep = grid.apply(SweepGrid::default_for(&omega));
            let diagram = cmd_phase_diagram(&cfg, Some(sweep))?;
            let text = match cfg.format {
                OutputFormat::Csv => phase_csv(&diagram),
                // CSV is the contract for sweeps; JSON is offered as well.
                OutputFormat::Json if common.format.is_none() => phase_csv(&diagram),
                OutputFormat::Json => json(&diagram)?,
            };
            emit(&cfg, out, &text)?;
            let companion = curves_output.or_else(|| cfg.output.as_deref().map(companion_path));
            if let Some(path) = companion {
                std::fs::write(&path, curves_csv(&diagram.curves))
                    .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            }
            Ok(exit::OK)
        }
        Command::Verify {
            common,
            corrupt,
            paper_literal,
            seed,
            samples,
            report,
        } => {
            let cfg = RunConfig::resolve(&common)?;
            let opts = VerifyOptions {
                seed,
                samples,
                corrupt_identity: corrupt == Some(Corruption::Identity),
                paper_literal,
            };
            let result = cmd_verify(&cfg, opts)?;
            emit(&cfg, out, &commands::verify_text(&result))?;
            if let Some(path) = report {
                std::fs::write(&path, json(&result)?)
                    .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            }
            Ok(if result.all_passed() {
                exit::OK
            } else {
                exit::VERIFY_FAILED
            })
        }
    }
}

/// `out.csv` → `out.curves.csv`.
pub fn companion_path(output: &Path) -> PathBuf {
    let stem = output.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    output.with_file_name(format!("{stem}.curves.csv"))
}

fn json<T: serde::Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn emit(cfg: &RunConfig, out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    match &cfg.output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => Ok(out.write_all(text.as_bytes())?),
    }
}
