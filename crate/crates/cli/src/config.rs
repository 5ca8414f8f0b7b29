//! Run configuration: command-line flags layered over an optional
//! `key=value` config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use phonon_eq::{
    cusp_model, from_coupling, nn_dispersion, nnn_dispersion, CouplingStencil, CuspLocation,
    DispersionRelation, QuadratureSpec,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Nn,
    Nnn,
    Cusp,
    CouplingFile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistics {
    Classical,
    Quantum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Location {
    Bottom,
    Top,
}

impl From<Location> for CuspLocation {
    fn from(l: Location) -> Self {
        match l {
            Location::Bottom => CuspLocation::Bottom,
            Location::Top => CuspLocation::Top,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

/// Flags shared by every subcommand. All are optional here so that config
/// file values can fill the gaps.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Dispersion model.
    #[arg(long)]
    pub model: Option<ModelKind>,
    /// Lattice dimension.
    #[arg(long = "d", alias = "dimension")]
    pub dimension: Option<usize>,
    /// Pinning frequency ω₀ (nn and nnn only).
    #[arg(long, alias = "omega0")]
    pub pinning: Option<f64>,
    /// Cusp exponent s in (0, 1] (cusp only).
    #[arg(long = "s", alias = "exponent")]
    pub exponent: Option<f64>,
    /// Which extremum carries the cusp (cusp only).
    #[arg(long)]
    pub location: Option<Location>,
    /// Coupling stencil file (coupling-file only).
    #[arg(long)]
    pub coupling: Option<PathBuf>,
    #[arg(long = "stat", alias = "statistics")]
    pub statistics: Option<Statistics>,
    #[arg(long, allow_negative_numbers = true)]
    pub mass: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub energy: Option<f64>,
    /// Relative tolerance of every integral.
    #[arg(long)]
    pub rel_tol: Option<f64>,
    /// Points per axis on the coarsest quadrature level.
    #[arg(long)]
    pub base_points: Option<usize>,
    /// Dyadic refinements allowed beyond the base level.
    #[arg(long)]
    pub max_refinements: Option<usize>,
    #[arg(long)]
    pub format: Option<OutputFormat>,
    /// Write the primary output here instead of stdout.
    #[arg(long, short = 'o')]
    pub output: Option<PathBuf>,
    /// `key=value` file whose entries are used for flags not given.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Parsed `key=value` lines; `#` starts a comment, keys use the long flag
/// names (`d`, `s`, `stat`, `rel-tol`, ...).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("config line {}: expected key=value", no + 1))
            })?;
            let key = k.trim().replace('_', "-");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CliError::Usage(format!("config line {}: unknown key {key:?}", no + 1)));
            }
            entries.insert(key, v.trim().to_string());
        }
        Ok(ConfigFile { entries })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.entries
            .get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| CliError::Usage(format!("config key {key}: cannot parse {v:?}")))
            })
            .transpose()
    }

    fn get_enum<T: ValueEnum>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.entries
            .get(key)
            .map(|v| T::from_str(v, true).map_err(|e| CliError::Usage(format!("config key {key}: {e}"))))
            .transpose()
    }
}

const KNOWN_KEYS: &[&str] = &[
    "model",
    "d",
    "dimension",
    "pinning",
    "s",
    "exponent",
    "location",
    "coupling",
    "stat",
    "statistics",
    "mass",
    "energy",
    "rel-tol",
    "base-points",
    "max-refinements",
    "format",
    "output",
];

/// Fully resolved settings for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelKind,
    pub dimension: usize,
    pub pinning: f64,
    pub exponent: Option<f64>,
    pub location: Location,
    pub coupling_file: Option<PathBuf>,
    pub statistics: Statistics,
    pub mass: Option<f64>,
    pub energy: Option<f64>,
    pub quadrature: QuadratureSpec,
    pub format: OutputFormat,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn resolve(args: &CommonArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let model = match args.model {
            Some(m) => Some(m),
            None => file.get_enum("model")?,
        }
        .unwrap_or(ModelKind::Nn);
        let dimension_flag = match args.dimension {
            Some(d) => Some(d),
            None => first(file.get("d")?, file.get("dimension")?),
        };
        let pinning = match args.pinning {
            Some(v) => Some(v),
            None => file.get("pinning")?,
        };
        let exponent = match args.exponent {
            Some(v) => Some(v),
            None => first(file.get("s")?, file.get("exponent")?),
        };
        let location = match args.location {
            Some(v) => Some(v),
            None => file.get_enum("location")?,
        };
        let coupling_file = args.coupling.clone().or(file.get::<PathBuf>("coupling")?);
        let statistics = match args.statistics {
            Some(v) => Some(v),
            None => first(file.get_enum("stat")?, file.get_enum("statistics")?),
        }
        .unwrap_or(Statistics::Classical);
        let mass = args.mass.or(file.get("mass")?);
        let energy = args.energy.or(file.get("energy")?);
        let format = match args.format {
            Some(v) => Some(v),
            None => file.get_enum("format")?,
        }
        .unwrap_or(OutputFormat::Json);
        let output = args.output.clone().or(file.get::<PathBuf>("output")?);

        if exponent.is_some() && model != ModelKind::Cusp {
            return Err(CliError::Usage("--s applies to the cusp model only".into()));
        }
        if location.is_some() && model != ModelKind::Cusp {
            return Err(CliError::Usage("--location applies to the cusp model only".into()));
        }
        if pinning.is_some() && !matches!(model, ModelKind::Nn | ModelKind::Nnn) {
            return Err(CliError::Usage("--pinning applies to nn and nnn only".into()));
        }
        if coupling_file.is_some() != (model == ModelKind::CouplingFile) {
            return Err(CliError::Usage(
                "--coupling is required for, and only allowed with, --model coupling-file".into(),
            ));
        }
        if model == ModelKind::Cusp && exponent.is_none() {
            return Err(CliError::Usage("the cusp model needs --s".into()));
        }

        let dimension = match (&coupling_file, dimension_flag) {
            (Some(path), flag) => {
                let d = load_stencil(path)?.dimension();
                if let Some(f) = flag {
                    if f != d {
                        return Err(CliError::Usage(format!(
                            "--d {f} conflicts with the {d}-dimensional stencil in {}",
                            path.display()
                        )));
                    }
                }
                d
            }
            (None, flag) => flag.unwrap_or(1),
        };

        let mut quadrature = QuadratureSpec::for_dimension(dimension);
        if let Some(t) = args.rel_tol.or(file.get("rel-tol")?) {
            quadrature = quadrature.with_rel_tol(t);
        }
        if let Some(n) = args.base_points.or(file.get("base-points")?) {
            quadrature = quadrature.with_base_points(n);
        }
        if let Some(n) = args.max_refinements.or(file.get("max-refinements")?) {
            quadrature = quadrature.with_max_refinements(n);
        }
        quadrature.validate()?;

        Ok(RunConfig {
            model,
            dimension,
            pinning: pinning.unwrap_or(0.0),
            exponent,
            location: location.unwrap_or(Location::Bottom),
            coupling_file,
            statistics,
            mass,
            energy,
            quadrature,
            format,
            output,
        })
    }

    pub fn dispersion(&self) -> Result<DispersionRelation, CliError> {
        let w = match self.model {
            ModelKind::Nn => nn_dispersion(self.dimension, self.pinning)?,
            ModelKind::Nnn => nnn_dispersion(self.dimension, self.pinning)?,
            ModelKind::Cusp => cusp_model(
                self.dimension,
                self.exponent.unwrap_or(f64::NAN),
                self.location.into(),
            )?,
            ModelKind::CouplingFile => {
                let path = self.coupling_file.as_ref().expect("checked in resolve");
                from_coupling(&load_stencil(path)?, &self.quadrature)?
            }
        };
        Ok(w)
    }

    pub fn target(&self) -> Result<phonon_eq::MassEnergy, CliError> {
        match (self.mass, self.energy) {
            (Some(m), Some(e)) => Ok(phonon_eq::MassEnergy::new(m, e)),
            _ => Err(CliError::Usage("--mass and --energy are required".into())),
        }
    }
}

fn first<T>(a: Option<T>, b: Option<T>) -> Option<T> {
    a.or(b)
}

fn load_stencil(path: &Path) -> Result<CouplingStencil, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(CouplingStencil::parse(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_fills_missing_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "# sweep\nmodel = cusp\ns = 0.5\nlocation = top\nd=1\nmass = 3 # comment\n").unwrap();
        let args = CommonArgs {
            config: Some(path),
            mass: Some(4.0),
            ..CommonArgs::default()
        };
        let cfg = RunConfig::resolve(&args).unwrap();
        assert_eq!(cfg.model, ModelKind::Cusp);
        assert_eq!(cfg.exponent, Some(0.5));
        assert_eq!(cfg.location, Location::Top);
        assert_eq!(cfg.mass, Some(4.0));
    }

    #[test]
    fn unknown_config_key_is_rejected() {
        assert!(ConfigFile::parse("colour = blue").is_err());
        assert!(ConfigFile::parse("no equals sign").is_err());
    }

    #[test]
    fn inconsistent_flags_are_rejected() {
        let exponent_with_nn = CommonArgs {
            exponent: Some(0.5),
            ..CommonArgs::default()
        };
        assert!(RunConfig::resolve(&exponent_with_nn).is_err());
        let pinned_cusp = CommonArgs {
            model: Some(ModelKind::Cusp),
            exponent: Some(0.5),
            pinning: Some(1.0),
            ..CommonArgs::default()
        };
        assert!(RunConfig::resolve(&pinned_cusp).is_err());
        let cusp_without_exponent = CommonArgs {
            model: Some(ModelKind::Cusp),
            ..CommonArgs::default()
        };
        assert!(RunConfig::resolve(&cusp_without_exponent).is_err());
    }
}
