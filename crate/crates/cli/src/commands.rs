//! The five subcommands as library functions returning typed reports.

use phonon_eq::quantum::{default_t_grid, log_grid};
use phonon_eq::verify::{run_battery, CheckOutcome, VerifyOptions, VerifyReport};
use phonon_eq::{
    boundary_curves, classical_entropy, classical_maximizer, moments, quantum_entropy,
    quantum_maximizer, region_classify, strictly_admissible, thresholds, Atom, BoundaryCurves,
    DispersionRelation, EqParams, EquilibriumMeasure, MassEnergy, Region, Regime, Thresholds,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, Statistics};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub mass_residual: f64,
    pub energy_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub dispersion: String,
    pub statistics: Statistics,
    /// Maximum of the unnormalized dispersion; multiply normalized
    /// frequencies by it to recover physical units.
    pub raw_max: f64,
    pub target: MassEnergy,
    pub regime: Regime,
    pub regular_params: Option<EqParams>,
    pub regular_moments: MassEnergy,
    pub atoms: Vec<Atom>,
    pub entropy: f64,
    pub thresholds: Thresholds,
    pub residuals: Residuals,
    pub measure: EquilibriumMeasure,
}

/// Relative residual bound enforced before `solve` reports success.
pub const RESIDUAL_BOUND: f64 = 1e-6;

pub fn cmd_solve(cfg: &RunConfig) -> Result<SolveReport, CliError> {
    let omega = cfg.dispersion()?;
    let spec = &cfg.quadrature;
    let target = cfg.target()?;
    let th = thresholds(&omega, spec)?;
    let (measure, entropy) = match cfg.statistics {
        Statistics::Classical => {
            let m = classical_maximizer(&target, &omega, spec)?;
            let h = classical_entropy(&m, &omega, spec)?;
            (m, h)
        }
        Statistics::Quantum => {
            let m = quantum_maximizer(&target, &omega, spec)?;
            let h = quantum_entropy(&m, &omega, spec)?;
            (m, h)
        }
    };
    let total = moments(&measure, &omega, spec)?;
    let (mass_residual, energy_residual) = total.relative_residual(&target);
    let atom_mass = measure.atom_mass();
    let atom_energy: f64 = measure
        .atoms
        .iter()
        .map(|a| a.mass * omega.evaluate(&a.point))
        .sum();
    let report = SolveReport {
        dispersion: omega.label().to_string(),
        statistics: cfg.statistics,
        raw_max: omega.raw_max(),
        target,
        regime: measure.regime,
        regular_params: measure.regular.params(),
        regular_moments: MassEnergy::new(total.mass - atom_mass, total.energy - atom_energy),
        atoms: measure.atoms.clone(),
        entropy,
        thresholds: th,
        residuals: Residuals {
            mass_residual,
            energy_residual,
        },
        measure,
    };
    Ok(report)
}

/// Fails with [`CliError::Residual`] when either residual exceeds
/// [`RESIDUAL_BOUND`].
pub fn check_residuals(r: &SolveReport) -> Result<(), CliError> {
    let Residuals {
        mass_residual,
        energy_residual,
    } = r.residuals;
    if mass_residual <= RESIDUAL_BOUND && energy_residual <= RESIDUAL_BOUND {
        Ok(())
    } else {
        Err(CliError::Residual {
            mass: mass_residual,
            energy: energy_residual,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdsReport {
    pub dispersion: String,
    pub raw_max: f64,
    #[serde(flatten)]
    pub thresholds: Thresholds,
}

pub fn cmd_thresholds(cfg: &RunConfig) -> Result<ThresholdsReport, CliError> {
    let omega = cfg.dispersion()?;
    Ok(ThresholdsReport {
        dispersion: omega.label().to_string(),
        raw_max: omega.raw_max(),
        thresholds: thresholds(&omega, &cfg.quadrature)?,
    })
}

/// Logarithmic grid of line parameters for curve sampling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub count: usize,
}

impl TGrid {
    pub fn values(&self) -> Vec<f64> {
        log_grid(self.t_min, self.t_max, self.count)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvesReport {
    pub dispersion: String,
    pub raw_max: f64,
    pub curves: BoundaryCurves,
}

pub fn cmd_curves(cfg: &RunConfig, grid: Option<TGrid>) -> Result<CurvesReport, CliError> {
    let omega = cfg.dispersion()?;
    let t = grid.map_or_else(default_t_grid, |g| g.values());
    Ok(CurvesReport {
        dispersion: omega.label().to_string(),
        raw_max: omega.raw_max(),
        curves: boundary_curves(&omega, &cfg.quadrature, &t)?,
    })
}

/// `curve,t,M,E` rows for every sampled point, `C+` before `C-`.
pub fn curves_csv(curves: &BoundaryCurves) -> String {
    let mut out = String::from("curve,t,M,E\n");
    for (name, curve) in [("C+", &curves.plus), ("C-", &curves.minus)] {
        if let Some(c) = curve {
            for s in &c.samples {
                out.push_str(&format!("{name},{},{},{}\n", num(s.t), num(s.mass), num(s.energy)));
            }
        }
    }
    out
}

/// Rectangular `(M, E)` sweep; both axes include their end points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub m_min: f64,
    pub m_max: f64,
    pub m_steps: usize,
    pub e_min: f64,
    pub e_max: f64,
    pub e_steps: usize,
}

impl SweepGrid {
    /// `M ∈ [(2π)^d/10, 2(2π)^d]`, `E ∈ [0, M_max]`, 50 × 50.
    pub fn default_for(omega: &DispersionRelation) -> Self {
        let v = omega.volume();
        SweepGrid {
            m_min: 0.1 * v,
            m_max: 2.0 * v,
            m_steps: 50,
            e_min: 0.0,
            e_max: 2.0 * v,
            e_steps: 50,
        }
    }

    fn axis(lo: f64, hi: f64, steps: usize, i: usize) -> f64 {
        if steps <= 1 {
            lo
        } else {
            lo + (hi - lo) * i as f64 / (steps - 1) as f64
        }
    }

    /// Cells in row-major order: `M` outer, `E` inner.
    pub fn cells(&self) -> Vec<MassEnergy> {
        let mut out = Vec::with_capacity(self.m_steps * self.e_steps);
        for i in 0..self.m_steps {
            let m = Self::axis(self.m_min, self.m_max, self.m_steps, i);
            for j in 0..self.e_steps {
                out.push(MassEnergy::new(m, Self::axis(self.e_min, self.e_max, self.e_steps, j)));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let finite = [self.m_min, self.m_max, self.e_min, self.e_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.m_steps == 0 || self.e_steps == 0 || self.m_min > self.m_max || self.e_min > self.e_max {
            return Err(CliError::Usage(format!("invalid sweep grid {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseCell {
    #[serde(rename = "M")]
    pub mass: f64,
    #[serde(rename = "E")]
    pub energy: f64,
    pub regime: String,
    /// Absent for inadmissible cells.
    pub atom_mass: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseDiagram {
    pub dispersion: String,
    pub statistics: Statistics,
    pub grid: SweepGrid,
    pub cells: Vec<PhaseCell>,
    pub curves: BoundaryCurves,
}

pub const INADMISSIBLE: &str = "Inadmissible";
/// Label of cells whose solve ended inconclusive; the sweep carries on.
pub const UNRESOLVED: &str = "Unresolved";

pub fn cmd_phase_diagram(cfg: &RunConfig, grid: Option<SweepGrid>) -> Result<PhaseDiagram, CliError> {
    let omega = cfg.dispersion()?;
    let spec = &cfg.quadrature;
    let grid = grid.unwrap_or_else(|| SweepGrid::default_for(&omega));
    grid.validate()?;
    let a = omega.a();
    let curves = match cfg.statistics {
        Statistics::Quantum => boundary_curves(&omega, spec, &default_t_grid())?,
        Statistics::Classical => BoundaryCurves {
            plus: None,
            minus: None,
        },
    };
    if cfg.statistics == Statistics::Classical {
        // Fill the shared caches once before fanning out.
        thresholds(&omega, spec)?;
    }
    let cells: Vec<Result<PhaseCell, CliError>> = grid
        .cells()
        .into_par_iter()
        .map(|target| {
            let cell = |regime: &str, atom_mass: Option<f64>| PhaseCell {
                mass: target.mass,
                energy: target.energy,
                regime: regime.to_string(),
                atom_mass,
            };
            if !strictly_admissible(&target, a) {
                return Ok(cell(INADMISSIBLE, None));
            }
            let solved = match cfg.statistics {
                Statistics::Classical => classical_maximizer(&target, &omega, spec)
                    .map(|m| cell(m.regime.name(), Some(m.atom_mass()))),
                Statistics::Quantum => region_classify(&target, &curves, &omega, spec).and_then(|region| {
                    let atom_mass = match region {
                        Region::InteriorS => 0.0,
                        _ => quantum_maximizer(&target, &omega, spec)?.atom_mass(),
                    };
                    Ok(cell(region_name(region), Some(atom_mass)))
                }),
            };
            match solved {
                Err(e) if e.is_inconclusive() => Ok(cell(UNRESOLVED, None)),
                r => Ok(r?),
            }
        })
        .collect();
    Ok(PhaseDiagram {
        dispersion: omega.label().to_string(),
        statistics: cfg.statistics,
        grid,
        cells: cells.into_iter().collect::<Result<_, _>>()?,
        curves,
    })
}

pub fn region_name(r: Region) -> &'static str {
    match r {
        Region::InteriorS => "InteriorS",
        Region::AboveCurvePlus => "AboveCurvePlus",
        Region::BelowCurveMinus => "BelowCurveMinus",
        Region::Inadmissible => INADMISSIBLE,
    }
}

/// `M,E,regime,atom_mass` rows; the atom mass is empty for inadmissible
/// and unresolved cells.
pub fn phase_csv(diagram: &PhaseDiagram) -> String {
    let mut out = String::from("M,E,regime,atom_mass\n");
    for c in &diagram.cells {
        let atom = c.atom_mass.map(num).unwrap_or_default();
        out.push_str(&format!("{},{},{},{}\n", num(c.mass), num(c.energy), c.regime, atom));
    }
    out
}

/// 17 significant digits in scientific notation.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn cmd_verify(cfg: &RunConfig, opts: VerifyOptions) -> Result<VerifyReport, CliError> {
    let omega = cfg.dispersion()?;
    let spec = &cfg.quadrature;
    let mut report = run_battery(&omega, spec, opts);
    report.checks.push(json_round_trip(&omega, cfg));
    Ok(report)
}

/// Serialize a maximizer of each statistics and parse it back.
fn json_round_trip(omega: &DispersionRelation, cfg: &RunConfig) -> CheckOutcome {
    let start = std::time::Instant::now();
    let outcome = (|| -> Result<(bool, String), CliError> {
        let v = omega.volume();
        let th = thresholds(omega, &cfg.quadrature)?;
        let target = MassEnergy::new(v, v * 0.5 * (th.alpha + th.beta));
        let mut ok = true;
        for m in [
            classical_maximizer(&target, omega, &cfg.quadrature)?,
            quantum_maximizer(&target, omega, &cfg.quadrature)?,
        ] {
            let text = serde_json::to_string(&m).map_err(|e| CliError::Io(e.to_string()))?;
            let back: EquilibriumMeasure =
                serde_json::from_str(&text).map_err(|e| CliError::Io(e.to_string()))?;
            ok &= back == m;
        }
        Ok((ok, "parse(serialize(measure)) == measure for both maximizers".into()))
    })();
    let (passed, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    CheckOutcome {
        name: "json_round_trip".into(),
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

pub fn verify_text(report: &VerifyReport) -> String {
    let mut out = format!("verification battery for {}\n", report.dispersion);
    for c in &report.checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        out.push_str(&format!("{tag} {} ({:.2}s): {}\n", c.name, c.seconds, c.detail));
    }
    let failed: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        out.push_str(&format!("all {} checks passed\n", report.checks.len()));
    } else {
        out.push_str(&format!("{} of {} checks failed: {}\n", failed.len(), report.checks.len(), failed.join(", ")));
    }
    out
}
