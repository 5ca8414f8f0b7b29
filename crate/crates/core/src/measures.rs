//! Measures on the torus: a regular density plus point masses.

use serde::{Deserialize, Serialize};

use crate::dispersion::DispersionRelation;
use crate::error::{Error, Result};
use crate::quadrature::{grid_coordinate, QuadratureSpec};

/// Mass `∫ dλ` and energy `∫ ω dλ` of a measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassEnergy {
    #[serde(rename = "M")]
    pub mass: f64,
    #[serde(rename = "E")]
    pub energy: f64,
}

impl MassEnergy {
    pub fn new(mass: f64, energy: f64) -> Self {
        MassEnergy { mass, energy }
    }

    /// `E / M`.
    pub fn ratio(&self) -> f64 {
        self.energy / self.mass
    }

    pub fn scaled(&self, c: f64) -> Self {
        MassEnergy::new(c * self.mass, c * self.energy)
    }

    /// Largest of the relative mass and energy deviations from `target`.
    pub fn relative_residual(&self, target: &MassEnergy) -> (f64, f64) {
        (
            (self.mass - target.mass).abs() / target.mass.abs(),
            (self.energy - target.energy).abs() / target.energy.abs(),
        )
    }
}

/// `a·M ≤ E ≤ M` with `M > 0`: the pairs any nonnegative measure can have.
pub fn admissible(target: &MassEnergy, a: f64) -> bool {
    target.mass > 0.0 && a * target.mass <= target.energy && target.energy <= target.mass
}

/// `a·M < E < M`: the targets the solvers accept.
pub fn strictly_admissible(target: &MassEnergy, a: f64) -> bool {
    target.mass > 0.0
        && target.mass.is_finite()
        && a * target.mass < target.energy
        && target.energy < target.mass
}

pub(crate) fn require_strict(target: &MassEnergy, a: f64) -> Result<()> {
    if strictly_admissible(target, a) {
        Ok(())
    } else {
        Err(Error::InadmissibleTarget {
            mass: target.mass,
            energy: target.energy,
            a,
        })
    }
}

/// Parameters `(μ, ν)` of a regular equilibrium `1/(μω + ν)` or
/// `1/(e^{μω+ν} − 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EqParams {
    pub mu: f64,
    pub nu: f64,
}

/// Position of admissible parameters relative to the cone `μω + ν ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamLocation {
    /// `μω + ν > 0` on all of `[a, 1]`.
    Interior,
    /// `μ + ν = 0`, `μ < 0`: vanishes where `ω = 1`.
    TopLine,
    /// `aμ + ν = 0`, `μ > 0`: vanishes where `ω = a`.
    BottomLine,
}

/// Relative tolerance for deciding that parameters lie on a boundary line.
const LINE_TOL: f64 = 1e-12;

impl EqParams {
    pub fn new(mu: f64, nu: f64) -> Self {
        EqParams { mu, nu }
    }

    /// `ρ (cos φ, sin φ)`.
    pub fn polar(rho: f64, phi: f64) -> Self {
        EqParams::new(rho * phi.cos(), rho * phi.sin())
    }

    /// Classify against the cone `μ + ν ≥ 0`, `aμ + ν ≥ 0`; errors outside it.
    pub fn locate(&self, a: f64) -> Result<ParamLocation> {
        let (mu, nu) = (self.mu, self.nu);
        let scale = mu.abs().max(nu.abs());
        let err = Error::NonAdmissibleParams { mu, nu, a };
        if !(mu.is_finite() && nu.is_finite()) || scale == 0.0 {
            return Err(err);
        }
        let top = mu + nu;
        let bottom = a * mu + nu;
        let tol = LINE_TOL * scale;
        if top < -tol || bottom < -tol {
            return Err(err);
        }
        if mu < 0.0 && top <= tol {
            Ok(ParamLocation::TopLine)
        } else if mu > 0.0 && bottom <= tol {
            Ok(ParamLocation::BottomLine)
        } else {
            Ok(ParamLocation::Interior)
        }
    }

    pub fn is_admissible(&self, a: f64) -> bool {
        self.locate(a).is_ok()
    }
}

/// A density sampled on the `n^d` midpoint grid, row-major with the last
/// coordinate fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDensity {
    pub dimension: usize,
    pub points_per_axis: usize,
    pub values: Vec<f64>,
}

impl GridDensity {
    pub fn from_fn(dimension: usize, points_per_axis: usize, f: impl Fn(&[f64]) -> f64) -> Self {
        let total = points_per_axis.pow(dimension as u32);
        let mut g = GridDensity {
            dimension,
            points_per_axis,
            values: Vec::with_capacity(total),
        };
        let mut p = vec![0.0; dimension];
        for i in 0..total {
            g.point_into(i, &mut p);
            g.values.push(f(&p));
        }
        g
    }

    pub fn zeros(dimension: usize, points_per_axis: usize) -> Self {
        GridDensity {
            dimension,
            points_per_axis,
            values: vec![0.0; points_per_axis.pow(dimension as u32)],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Weight of one grid cell, `(2π/n)^d`.
    pub fn cell_volume(&self) -> f64 {
        (2.0 * std::f64::consts::PI / self.points_per_axis as f64).powi(self.dimension as i32)
    }

    pub fn point_into(&self, index: usize, p: &mut [f64]) {
        let n = self.points_per_axis;
        let mut rem = index;
        for k in (0..self.dimension).rev() {
            p[k] = grid_coordinate(rem % n, n);
            rem /= n;
        }
    }

    pub fn point(&self, index: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.dimension];
        self.point_into(index, &mut p);
        p
    }

    pub fn scaled(&self, c: f64) -> Self {
        GridDensity {
            values: self.values.iter().map(|v| c * v).collect(),
            ..self.clone()
        }
    }

    /// Midpoint-rule mass and energy.
    pub fn moments(&self, omega: &DispersionRelation) -> MassEnergy {
        let w = self.cell_volume();
        let mut p = vec![0.0; self.dimension];
        let (mut m, mut e) = (0.0, 0.0);
        for (i, &f) in self.values.iter().enumerate() {
            self.point_into(i, &mut p);
            m += f;
            e += f * omega.evaluate(&p);
        }
        MassEnergy::new(w * m, w * e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum RegularPart {
    /// Rayleigh-Jeans `1/(μω + ν)`.
    #[serde(rename = "RJ")]
    Rj(EqParams),
    /// Bose-Einstein `1/(e^{μω+ν} − 1)`.
    #[serde(rename = "BE")]
    Be(EqParams),
    Grid(GridDensity),
}

impl RegularPart {
    pub fn params(&self) -> Option<EqParams> {
        match self {
            RegularPart::Rj(p) | RegularPart::Be(p) => Some(*p),
            RegularPart::Grid(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub point: Vec<f64>,
    pub mass: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    ClassicalI,
    ClassicalII,
    ClassicalIII,
    QuantumInterior,
    QuantumAbove,
    QuantumBelow,
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::ClassicalI => "ClassicalI",
            Regime::ClassicalII => "ClassicalII",
            Regime::ClassicalIII => "ClassicalIII",
            Regime::QuantumInterior => "QuantumInterior",
            Regime::QuantumAbove => "QuantumAbove",
            Regime::QuantumBelow => "QuantumBelow",
        }
    }

    /// Number of atoms a maximizer in this regime carries.
    pub fn atom_count(&self) -> usize {
        match self {
            Regime::ClassicalI | Regime::QuantumInterior => 0,
            _ => 1,
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Regular part plus atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumMeasure {
    pub regular: RegularPart,
    pub atoms: Vec<Atom>,
    pub dispersion_label: String,
    pub regime: Regime,
}

impl EquilibriumMeasure {
    pub fn atom_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    /// Check the structural invariants: nonnegative atoms sitting on the
    /// extremal set of `omega`, and the atom count the regime demands.
    pub fn check_structure(&self, omega: &DispersionRelation) -> Result<()> {
        if self.atoms.len() != self.regime.atom_count() {
            return Err(Error::RegimeUnavailable(format!(
                "regime {} carries {} atoms",
                self.regime,
                self.atoms.len()
            )));
        }
        for atom in &self.atoms {
            let w = omega.evaluate(&atom.point);
            let on_extremum = (w - omega.a()).abs() <= 1e-9 || (w - 1.0).abs() <= 1e-9;
            if !(atom.mass >= 0.0) || !on_extremum {
                return Err(Error::RegimeUnavailable(format!(
                    "atom of mass {} at {:?} (omega = {w}) is not a nonnegative point mass on an extremal set",
                    atom.mass, atom.point
                )));
            }
        }
        Ok(())
    }
}

/// Mass and energy of the regular part plus `Σ m_i (1, ω(p_i))`.
pub fn moments(
    measure: &EquilibriumMeasure,
    omega: &DispersionRelation,
    spec: &QuadratureSpec,
) -> Result<MassEnergy> {
    let regular = match &measure.regular {
        RegularPart::Rj(p) => crate::classical::rj_moments(p, omega, spec)?,
        RegularPart::Be(p) => crate::quantum::be_moments(p, omega, spec)?,
        RegularPart::Grid(g) => g.moments(omega),
    };
    Ok(add_atoms(regular, &measure.atoms, omega))
}

pub(crate) fn add_atoms(regular: MassEnergy, atoms: &[Atom], omega: &DispersionRelation) -> MassEnergy {
    let mut out = regular;
    for atom in atoms {
        out.mass += atom.mass;
        out.energy += atom.mass * omega.evaluate(&atom.point);
    }
    out
}
