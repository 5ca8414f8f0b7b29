//! Rayleigh-Jeans equilibria and the classical entropy maximizer.
//!
//! For `R_{μ,ν} = 1/(μω + ν)` the mass and energy satisfy
//! `μE + νM = (2π)^d`, and along rays `(μ, ν) = ρ(cos φ, sin φ)` the ratio
//! `E/M` depends on `φ` alone and increases strictly from `α` (at the bottom
//! boundary line `ν = −aμ`) to `β` (at the top line `μ = −ν`). Targets with a
//! ratio outside `(α, β)` are reached by adding a point mass on the
//! corresponding extremal set to a boundary-line density.

use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};

use crate::dispersion::DispersionRelation;
use crate::error::{Error, Result, Side};
use crate::measures::{
    require_strict, Atom, EqParams, EquilibriumMeasure, GridDensity, MassEnergy, ParamLocation,
    Regime, RegularPart,
};
use crate::quadrature::{IntegralResult, Mode, QuadratureSpec};
use crate::roots::{brent, Bracket};

/// Relative band around `α` and `β` inside which a ratio is treated as
/// lying exactly on the threshold.
pub const THRESHOLD_BAND: f64 = 1e-9;

/// Largest relative miss of the energy-to-mass ratio at a returned root.
const ROOT_CHECK: f64 = 1e-7;

/// Upper end of the angle range, the top boundary line `μ = −ν`.
pub const PHI_TOP: f64 = 3.0 * FRAC_PI_4;

/// Lower end of the angle range, the bottom boundary line `ν = −aμ`.
pub fn phi_bottom(a: f64) -> f64 {
    -a.atan()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub a: f64,
    pub alpha: f64,
    pub beta: f64,
    /// `∫ ω dp`.
    #[serde(rename = "I")]
    pub i: f64,
    pub bottom_condensation: bool,
    pub top_condensation: bool,
    /// `∫ dp/(ω − a)` when finite.
    pub bottom_gap_integral: Option<f64>,
    /// `∫ dp/(1 − ω)` when finite.
    pub top_gap_integral: Option<f64>,
}

/// `α = a + (2π)^d / ∫ dp/(ω − a)` and `β = 1 − (2π)^d / ∫ dp/(1 − ω)`, with
/// `α = a` (resp. `β = 1`) when the integral diverges.
pub fn thresholds(omega: &DispersionRelation, spec: &QuadratureSpec) -> Result<Thresholds> {
    let gaps = omega.gap_integrals(spec)?;
    let v = omega.volume();
    let a = omega.a();
    let i = omega.mean_energy_integral(spec)?;
    let alpha = gaps.bottom.value.map_or(a, |g| a + v / g);
    let beta = gaps.top.value.map_or(1.0, |g| 1.0 - v / g);
    Ok(Thresholds {
        a,
        alpha,
        beta,
        i,
        bottom_condensation: gaps.bottom.is_finite(),
        top_condensation: gaps.top.is_finite(),
        bottom_gap_integral: gaps.bottom.value,
        top_gap_integral: gaps.top.value,
    })
}

/// `R_{μ,ν}(p) = 1/(μω(p) + ν)`; infinite only on an extremal set at
/// boundary parameters.
pub fn rj_density(params: &EqParams, omega: &DispersionRelation, p: &[f64]) -> Result<f64> {
    params.locate(omega.a())?;
    let y = omega.sample(p).affine(omega.a(), params.mu, params.nu);
    Ok(if y > 0.0 { 1.0 / y } else { f64::INFINITY })
}

fn finite_gap(side: Side, r: &IntegralResult) -> Result<f64> {
    r.value.ok_or(Error::InfiniteMoment { side })
}

/// `(∫ R dp, ∫ ωR dp)`. Boundary-line parameters use the closed forms in
/// terms of the gap integrals, which diverge exactly when the moments do.
pub fn rj_moments(
    params: &EqParams,
    omega: &DispersionRelation,
    spec: &QuadratureSpec,
) -> Result<MassEnergy> {
    let a = omega.a();
    let v = omega.volume();
    match params.locate(a)? {
        ParamLocation::TopLine => {
            let g = finite_gap(Side::Top, &omega.gap_integrals(spec)?.top)?;
            let t = -params.mu;
            Ok(MassEnergy::new(g / t, (g - v) / t))
        }
        ParamLocation::BottomLine => {
            let g = finite_gap(Side::Bottom, &omega.gap_integrals(spec)?.bottom)?;
            let t = params.mu;
            Ok(MassEnergy::new(g / t, (a * g + v) / t))
        }
        ParamLocation::Interior => {
            let (mu, nu) = (params.mu, params.nu);
            let [m, e] = omega.integrate_spectral::<2, _>(spec, Mode::Smooth, |s| {
                let r = 1.0 / s.affine(a, mu, nu);
                [r, s.omega * r]
            })?;
            Ok(MassEnergy::new(m.checked(spec)?, e.checked(spec)?))
        }
    }
}

/// Energy-to-mass ratio of `R_{cos φ, sin φ}` together with its mass.
/// Only meaningful strictly inside the angle range.
fn unit_ray_moments(phi: f64, omega: &DispersionRelation, spec: &QuadratureSpec) -> Result<MassEnergy> {
    let p = EqParams::polar(1.0, phi);
    let a = omega.a();
    let [m, e] = omega.integrate_spectral::<2, _>(spec, Mode::Smooth, |s| {
        let r = 1.0 / s.affine(a, p.mu, p.nu);
        [r, s.omega * r]
    })?;
    Ok(MassEnergy::new(m.checked(spec)?, e.checked(spec)?))
}

/// `F(x) = (2π)^d (∫ dp/(ω + x))^{−1} − x` on `(−∞, −1) ∪ (−a, ∞)`,
/// evaluated as `∫ ω/(ω+x) / ∫ 1/(ω+x)` so that large `|x|` does not cancel.
pub fn f_function(x: f64, omega: &DispersionRelation, spec: &QuadratureSpec) -> Result<f64> {
    let a = omega.a();
    let (mu, nu) = if x > -a {
        (1.0, x)
    } else if x < -1.0 {
        (-1.0, -x)
    } else {
        return Err(Error::OutOfDomain { x, a });
    };
    let [m, e] = omega.integrate_spectral::<2, _>(spec, Mode::Smooth, |s| {
        let r = 1.0 / s.affine(a, mu, nu);
        [r, s.omega * r]
    })?;
    Ok(e.checked(spec)? / m.checked(spec)?)
}

/// Where a ratio sits relative to the thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Band {
    Below,
    OnAlpha,
    Inside,
    OnBeta,
    Above,
}

fn band(ratio: f64, th: &Thresholds) -> Band {
    let near = |x: f64| (ratio - x).abs() <= THRESHOLD_BAND * x.abs();
    if th.top_condensation && near(th.beta) {
        Band::OnBeta
    } else if th.bottom_condensation && near(th.alpha) {
        Band::OnAlpha
    } else if ratio >= th.beta {
        Band::Above
    } else if ratio <= th.alpha {
        Band::Below
    } else {
        Band::Inside
    }
}

/// The unique `(μ, ν)` with `rj_moments = target`, when `E/M ∈ [α, β]`.
///
/// Inside `(α, β)` the angle is found by Brent's method on
/// `φ ↦ E/M(R_{cos φ, sin φ}) − E₀/M₀`, whose limits at the ends of
/// `(−arctan a, 3π/4)` are `α − E₀/M₀` and `β − E₀/M₀`; the radius then
/// follows from `M(ρ cos φ, ρ sin φ) = M(cos φ, sin φ)/ρ`.
pub fn solve_rj(
    target: &MassEnergy,
    omega: &DispersionRelation,
    spec: &QuadratureSpec,
) -> Result<EqParams> {
    let th = thresholds(omega, spec)?;
    solve_rj_with(target, omega, spec, &th)
}

fn solve_rj_with(
    target: &MassEnergy,
    omega: &DispersionRelation,
    spec: &QuadratureSpec,
    th: &Thresholds,
) -> Result<EqParams> {
    let a = omega.a();
    if !crate::measures::admissible(target, a) {
        return Err(Error::InadmissibleTarget {
            mass: target.mass,
            energy: target.energy,
            a,
        });
    }
    let ratio = target.ratio();
    let no_rj = Error::NoRJEquilibrium {
        ratio,
        alpha: th.alpha,
        beta: th.beta,
    };
    match band(ratio, th) {
        Band::OnBeta => {
            let t = th.top_gap_integral.expect("top condensation implies a finite gap integral")
                / target.mass;
            Ok(EqParams::new(-t, t))
        }
        Band::OnAlpha => {
            let mu = th.bottom_gap_integral.expect("bottom condensation implies a finite gap integral")
                / target.mass;
            Ok(EqParams::new(mu, -a * mu))
        }
        Band::Above | Band::Below => Err(no_rj),
        Band::Inside => {
            let lo = phi_bottom(a);
            let bracket = Bracket::new(lo, PHI_TOP, th.alpha - ratio, th.beta - ratio)?;
            // Near a line the root sits within ~1e-12 of the bracket end, so
            // the angle is resolved to machine precision.
            let phi = brent(
                |phi| Ok(unit_ray_moments(phi, omega, spec)?.ratio() - ratio),
                bracket,
                0.0,
                200,
            )?;
            let unit = unit_ray_moments(phi, omega, spec)?;
            let rho = unit.mass / target.mass;
            let p = EqParams::polar(rho, phi);
            // A root inside the line tolerance would be reported as a line point.
            if p.locate(a)? != ParamLocation::Interior
                || (unit.ratio() - ratio).abs() > ROOT_CHECK * ratio.abs()
            {
                return Err(Error::Unresolvable { mu: p.mu, nu: p.nu });
            }
            Ok(p)
        }
    }
}

/// The classical entropy maximizer at fixed mass and energy.
///
/// * `α < E₀/M₀ < β`: the Rayleigh-Jeans density alone.
/// * `E₀/M₀ ≥ β`: a density on the line `μ = −ν` with mass
///   `(M₀ − E₀)/(1 − β)` plus an atom of mass `(E₀ − βM₀)/(1 − β)` at the
///   canonical maximum point.
/// * `E₀/M₀ ≤ α`: a density on the line `ν = −aμ` with mass
///   `(E₀ − aM₀)/(α − a)` plus an atom of mass `(αM₀ − E₀)/(α − a)` at the
///   canonical minimum point.
pub fn classical_maximizer(
    target: &MassEnergy,
    omega: &DispersionRelation,
    spec: &QuadratureSpec,
) -> Result<EquilibriumMeasure> {
    let th = thresholds(omega, spec)?;
    classical_maximizer_with(target, omega, spec, &th)
}

pub(crate) fn classical_maximizer_with(
    target: &MassEnergy,
    omega: &DispersionRelation,
    spec: &QuadratureSpec,
    th: &Thresholds,
) -> Result<EquilibriumMeasure> {
    let a = omega.a();
    require_strict(target, a)?;
    let (m0, e0) = (target.mass, target.energy);
    let ratio = target.ratio();
    let measure = |regular: EqParams, atoms: Vec<Atom>, regime: Regime| EquilibriumMeasure {
        regular: RegularPart::Rj(regular),
        atoms,
        dispersion_label: omega.label().to_string(),
        regime,
    };
    match band(ratio, th) {
        Band::Inside => {
            let p = solve_rj_with(target, omega, spec, th)?;
            Ok(measure(p, vec![], Regime::ClassicalI))
        }
        Band::OnBeta | Band::Above => {
            let g = th
                .top_gap_integral
                .ok_or_else(|| Error::RegimeUnavailable("ratio at or above beta = 1".into()))?;
            let m_reg = (m0 - e0) / (1.0 - th.beta);
            let t = g / m_reg;
            let mass = ((e0 - th.beta * m0) / (1.0 - th.beta)).max(0.0);
            let atom = Atom {
                point: omega.canonical_max_point().to_vec(),
                mass,
            };
            Ok(measure(EqParams::new(-t, t), vec![atom], Regime::ClassicalII))
        }
        Band::OnAlpha | Band::Below => {
            let g = th
                .bottom_gap_integral
                .ok_or_else(|| Error::RegimeUnavailable("ratio at or below alpha = a".into()))?;
            let m_reg = (e0 - a * m0) / (th.alpha - a);
            let mu = g / m_reg;
            let mass = ((th.alpha * m0 - e0) / (th.alpha - a)).max(0.0);
            let atom = Atom {
                point: omega.canonical_min_point().to_vec(),
                mass,
            };
            Ok(measure(EqParams::new(mu, -a * mu), vec![atom], Regime::ClassicalIII))
        }
    }
}

/// The low-energy regime with the literal formulas: regular mass `(M₀ − E₀)/(1 − α)` on the line `ν = −aμ`
/// and an atom of mass `(E₀ − αM₀)/(1 − α)` where `ω` is maximal. The atom
/// mass is negative for every target in that regime; the result is returned
/// unchecked so callers can report the violation. Other regimes are
/// unchanged.
pub fn classical_maximizer_paper_literal(
    target: &MassEnergy,
    omega: &DispersionRelation,
    spec: &QuadratureSpec,
) -> Result<EquilibriumMeasure> {
    let th = thresholds(omega, spec)?;
    let a = omega.a();
    require_strict(target, a)?;
    let (m0, e0) = (target.mass, target.energy);
    if band(target.ratio(), &th) != Band::Below {
        return classical_maximizer_with(target, omega, spec, &th);
    }
    let g = th
        .bottom_gap_integral
        .ok_or_else(|| Error::RegimeUnavailable("ratio at or below alpha = a".into()))?;
    let m_reg = (m0 - e0) / (1.0 - th.alpha);
    let mu = g / m_reg;
    Ok(EquilibriumMeasure {
        regular: RegularPart::Rj(EqParams::new(mu, -a * mu)),
        atoms: vec![Atom {
            point: omega.canonical_max_point().to_vec(),
            mass: (e0 - th.alpha * m0) / (1.0 - th.alpha),
        }],
        dispersion_label: omega.label().to_string(),
        regime: Regime::ClassicalIII,
    })
}

/// `ln(e^y − 1)` without overflow or cancellation.
pub(crate) fn ln_expm1(y: f64) -> f64 {
    if y > 30.0 {
        y + (-(-y).exp()).ln_1p()
    } else {
        y.exp_m1().ln()
    }
}

/// `∫ ln f dp` of the regular part; atoms carry no entropy.
pub fn classical_entropy(
    measure: &EquilibriumMeasure,
    omega: &DispersionRelation,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let a = omega.a();
    match &measure.regular {
        RegularPart::Rj(p) => {
            p.locate(a)?;
            let (mu, nu) = (p.mu, p.nu);
            omega.integrate_omega_value(spec, |s| -s.affine(a, mu, nu).ln())
        }
        RegularPart::Be(p) => {
            p.locate(a)?;
            let (mu, nu) = (p.mu, p.nu);
            omega.integrate_omega_value(spec, |s| -ln_expm1(s.affine(a, mu, nu)))
        }
        RegularPart::Grid(g) => {
            let mut acc = 0.0;
            for (index, &value) in g.values.iter().enumerate() {
                if !(value > 0.0) {
                    return Err(Error::NonPositiveDensity { index, value });
                }
                acc += value.ln();
            }
            Ok(g.cell_volume() * acc)
        }
    }
}

/// `ln(1 + x) − x`, accurate for small `|x|`.
pub(crate) fn log1p_minus_x(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        // −x²/2 + x³/3 − x⁴/4 + x⁵/5
        let x2 = x * x;
        x2 * (-0.5 + x * (1.0 / 3.0 + x * (-0.25 + x * 0.2)))
    } else {
        x.ln_1p() - x
    }
}

/// Slack of the entropy inequality
/// `H(f) ≤ H(R) + μ(E(f) − E(R)) + ν(M(f) − M(R))`, i.e. the right side
/// minus the left.
///
/// All terms are evaluated on the grid of `f`, where the slack is the sum
/// of the pointwise nonnegative quantities `x − 1 − ln x`, `x = f/R`.
/// Returns `+∞` when `f` vanishes somewhere.
pub fn check_classical_inequality(
    f: &GridDensity,
    params: &EqParams,
    omega: &DispersionRelation,
    spec: &QuadratureSpec,
) -> Result<f64> {
    omega.check_spec(spec)?;
    grid_matches(f, omega)?;
    let a = omega.a();
    params.locate(a)?;
    let mut p = vec![0.0; f.dimension];
    let mut acc = 0.0;
    for (i, &fi) in f.values.iter().enumerate() {
        f.point_into(i, &mut p);
        let y = omega.sample(&p).affine(a, params.mu, params.nu);
        if !(y > 0.0) {
            return Err(Error::NonFiniteSample {
                point: p.clone(),
                value: f64::INFINITY,
            });
        }
        if fi < 0.0 || fi.is_nan() {
            return Err(Error::NonPositiveDensity { index: i, value: fi });
        }
        if fi == 0.0 {
            return Ok(f64::INFINITY);
        }
        acc -= log1p_minus_x(fi * y - 1.0);
    }
    Ok(f.cell_volume() * acc)
}

pub(crate) fn grid_matches(f: &GridDensity, omega: &DispersionRelation) -> Result<()> {
    if f.dimension != omega.dimension()
        || f.values.len() != f.points_per_axis.pow(f.dimension as u32)
    {
        return Err(Error::InvalidSpec(format!(
            "grid density of dimension {} with {} values does not fit a {}-dimensional relation",
            f.dimension,
            f.values.len(),
            omega.dimension()
        )));
    }
    Ok(())
}
