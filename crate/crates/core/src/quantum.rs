//! Bose-Einstein equilibria, the region they fill in the `(M, E)` plane,
//! and the quantum entropy maximizer.
//!
//! On the boundary lines `(μ, ν) = (−t, t)` and `(t, −at)` the densities
//! `B = 1/(e^{μω+ν} − 1)` blow up like `1/(t·gap)` on an extremal set, so
//! their moments are finite exactly when the matching gap integral is. The
//! moments along these lines trace the curves `C₊` (top) and `C₋` (bottom)
//! that bound the region `S` of targets reached by a pure Bose-Einstein
//! density. They are computed by subtracting the `1/(t·gap)` part, whose
//! integral is the cached gap integral, and integrating the bounded rest.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::{grid_matches, log1p_minus_x, phi_bottom, PHI_TOP};
use crate::dispersion::{DispersionRelation, OmegaSample};
use crate::error::{Error, Result, Side};
use crate::measures::{
    require_strict, Atom, EqParams, EquilibriumMeasure, GridDensity, MassEnergy, ParamLocation,
    Regime, RegularPart,
};
use crate::quadrature::{Mode, QuadratureSpec};
use crate::roots::{brent, decreasing_root_upward, Bracket};

/// Relative band around `f±(M₀)` inside which a target is treated as lying
/// on the curve.
pub const CURVE_BAND: f64 = 1e-9;

/// Largest relative miss of the energy at a returned root.
const ROOT_CHECK: f64 = 1e-7;

/// `1/(e^y − 1)`.
#[inline]
pub fn bose(y: f64) -> f64 {
    1.0 / y.exp_m1()
}

/// `1/(e^y − 1) − 1/y`, bounded on `y ≥ 0`.
#[inline]
fn bose_regular(y: f64) -> f64 {
    if y < 1e-3 {
        -0.5 + y / 12.0 - y * y * y / 720.0
    } else {
        1.0 / y.exp_m1() - 1.0 / y
    }
}

/// `g/(e^{tg} − 1)`, with the limit `1/t` at `g = 0`.
#[inline]
fn gap_weighted_bose(t: f64, g: f64) -> f64 {
    if g == 0.0 {
        1.0 / t
    } else {
        g / (t * g).exp_m1()
    }
}

/// `B_{μ,ν}(p)`; infinite only on an extremal set at boundary parameters.
pub fn be_density(params: &EqParams, omega: &DispersionRelation, p: &[f64]) -> Result<f64> {
    params.locate(omega.a())?;
    let y = omega.sample(p).affine(omega.a(), params.mu, params.nu);
    Ok(if y > 0.0 { bose(y) } else { f64::INFINITY })
}

fn line_gap(side: Side, omega: &DispersionRelation, spec: &QuadratureSpec) -> Result<f64> {
    let gaps = omega.gap_integrals(spec)?;
    let r = match side {
        Side::Top => gaps.top,
        Side::Bottom => gaps.bottom,
    };
    r.value.ok_or(Error::InfiniteMoment { side })
}

/// Moments of `B` on a boundary line: `(−t, t)` for `Top`, `(t, −at)` for
/// `Bottom`.
pub fn be_line_moments(
    side: Side,
    t: f64,
    omega: &DispersionRelation,
    spec: &QuadratureSpec,
) -> Result<MassEnergy> {
    let g = line_gap(side, omega, spec)?;
    let gap = move |s: &OmegaSample| match side {
        Side::Top => s.gap_top,
        Side::Bottom => s.gap_bottom,
    };
    let [rest, weighted] = omega.integrate_spectral::<2, _>(spec, Mode::Smooth, |s| {
        let x = gap(&s);
        [bose_regular(t * x), gap_weighted_bose(t, x)]
    })?;
    let mass = g / t + rest.checked_against(spec, Some(g / t))?;
    let weighted = weighted.checked_against(spec, Some(mass))?;
    let energy = match side {
        Side::Top => mass - weighted,
        Side::Bottom => omega.a() * mass + weighted,
    };
    Ok(MassEnergy::new(mass, energy))
}

/// `(∫ B dp, ∫ ωB dp)`.
pub fn be_moments(
    params: &EqParams,
    omega: &DispersionRelation,
    spec: &QuadratureSpec,
) -> Result<MassEnergy> {
    let a = omega.a();
    match params.locate(a)? {
        ParamLocation::TopLine => be_line_moments(Side::Top, params.nu, omega, spec),
        ParamLocation::BottomLine => be_line_moments(Side::Bottom, params.mu, omega, spec),
        ParamLocation::Interior => {
            let (mu, nu) = (params.mu, params.nu);
            let [m, e] = omega.integrate_spectral::<2, _>(spec, Mode::Smooth, |s| {
                let b = bose(s.affine(a, mu, nu));
                [b, s.omega * b]
            })?;
            Ok(MassEnergy::new(m.checked(spec)?, e.checked(spec)?))
        }
    }
}

/// `A = ∫ e^y/(e^y − 1)² dp` and the same with weights `ω`, `ω²`
/// (`y = μω + ν`): the Jacobian of `(μ, ν) ↦ −(E, M)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbcIntegrals {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl AbcIntegrals {
    /// `AC − B²`, positive by Cauchy-Schwarz for non-constant `ω`.
    pub fn determinant(&self) -> f64 {
        self.a * self.c - self.b * self.b
    }
}

pub fn abc_integrals(
    params: &EqParams,
    omega: &DispersionRelation,
    spec: &QuadratureSpec,
) -> Result<AbcIntegrals> {
    let a = omega.a();
    let loc = params.locate(a)?;
    let (mu, nu) = (params.mu, params.nu);
    let kernel = move |s: OmegaSample| {
        let y = s.affine(a, mu, nu);
        // e^y/(e^y − 1)² = 1/((e^y − 1)(1 − e^{−y}))
        let k = 1.0 / (y.exp_m1() * -(-y).exp_m1());
        [k, k * s.omega, k * s.omega * s.omega]
    };
    let mode = if loc == ParamLocation::Interior {
        Mode::Smooth
    } else {
        Mode::Singular
    };
    let out = omega.integrate_spectral::<3, _>(spec, mode, kernel)?;
    let side = if loc == ParamLocation::TopLine {
        Side::Top
    } else {
        Side::Bottom
    };
    let mut v = [0.0; 3];
    for (k, o) in out.iter().enumerate() {
        v[k] = if mode == Mode::Smooth {
            o.checked(spec)?
        } else {
            o.into_result()?.value.ok_or(Error::InfiniteMoment { side })?
        };
    }
    Ok(AbcIntegrals {
        a: v[0],
        b: v[1],
        c: v[2],
    })
}

/// One point `(t, M, E)` of a boundary curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    pub t: f64,
    #[serde(rename = "M")]
    pub mass: f64,
    #[serde(rename = "E")]
    pub energy: f64,
}

/// A sampled boundary curve with a monotone interpolant `E = f(M)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCurve {
    pub side: Side,
    /// In increasing `t`, hence decreasing `M` and `E`.
    pub samples: Vec<CurveSample>,
    /// Samples moved by the isotonic projection that restores strict
    /// monotonicity after quadrature jitter.
    pub isotonic_adjustments: usize,
    /// Grid values of `t` dropped because their moments did not resolve.
    pub unresolved: usize,
    /// Interpolation nodes `(ln M, ln E)` in increasing order with PCHIP
    /// slopes.
    nodes: Vec<(f64, f64, f64)>,
}

impl BoundaryCurve {
    fn new(side: Side, mut samples: Vec<CurveSample>, unresolved: usize) -> Self {
        samples.sort_by(|x, y| x.t.total_cmp(&y.t));
        // Both moments must decrease in t.
        let mut masses: Vec<f64> = samples.iter().map(|s| -s.mass).collect();
        let mut energies: Vec<f64> = samples.iter().map(|s| -s.energy).collect();
        let mut adjusted = isotonic_increasing(&mut masses);
        adjusted += isotonic_increasing(&mut energies);
        for (s, (m, e)) in samples.iter_mut().zip(masses.iter().zip(&energies)) {
            s.mass = -m;
            s.energy = -e;
        }
        let mut pts: Vec<(f64, f64)> = samples
            .iter()
            .rev()
            .map(|s| (s.mass.ln(), s.energy.ln()))
            .collect();
        pts.dedup_by(|x, y| x.0 <= y.0);
        let nodes = pchip_nodes(&pts);
        BoundaryCurve {
            side,
            samples,
            isotonic_adjustments: adjusted,
            unresolved,
            nodes,
        }
    }

    /// Monotone interpolant of `E` as a function of `M`; linear in
    /// `(ln M, ln E)` beyond the sampled range.
    pub fn interpolate(&self, mass: f64) -> f64 {
        let x = mass.ln();
        let nodes = &self.nodes;
        if nodes.len() == 1 {
            return (nodes[0].1 + (x - nodes[0].0)).exp();
        }
        let last = nodes.len() - 1;
        if x <= nodes[0].0 {
            return (nodes[0].1 + nodes[0].2 * (x - nodes[0].0)).exp();
        }
        if x >= nodes[last].0 {
            return (nodes[last].1 + nodes[last].2 * (x - nodes[last].0)).exp();
        }
        let i = nodes.partition_point(|n| n.0 <= x) - 1;
        let (x0, y0, d0) = nodes[i];
        let (x1, y1, d1) = nodes[i + 1];
        let h = x1 - x0;
        let s = (x - x0) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        (h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1).exp()
    }

    /// Largest sampled mass.
    pub fn max_mass(&self) -> f64 {
        self.samples.first().map_or(f64::NAN, |s| s.mass)
    }
}

/// Pool-adjacent-violators projection onto nondecreasing sequences; returns the number of entries changed.
fn isotonic_increasing(v: &mut [f64]) -> usize {
    let original = v.to_vec();
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(v.len());
    for &x in v.iter() {
        blocks.push((x, 1));
        while blocks.len() > 1 {
            let n = blocks.len();
            if blocks[n - 2].0 <= blocks[n - 1].0 {
                break;
            }
            let (m2, c2) = blocks.pop().unwrap();
            let (m1, c1) = blocks.pop().unwrap();
            let c = c1 + c2;
            blocks.push(((m1 * c1 as f64 + m2 * c2 as f64) / c as f64, c));
        }
    }
    let mut i = 0;
    for (m, c) in blocks {
        for _ in 0..c {
            v[i] = m;
            i += 1;
        }
    }
    v.iter().zip(&original).filter(|(a, b)| a != b).count()
}

/// Fritsch-Carlson slopes for monotone cubic Hermite interpolation.
fn pchip_nodes(pts: &[(f64, f64)]) -> Vec<(f64, f64, f64)> {
    let n = pts.len();
    if n < 2 {
        return pts.iter().map(|&(x, y)| (x, y, 1.0)).collect();
    }
    let secants: Vec<f64> = pts
        .windows(2)
        .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
        .collect();
    let mut slopes = vec![0.0; n];
    slopes[0] = secants[0];
    slopes[n - 1] = secants[n - 2];
    for i in 1..n - 1 {
        let (s0, s1) = (secants[i - 1], secants[i]);
        slopes[i] = if s0 * s1 <= 0.0 {
            0.0
        } else {
            let h0 = pts[i].0 - pts[i - 1].0;
            let h1 = pts[i + 1].0 - pts[i].0;
            let w1 = 2.0 * h1 + h0;
            let w2 = h1 + 2.0 * h0;
            (w1 + w2) / (w1 / s0 + w2 / s1)
        };
    }
    pts.iter()
        .zip(slopes)
        .map(|(&(x, y), d)| (x, y, d))
        .collect()
}

/// `C₊` (line `μ = −ν`) and `C₋` (line `ν = −aμ`); a curve is absent when
/// its gap integral diverges, and `S` then reaches the cone edge on that
/// side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCurves {
    pub plus: Option<BoundaryCurve>,
    pub minus: Option<BoundaryCurve>,
}

/// 200 logarithmically spaced values on `[1e−3, 50]`.
pub fn default_t_grid() -> Vec<f64> {
    log_grid(1e-3, 50.0, 200)
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (l0, l1) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (l0 + (l1 - l0) * i as f64 / (n - 1).max(1) as f64).exp())
        .collect()
}

pub fn boundary_curves(
    omega: &DispersionRelation,
    spec: &QuadratureSpec,
    t_grid: &[f64],
) -> Result<BoundaryCurves> {
    let gaps = omega.gap_integrals(spec)?;
    let sample = |side: Side| -> Result<BoundaryCurve> {
        let results: Vec<Result<MassEnergy>> = t_grid
            .par_iter()
            .map(|&t| be_line_moments(side, t, omega, spec))
            .collect();
        let mut samples = Vec::with_capacity(t_grid.len());
        let mut unresolved = 0;
        let mut last_err = None;
        for (&t, r) in t_grid.iter().zip(results) {
            match r {
                Ok(m) => samples.push(CurveSample {
                    t,
                    mass: m.mass,
                    energy: m.energy,
                }),
                Err(e) if e.is_inconclusive() => {
                    unresolved += 1;
                    last_err = Some(e);
                }
                Err(e) => return Err(e),
            }
        }
        if samples.len() < 2 {
            if let Some(e) = last_err {
                return Err(e);
            }
        }
        Ok(BoundaryCurve::new(side, samples, unresolved))
    };
    let plus = if gaps.top.is_finite() {
        Some(sample(Side::Top)?)
    } else {
        None
    };
    let minus = if gaps.bottom.is_finite() {
        Some(sample(Side::Bottom)?)
    } else {
        None
    };
    Ok(BoundaryCurves { plus, minus })
}

/// The `t` at which the boundary-line density has mass `mass`.
///
/// From `1/y − 1/2 < 1/(e^y − 1) < 1/y`, the line mass lies in
/// `(G/t − (2π)^d/2, G/t)` with `G` the gap integral, which brackets `t`.
pub fn line_parameter_for_mass(
    side: Side,
    mass: f64,
    omega: &DispersionRelation,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let g = line_gap(side, omega, spec)?;
    let v = omega.volume();
    let lo = g / (mass + 0.5 * v);
    let hi = g / mass;
    let f = |t: f64| Ok(be_line_moments(side, t, omega, spec)?.mass - mass);
    decreasing_root_upward(f, lo, hi, 2.0, 1e-14)
}

/// `f₊(M)` (top) or `f₋(M)` (bottom), evaluated exactly rather than from
/// the sampled interpolant; `None` when the curve is absent.
pub fn curve_energy(
    side: Side,
    mass: f64,
    omega: &DispersionRelation,
    spec: &QuadratureSpec,
) -> Result<Option<(f64, f64)>> {
    let gaps = omega.gap_integrals(spec)?;
    let finite = match side {
        Side::Top => gaps.top.is_finite(),
        Side::Bottom => gaps.bottom.is_finite(),
    };
    if !finite {
        return Ok(None);
    }
    let t = line_parameter_for_mass(side, mass, omega, spec)?;
    Ok(Some((t, be_line_moments(side, t, omega, spec)?.energy)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    InteriorS,
    AboveCurvePlus,
    BelowCurveMinus,
    Inadmissible,
}

/// Curve positions at one mass.
#[derive(Debug, Clone, Copy)]
struct CurveLevels {
    plus: Option<(f64, f64)>,
    minus: Option<(f64, f64)>,
}

fn curve_levels(mass: f64, omega: &DispersionRelation, spec: &QuadratureSpec) -> Result<CurveLevels> {
    Ok(CurveLevels {
        plus: curve_energy(Side::Top, mass, omega, spec)?,
        minus: curve_energy(Side::Bottom, mass, omega, spec)?,
    })
}

fn near(x: f64, y: f64) -> bool {
    (x - y).abs() <= CURVE_BAND * y.abs()
}

/// Targets on a curve (within [`CURVE_BAND`]) count as above `C₊` or below
/// `C₋`, where the maximizer carries a zero-mass atom.
fn classify_with(target: &MassEnergy, levels: &CurveLevels) -> Region {
    let e = target.energy;
    if let Some((_, f)) = levels.plus {
        if e >= f || near(e, f) {
            return Region::AboveCurvePlus;
        }
    }
    if let Some((_, f)) = levels.minus {
        if e <= f || near(e, f) {
            return Region::BelowCurveMinus;
        }
    }
    Region::InteriorS
}

/// Position of a target relative to `S`. `curves` only decides which
/// curves exist; `f±(M₀)` is recomputed at the target mass.
pub fn region_classify(
    target: &MassEnergy,
    curves: &BoundaryCurves,
    omega: &DispersionRelation,
    spec: &QuadratureSpec,
) -> Result<Region> {
    let a = omega.a();
    if require_strict(target, a).is_err() {
        return Ok(Region::Inadmissible);
    }
    let mut levels = curve_levels(target.mass, omega, spec)?;
    if curves.plus.is_none() {
        levels.plus = None;
    }
    if curves.minus.is_none() {
        levels.minus = None;
    }
    Ok(classify_with(target, &levels))
}

/// Mass of `B_{ρ cos φ, ρ sin φ}`.
fn ray_mass(rho: f64, phi: f64, omega: &DispersionRelation, spec: &QuadratureSpec) -> Result<MassEnergy> {
    let p = EqParams::polar(rho, phi);
    // Angles strictly inside the range can still round onto a line.
    if p.locate(omega.a())? != ParamLocation::Interior {
        return Err(Error::Unresolvable { mu: p.mu, nu: p.nu });
    }
    be_moments(&p, omega, spec)
}

/// Solve `M(ρ; φ) = M₀` for `ρ`; returns `ρ` and the moments there.
fn radius_for_mass(
    phi: f64,
    mass: f64,
    omega: &DispersionRelation,
    spec: &QuadratureSpec,
) -> Result<(f64, MassEnergy)> {
    let a = omega.a();
    let unit = EqParams::polar(1.0, phi);
    let [m_rj] = omega.integrate_spectral::<1, _>(spec, Mode::Smooth, |s| {
        [1.0 / s.affine(a, unit.mu, unit.nu)]
    })?;
    let m_rj = m_rj.checked(spec)?;
    // M_RJ/ρ − (2π)^d/2 < M(ρ) < M_RJ/ρ.
    let lo = m_rj / (mass + 0.5 * omega.volume());
    let hi = m_rj / mass;
    let f = |rho: f64| Ok(ray_mass(rho, phi, omega, spec)?.mass - mass);
    let rho = decreasing_root_upward(f, lo, hi, 2.0, 1e-14)?;
    Ok((rho, ray_mass(rho, phi, omega, spec)?))
}

/// Energy of the density of mass `M₀` on the ray of angle `φ`.
pub fn ray_energy_at_mass(
    phi: f64,
    mass: f64,
    omega: &DispersionRelation,
    spec: &QuadratureSpec,
) -> Result<f64> {
    Ok(radius_for_mass(phi, mass, omega, spec)?.1.energy)
}

/// The unique `(μ, ν)` with `be_moments = target`, for targets in `S` or
/// on one of its boundary curves.
///
/// Nested root finding: for each angle `φ` the radius is fixed by the mass
/// (which decreases strictly in `ρ`), and the angle by the energy, which
/// increases strictly in `φ` from `f₋(M₀)` (or `aM₀`) to `f₊(M₀)` (or
/// `M₀`).
pub fn solve_be(
    target: &MassEnergy,
    omega: &DispersionRelation,
    spec: &QuadratureSpec,
) -> Result<EqParams> {
    let a = omega.a();
    require_strict(target, a)?;
    let levels = curve_levels(target.mass, omega, spec)?;
    solve_be_with(target, omega, spec, &levels)
}

fn solve_be_with(
    target: &MassEnergy,
    omega: &DispersionRelation,
    spec: &QuadratureSpec,
    levels: &CurveLevels,
) -> Result<EqParams> {
    let a = omega.a();
    let (m0, e0) = (target.mass, target.energy);
    let outside = Error::OutsideRegionS {
        mass: m0,
        energy: e0,
    };
    let upper = match levels.plus {
        Some((t, f)) if near(e0, f) => return Ok(EqParams::new(-t, t)),
        Some((_, f)) if e0 > f => return Err(outside),
        Some((_, f)) => f,
        None => m0,
    };
    let lower = match levels.minus {
        Some((t, f)) if near(e0, f) => return Ok(EqParams::new(t, -a * t)),
        Some((_, f)) if e0 < f => return Err(outside),
        Some((_, f)) => f,
        None => a * m0,
    };
    let bracket = Bracket::new(phi_bottom(a), PHI_TOP, lower - e0, upper - e0)?;
    let phi = brent(
        |phi| Ok(ray_energy_at_mass(phi, m0, omega, spec)? - e0),
        bracket,
        0.0,
        200,
    )?;
    let (rho, m) = radius_for_mass(phi, m0, omega, spec)?;
    let p = EqParams::polar(rho, phi);
    if p.locate(a)? != ParamLocation::Interior || (m.energy - e0).abs() > ROOT_CHECK * e0 {
        return Err(Error::Unresolvable { mu: p.mu, nu: p.nu });
    }
    Ok(p)
}

/// The quantum entropy maximizer at fixed mass and energy.
///
/// * inside `S`: the Bose-Einstein density alone;
/// * above `C₊`: `B_{−t,t}` with `t` fixed by
///   `M₀ − M(B) = E₀ − E(B)` and an atom of mass `M₀ − M(B)` at the
///   canonical maximum point;
/// * below `C₋`: `B_{t,−at}` with `E₀ − E(B) = a(M₀ − M(B))` and an atom at
///   the canonical minimum point.
pub fn quantum_maximizer(
    target: &MassEnergy,
    omega: &DispersionRelation,
    spec: &QuadratureSpec,
) -> Result<EquilibriumMeasure> {
    let a = omega.a();
    require_strict(target, a)?;
    let levels = curve_levels(target.mass, omega, spec)?;
    let region = classify_with(target, &levels);
    let measure = |params: EqParams, atoms: Vec<Atom>, regime: Regime| EquilibriumMeasure {
        regular: RegularPart::Be(params),
        atoms,
        dispersion_label: omega.label().to_string(),
        regime,
    };
    match region {
        Region::InteriorS => {
            let p = solve_be_with(target, omega, spec, &levels)?;
            Ok(measure(p, vec![], Regime::QuantumInterior))
        }
        Region::AboveCurvePlus => {
            let (t, m_reg) = condensate_line(Side::Top, target, omega, spec)?;
            let atom = Atom {
                point: omega.canonical_max_point().to_vec(),
                mass: (target.mass - m_reg.mass).max(0.0),
            };
            Ok(measure(EqParams::new(-t, t), vec![atom], Regime::QuantumAbove))
        }
        Region::BelowCurveMinus => {
            let (t, m_reg) = condensate_line(Side::Bottom, target, omega, spec)?;
            let atom = Atom {
                point: omega.canonical_min_point().to_vec(),
                mass: (target.mass - m_reg.mass).max(0.0),
            };
            Ok(measure(EqParams::new(t, -a * t), vec![atom], Regime::QuantumBelow))
        }
        Region::Inadmissible => unreachable!("strict admissibility checked above"),
    }
}

/// Line parameter `t` for a condensate regime.
///
/// The atom has `E = M` (top) or `E = aM` (bottom), so the regular part
/// must carry `D = M₀ − E₀` (resp. `E₀ − aM₀`), where `D(t)` is
/// `∫ (1 − ω)B` (resp. `∫ (ω − a)B`). Since `g/(e^{tg} − 1)` lies in
/// `(1/t − g/2, 1/t)`, `D(t) ∈ ((2π)^d/t − X/2, (2π)^d/t)` with `X = ∫ g`,
/// which brackets `t`.
fn condensate_line(
    side: Side,
    target: &MassEnergy,
    omega: &DispersionRelation,
    spec: &QuadratureSpec,
) -> Result<(f64, MassEnergy)> {
    let a = omega.a();
    let v = omega.volume();
    let i = omega.mean_energy_integral(spec)?;
    let (need, x_int) = match side {
        Side::Top => (target.mass - target.energy, v - i),
        Side::Bottom => (target.energy - a * target.mass, i - a * v),
    };
    let carried = |m: &MassEnergy| match side {
        Side::Top => m.mass - m.energy,
        Side::Bottom => m.energy - a * m.mass,
    };
    let lo = v / (need + 0.5 * x_int);
    let hi = v / need;
    let f = |t: f64| Ok(carried(&be_line_moments(side, t, omega, spec)?) - need);
    let t = decreasing_root_upward(f, lo, hi, 2.0, 1e-14)?;
    Ok((t, be_line_moments(side, t, omega, spec)?))
}

/// `(1 + f) ln(1 + f) − f ln f`, with value 0 at `f = 0`.
pub fn quantum_entropy_density(f: f64) -> f64 {
    if f == 0.0 {
        0.0
    } else {
        f.ln_1p() + f * (1.0 / f).ln_1p()
    }
}

/// `∫ [(1 + f) ln(1 + f) − f ln f] dp` of the regular part; atoms carry no
/// entropy.
pub fn quantum_entropy(
    measure: &EquilibriumMeasure,
    omega: &DispersionRelation,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let a = omega.a();
    match &measure.regular {
        RegularPart::Be(p) => {
            p.locate(a)?;
            let (mu, nu) = (p.mu, p.nu);
            // With f = B: y·B − ln(1 − e^{−y}).
            omega.integrate_omega_value(spec, |s| {
                let y = s.affine(a, mu, nu);
                y * bose(y) - (-(-y).exp_m1()).ln()
            })
        }
        RegularPart::Rj(p) => {
            p.locate(a)?;
            let (mu, nu) = (p.mu, p.nu);
            omega.integrate_omega_value(spec, |s| {
                quantum_entropy_density(1.0 / s.affine(a, mu, nu))
            })
        }
        RegularPart::Grid(g) => {
            let mut acc = 0.0;
            for (index, &value) in g.values.iter().enumerate() {
                if value < 0.0 || value.is_nan() {
                    return Err(Error::NonPositiveDensity { index, value });
                }
                acc += quantum_entropy_density(value);
            }
            Ok(g.cell_volume() * acc)
        }
    }
}

/// Pointwise `H(B) + y(f − B) − H(f)`, the Bregman gap of the concave
/// entropy density at `B = 1/(e^y − 1)`.
fn quantum_bregman(f: f64, b: f64) -> f64 {
    if f == 0.0 {
        return b.ln_1p();
    }
    let d = f - b;
    let u = d / b;
    let v = d / (1.0 + b);
    if u.abs() < 0.5 && v.abs() < 0.5 {
        d * d / (b * (1.0 + b)) + f * log1p_minus_x(u) - (1.0 + f) * log1p_minus_x(v)
    } else {
        f * (f / b).ln() - (1.0 + f) * ((1.0 + f) / (1.0 + b)).ln()
    }
}

/// Slack of `H(f) ≤ H(B) + μ(E(f) − E(B)) + ν(M(f) − M(B))`, evaluated on
/// the grid of `f` as a sum of pointwise nonnegative terms.
pub fn check_quantum_inequality(
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
        acc += quantum_bregman(fi, bose(y));
    }
    Ok(f.cell_volume() * acc)
}
