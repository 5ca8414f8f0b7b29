//! Closed-form lattice dispersion relations.

use std::f64::consts::PI;

use super::grid::GridShape;
use super::{DispersionRelation, Model};
use crate::error::{Error, Result, Side};

fn check_dimension(d: usize) -> Result<()> {
    if (1..=3).contains(&d) {
        Ok(())
    } else {
        Err(Error::InvalidDimension(d))
    }
}

fn check_pinning(pinning: f64) -> Result<()> {
    if pinning.is_finite() && pinning >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidSpec(format!(
            "pinning must be a nonnegative number, got {pinning}"
        )))
    }
}

/// Nearest-neighbour chain, `ω ∝ √(ω₀² + 4 Σ sin²(p_k/2))`, normalized by
/// `√(ω₀² + 4d)`.
pub fn nn_dispersion(d: usize, pinning: f64) -> Result<DispersionRelation> {
    check_dimension(d)?;
    check_pinning(pinning)?;
    let norm = (pinning * pinning + 4.0 * d as f64).sqrt();
    Ok(DispersionRelation::build(
        Model::NearestNeighbor { pinning, norm },
        d,
        pinning / norm,
        norm,
        vec![vec![0.0; d]],
        vec![vec![PI; d]],
        format!("nn(d={d}, pinning={pinning})"),
        GridShape::Hyperoctahedral,
    ))
}

/// Next-nearest-neighbour coupling, `ω ∝ √(ω₀² + 2 Σ sin⁴(p_k/2))`,
/// normalized by `√(ω₀² + 2d)`.
pub fn nnn_dispersion(d: usize, pinning: f64) -> Result<DispersionRelation> {
    check_dimension(d)?;
    check_pinning(pinning)?;
    let norm = (pinning * pinning + 2.0 * d as f64).sqrt();
    Ok(DispersionRelation::build(
        Model::NextNearestNeighbor { pinning, norm },
        d,
        pinning / norm,
        norm,
        vec![vec![0.0; d]],
        vec![vec![PI; d]],
        format!("nnn(d={d}, pinning={pinning})"),
        GridShape::Hyperoctahedral,
    ))
}

/// Power-law cusp of order `s` at one extremum.
///
/// `Bottom`: `ω = (Σ sin²(p_k/2) / d)^{s/2}`, cusp at the minimum `p = 0`.
/// `Top`: `ω = 1 − (Σ sin²(p_k/2) / d)^{s/2}`, cusp at the maximum `p = 0`
/// and a smooth minimum at `(π, …, π)`.
pub fn cusp_model(d: usize, exponent: f64, location: Side) -> Result<DispersionRelation> {
    check_dimension(d)?;
    if !(exponent > 0.0 && exponent <= 1.0) {
        return Err(Error::InvalidExponent(exponent));
    }
    let (min_points, max_points) = match location {
        Side::Bottom => (vec![vec![0.0; d]], vec![vec![PI; d]]),
        Side::Top => (vec![vec![PI; d]], vec![vec![0.0; d]]),
    };
    Ok(DispersionRelation::build(
        Model::Cusp { exponent, location },
        d,
        0.0,
        1.0,
        min_points,
        max_points,
        format!("cusp(d={d}, s={exponent}, {location})"),
        GridShape::Hyperoctahedral,
    ))
}

/// `(Σ sin², Σ cos²)` of the half angles.
#[inline]
fn half_angle_sums(p: &[f64]) -> (f64, f64) {
    let mut s2 = 0.0;
    let mut c2 = 0.0;
    for &x in p {
        let (s, c) = (0.5 * x).sin_cos();
        s2 += s * s;
        c2 += c * c;
    }
    (s2, c2)
}

/// Returns `(ω, ω − a, 1 − ω)`.
#[inline]
pub(super) fn nearest_neighbor_sample(p: &[f64], pinning: f64, norm: f64) -> (f64, f64, f64) {
    let (s2, c2) = half_angle_sums(p);
    let r = (pinning * pinning + 4.0 * s2).sqrt();
    let gb = if s2 == 0.0 {
        0.0
    } else {
        4.0 * s2 / (norm * (r + pinning))
    };
    let gt = 4.0 * c2 / (norm * (norm + r));
    (r / norm, gb, gt)
}

#[inline]
pub(super) fn next_nearest_sample(p: &[f64], pinning: f64, norm: f64) -> (f64, f64, f64) {
    let mut s4 = 0.0;
    // d − Σ sin⁴ = Σ cos²(1 + sin²), free of cancellation near the maximum.
    let mut rest = 0.0;
    for &x in p {
        let (s, c) = (0.5 * x).sin_cos();
        let ss = s * s;
        s4 += ss * ss;
        rest += c * c * (1.0 + ss);
    }
    let r = (pinning * pinning + 2.0 * s4).sqrt();
    let gb = if s4 == 0.0 {
        0.0
    } else {
        2.0 * s4 / (norm * (r + pinning))
    };
    let gt = 2.0 * rest / (norm * (norm + r));
    (r / norm, gb, gt)
}

#[inline]
pub(super) fn cusp_sample(p: &[f64], exponent: f64, location: Side) -> (f64, f64, f64) {
    let d = p.len() as f64;
    let (s2, c2) = half_angle_sums(p);
    let half = 0.5 * exponent;
    let power = (s2 / d).powf(half);
    // 1 − (1 − C/d)^{s/2} without cancellation.
    let complement = -((half) * (-c2 / d).ln_1p()).exp_m1();
    match location {
        Side::Bottom => (power, power, complement),
        Side::Top => (1.0 - power, complement, power),
    }
}
