//! Integration of scalar fields over the torus `T^d = (R / 2πZ)^d`.
//!
//! The rule is the tensor-product periodic midpoint rule on `n` points per
//! axis, offset by half a cell so that `0` and `(π, …, π)` are never sampled.
//! Refinement is dyadic. Two entry points share one refinement engine:
//!
//! * [`integrate`] for bounded integrands (never reports divergence);
//! * [`integrate_singular`] for nonnegative integrands that may blow up at
//!   isolated points, which classifies the integral as finite or divergent.
//!
//! Integrable point singularities make the midpoint rule converge only
//! algebraically, `Q(h) = I + c₁ h^{q} + c₂ h^{q'} + …`, so the engine also
//! runs (iterated) Aitken extrapolation on the level sequence and accepts a
//! value once two consecutive extrapolants agree to `rel_tol`.
//!
//! Divergence is decided from the level increments `δ_k = Q_k − Q_{k−1}`.
//! A logarithmic divergence has `δ_k / δ_{k−1} → 1` and a power divergence a
//! ratio above one, while an integrable singularity gives a ratio bounded
//! below one. A sequence is flagged divergent when, over the last two
//! refinements, the increments stay positive and either stop shrinking or
//! the value grows by `divergence_growth_ratio`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Chunk length for the deterministic blocked summation.
const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub dimension: usize,
    /// Points per axis on the coarsest level; a power of two, at least 16.
    pub base_points_per_axis: usize,
    pub max_refinements: usize,
    pub rel_tol: f64,
    pub divergence_growth_ratio: f64,
    /// Upper bound on integrand evaluations for a single level. Levels beyond
    /// it are treated as if refinements were exhausted.
    pub max_level_evaluations: u64,
}

impl QuadratureSpec {
    /// Defaults: 64 points per axis and `rel_tol = 1e-8` for `d ≤ 2`,
    /// 32 points and `1e-5` for `d = 3`.
    pub fn for_dimension(dimension: usize) -> Self {
        let (base, tol) = if dimension >= 3 { (32, 1e-5) } else { (64, 1e-8) };
        QuadratureSpec {
            dimension,
            base_points_per_axis: base,
            max_refinements: 8,
            rel_tol: tol,
            divergence_growth_ratio: 1.5,
            max_level_evaluations: 250_000_000,
        }
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_base_points(mut self, base: usize) -> Self {
        self.base_points_per_axis = base;
        self
    }

    pub fn with_max_refinements(mut self, max_refinements: usize) -> Self {
        self.max_refinements = max_refinements;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dimension) {
            return Err(Error::InvalidDimension(self.dimension));
        }
        if self.base_points_per_axis < 16 || !self.base_points_per_axis.is_power_of_two() {
            return Err(Error::InvalidSpec(format!(
                "base_points_per_axis must be a power of two >= 16, got {}",
                self.base_points_per_axis
            )));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "rel_tol must be positive, got {}",
                self.rel_tol
            )));
        }
        if !(self.divergence_growth_ratio > 1.0) {
            return Err(Error::InvalidSpec(format!(
                "divergence_growth_ratio must exceed 1, got {}",
                self.divergence_growth_ratio
            )));
        }
        Ok(())
    }

    /// Points per axis at refinement `level` (level 0 is the base grid).
    pub fn points_at(&self, level: usize) -> usize {
        self.base_points_per_axis << level
    }

    /// Volume of the torus, `(2π)^d`.
    pub fn volume(&self) -> f64 {
        torus_volume(self.dimension)
    }
}

pub fn torus_volume(dimension: usize) -> f64 {
    (2.0 * PI).powi(dimension as i32)
}

/// Coordinate of grid index `i` on an `n`-point axis:
/// `−π + (i + ½)·2π/n`. For even `n` it is measured from the centre so that
/// indices `i` and `n − 1 − i` give exactly opposite values.
#[inline]
pub fn grid_coordinate(i: usize, n: usize) -> f64 {
    let h = 2.0 * PI / n as f64;
    let m = n / 2;
    if n % 2 == 1 {
        -PI + (i as f64 + 0.5) * h
    } else if i >= m {
        ((i - m) as f64 + 0.5) * h
    } else {
        -(((m - 1 - i) as f64 + 0.5) * h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntegralKind {
    Finite,
    Divergent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralResult {
    pub kind: IntegralKind,
    /// Present iff `kind` is `Finite`.
    pub value: Option<f64>,
    pub estimated_error: f64,
    pub refinements_used: usize,
    /// False when refinements were exhausted before the tolerance was met.
    pub converged: bool,
}

impl IntegralResult {
    pub fn is_finite(&self) -> bool {
        self.kind == IntegralKind::Finite
    }

    pub fn is_divergent(&self) -> bool {
        self.kind == IntegralKind::Divergent
    }

    pub fn finite_value(&self) -> Option<f64> {
        self.value
    }
}

/// The raw periodic midpoint rule with `n` points per axis over the full grid.
///
/// Terms are summed in mirror pairs `f(p) + f(−p)` inside fixed-size chunks,
/// so the result is bit-for-bit invariant under `f(p) ↦ f(−p)` and does not
/// depend on the number of worker threads.
pub fn periodic_midpoint<F>(f: &F, dimension: usize, n: usize) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if !(1..=3).contains(&dimension) {
        return Err(Error::InvalidDimension(dimension));
    }
    if n < 2 || n % 2 != 0 {
        return Err(Error::InvalidSpec(format!(
            "points per axis must be even, got {n}"
        )));
    }
    let total = n.pow(dimension as u32);
    let half = total / 2;
    let n_chunks = half.div_ceil(CHUNK);
    let weight = (2.0 * PI / n as f64).powi(dimension as i32);

    let chunk_sum = |c: usize| -> Result<f64> {
        let mut p = [0.0; 3];
        let mut q = [0.0; 3];
        let mut acc = 0.0;
        let end = ((c + 1) * CHUNK).min(half);
        for j in c * CHUNK..end {
            let mut rem = j;
            for k in (0..dimension).rev() {
                let i = rem % n;
                rem /= n;
                p[k] = grid_coordinate(i, n);
                q[k] = grid_coordinate(n - 1 - i, n);
            }
            let a = f(&p[..dimension]);
            let b = f(&q[..dimension]);
            if !a.is_finite() {
                return Err(Error::NonFiniteSample {
                    point: p[..dimension].to_vec(),
                    value: a,
                });
            }
            if !b.is_finite() {
                return Err(Error::NonFiniteSample {
                    point: q[..dimension].to_vec(),
                    value: b,
                });
            }
            acc += a + b;
        }
        Ok(acc)
    };

    let partials: Vec<f64> = if n_chunks > 4 {
        (0..n_chunks)
            .into_par_iter()
            .map(chunk_sum)
            .collect::<Result<Vec<_>>>()?
    } else {
        (0..n_chunks).map(chunk_sum).collect::<Result<Vec<_>>>()?
    };
    Ok(weight * partials.iter().sum::<f64>())
}

/// Integrate a bounded field; refines until the successive-level relative
/// change (plain or extrapolated) is at most `rel_tol`.
pub fn integrate<F>(f: F, spec: &QuadratureSpec) -> Result<IntegralResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    spec.validate()?;
    let d = spec.dimension;
    let [out] = refine::<1, _>(spec, Mode::Smooth, |n| {
        if (n as u64).pow(d as u32) > spec.max_level_evaluations {
            return Ok(None);
        }
        Ok(Some([periodic_midpoint(&f, d, n)?]))
    })?;
    out.into_result()
}

/// Integrate a nonnegative field that may be unbounded on a null set, and
/// classify the integral as finite or divergent.
pub fn integrate_singular<F>(f: F, spec: &QuadratureSpec) -> Result<IntegralResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    spec.validate()?;
    let d = spec.dimension;
    let [out] = refine::<1, _>(spec, Mode::Singular, |n| {
        if (n as u64).pow(d as u32) > spec.max_level_evaluations {
            return Ok(None);
        }
        Ok(Some([periodic_midpoint(&f, d, n)?]))
    })?;
    out.into_result()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Mode {
    Smooth,
    Singular,
}

/// Outcome of the refinement engine for one component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Outcome {
    Finite {
        value: f64,
        error: f64,
        levels: usize,
        converged: bool,
    },
    Divergent {
        levels: usize,
    },
    Inconclusive {
        levels: usize,
        last_value: f64,
        last_ratio: f64,
    },
}

impl Outcome {
    pub(crate) fn into_result(self) -> Result<IntegralResult> {
        match self {
            Outcome::Finite {
                value,
                error,
                levels,
                converged,
            } => Ok(IntegralResult {
                kind: IntegralKind::Finite,
                value: Some(value),
                estimated_error: error,
                refinements_used: levels,
                converged,
            }),
            Outcome::Divergent { levels } => Ok(IntegralResult {
                kind: IntegralKind::Divergent,
                value: None,
                estimated_error: f64::INFINITY,
                refinements_used: levels,
                converged: true,
            }),
            Outcome::Inconclusive {
                levels,
                last_value,
                last_ratio,
            } => Err(Error::Inconclusive {
                refinements: levels,
                last_value,
                last_ratio,
            }),
        }
    }

    /// Value of a finite outcome. A smooth-mode outcome that ran out of
    /// refinements is accepted while its error estimate stays within
    /// `√rel_tol` of the value, and is `Inconclusive` beyond that.
    pub(crate) fn checked(&self, spec: &QuadratureSpec) -> Result<f64> {
        self.checked_against(spec, None)
    }

    /// As [`checked`](Self::checked), but measuring the error against `scale`
    /// when the integral is one term of a larger quantity.
    pub(crate) fn checked_against(&self, spec: &QuadratureSpec, scale: Option<f64>) -> Result<f64> {
        match *self {
            Outcome::Finite {
                value,
                error,
                levels,
                converged,
            } => {
                let scale = scale.unwrap_or(value).abs();
                if converged || error <= spec.rel_tol.sqrt() * scale {
                    Ok(value)
                } else {
                    Err(Error::Inconclusive {
                        refinements: levels,
                        last_value: value,
                        last_ratio: error / scale,
                    })
                }
            }
            Outcome::Divergent { levels } => Err(Error::Inconclusive {
                refinements: levels,
                last_value: f64::INFINITY,
                last_ratio: f64::INFINITY,
            }),
            Outcome::Inconclusive { .. } => Err(self.into_result().unwrap_err()),
        }
    }
}

/// How far past `rel_tol` an unconverged smooth integral may be and still
/// feed a solver.
/// Dyadic refinement driver. `level(n)` returns the rule value(s) on `n`
/// points per axis, or `None` when that level exceeds the evaluation budget.
pub(crate) fn refine<const K: usize, L>(
    spec: &QuadratureSpec,
    mode: Mode,
    mut level: L,
) -> Result<[Outcome; K]>
where
    L: FnMut(usize) -> Result<Option<[f64; K]>>,
{
    let mut history: Vec<[f64; K]> = Vec::with_capacity(spec.max_refinements + 1);
    let mut done: [Option<Outcome>; K] = [None; K];

    for lvl in 0..=spec.max_refinements {
        let Some(values) = level(spec.points_at(lvl))? else {
            break;
        };
        history.push(values);
        for c in 0..K {
            if done[c].is_some() {
                continue;
            }
            let seq: Vec<f64> = history.iter().map(|v| v[c]).collect();
            done[c] = assess(&seq, spec, mode);
        }
        if done.iter().all(Option::is_some) {
            break;
        }
    }

    let levels = history.len().saturating_sub(1);
    let mut out = [Outcome::Divergent { levels }; K];
    for c in 0..K {
        out[c] = match done[c] {
            Some(o) => o,
            None => {
                let seq: Vec<f64> = history.iter().map(|v| v[c]).collect();
                exhausted(&seq, mode)
            }
        };
    }
    Ok(out)
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()) || a == b
}

/// One Aitken Δ² step on three consecutive terms; `None` when the increments
/// are not geometric with ratio in (0, 1).
fn aitken(q0: f64, q1: f64, q2: f64) -> Option<f64> {
    let d1 = q1 - q0;
    let d2 = q2 - q1;
    if d1 == 0.0 || d2 == 0.0 {
        return None;
    }
    let r = d2 / d1;
    if !(r > 0.0 && r < 1.0 - 1e-3) {
        return None;
    }
    let v = q2 - d2 * d2 / (d2 - d1);
    v.is_finite().then_some(v)
}

fn aitken_sequence(seq: &[f64]) -> Vec<Option<f64>> {
    if seq.len() < 3 {
        return Vec::new();
    }
    seq.windows(3).map(|w| aitken(w[0], w[1], w[2])).collect()
}

fn second_aitken(first: &[Option<f64>]) -> Vec<Option<f64>> {
    if first.len() < 3 {
        return Vec::new();
    }
    first
        .windows(3)
        .map(|w| match (w[0], w[1], w[2]) {
            (Some(a), Some(b), Some(c)) => aitken(a, b, c),
            _ => None,
        })
        .collect()
}

/// Last two entries both present and agreeing to `tol`.
fn tail_agrees(seq: &[Option<f64>], tol: f64) -> Option<(f64, f64)> {
    let n = seq.len();
    if n < 2 {
        return None;
    }
    match (seq[n - 2], seq[n - 1]) {
        (Some(a), Some(b)) if rel_close(a, b, tol) => Some((b, (b - a).abs())),
        _ => None,
    }
}

fn assess(seq: &[f64], spec: &QuadratureSpec, mode: Mode) -> Option<Outcome> {
    let k = seq.len() - 1;
    let tol = spec.rel_tol;
    let levels = k;

    // Plain successive-level criterion.
    let plain_ok = match mode {
        Mode::Smooth => k >= 1 && rel_close(seq[k], seq[k - 1], tol),
        Mode::Singular => {
            k >= 2 && rel_close(seq[k], seq[k - 1], tol) && rel_close(seq[k - 1], seq[k - 2], tol)
        }
    };
    if plain_ok {
        return Some(Outcome::Finite {
            value: seq[k],
            error: (seq[k] - seq[k - 1]).abs(),
            levels,
            converged: true,
        });
    }

    let first = aitken_sequence(seq);
    let second = second_aitken(&first);
    if let Some((value, error)) = tail_agrees(&second, tol).or_else(|| tail_agrees(&first, tol)) {
        return Some(Outcome::Finite {
            value,
            error,
            levels,
            converged: true,
        });
    }

    if mode == Mode::Singular && k >= 3 && diverging(seq, k, spec.divergence_growth_ratio)
        && diverging(seq, k - 1, spec.divergence_growth_ratio)
    {
        return Some(Outcome::Divergent { levels });
    }
    None
}

/// Increment ratio at or above which a level sequence is read as
/// non-convergent. A midpoint error `∝ h^q` has ratio `2^{−q}`, so algebraic
/// rates slower than `q ≈ 0.044` are indistinguishable from a logarithmic
/// divergence at any practical resolution.
const DIVERGENT_RATIO: f64 = 0.97;

/// Growth test at index `j ≥ 2` of the level sequence: increments positive
/// and either not shrinking (ratio near or above one) or the value grew by
/// `growth` over two refinements.
fn diverging(seq: &[f64], j: usize, growth: f64) -> bool {
    let d_prev = seq[j - 1] - seq[j - 2];
    let d = seq[j] - seq[j - 1];
    if !(d > 0.0 && d_prev > 0.0) {
        return false;
    }
    d / d_prev >= DIVERGENT_RATIO || seq[j] >= growth * seq[j - 2]
}

fn exhausted(seq: &[f64], mode: Mode) -> Outcome {
    let k = seq.len().saturating_sub(1);
    let last = seq.last().copied().unwrap_or(f64::NAN);
    match mode {
        Mode::Smooth => {
            let plain_err = if k >= 1 {
                (seq[k] - seq[k - 1]).abs()
            } else {
                f64::INFINITY
            };
            let first = aitken_sequence(seq);
            let n = first.len();
            let extrapolated = if n >= 2 {
                match (first[n - 2], first[n - 1]) {
                    (Some(a), Some(b)) if (b - a).abs() < plain_err => Some((b, (b - a).abs())),
                    _ => None,
                }
            } else {
                None
            };
            let (value, error) = extrapolated.unwrap_or((last, plain_err));
            Outcome::Finite {
                value,
                error,
                levels: k,
                converged: false,
            }
        }
        Mode::Singular => {
            let last_ratio = if k >= 2 {
                (seq[k] - seq[k - 1]) / (seq[k - 1] - seq[k - 2])
            } else {
                f64::NAN
            };
            Outcome::Inconclusive {
                levels: k,
                last_value: last,
                last_ratio,
            }
        }
    }
}
