//! Normalized dispersion relations `ω: T^d → [a, 1]`.
//!
//! A relation is evaluated through [`OmegaSample`], which carries the two
//! gaps `ω − a` and `1 − ω` alongside `ω`. For the catalog relations the gaps
//! are computed in closed forms that do not cancel near the extrema, which is
//! what keeps the singular integrands `1/(ω − a)` and `1/(1 − ω)` accurate at
//! fine grid levels.

mod catalog;
mod coupling;
mod extrema;
mod grid;

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

pub use catalog::{cusp_model, nn_dispersion, nnn_dispersion};
pub use coupling::CouplingStencil;
pub use extrema::from_coupling;

use crate::error::{Error, Result, Side};
use crate::quadrature::{refine, torus_volume, IntegralResult, Mode, Outcome, QuadratureSpec};
use coupling::FourierSymbol;
use grid::{GridShape, SampleGrid};

/// `ω` at a point together with its distances to the extremal values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaSample {
    pub omega: f64,
    /// `ω − a ≥ 0`.
    pub gap_bottom: f64,
    /// `1 − ω ≥ 0`.
    pub gap_top: f64,
}

impl OmegaSample {
    /// `μω + ν`, evaluated from the gap that avoids cancellation: for `μ ≥ 0`
    /// as `(ν + aμ) + μ(ω − a)`, otherwise as `(μ + ν) + (−μ)(1 − ω)`.
    #[inline]
    pub fn affine(&self, a: f64, mu: f64, nu: f64) -> f64 {
        if mu >= 0.0 {
            (nu + a * mu) + mu * self.gap_bottom
        } else {
            (mu + nu) - mu * self.gap_top
        }
    }
}

/// Where a cusp model puts its singular extremum.
pub type CuspLocation = Side;

#[derive(Debug, Clone)]
pub(crate) enum Model {
    NearestNeighbor { pinning: f64, norm: f64 },
    NextNearestNeighbor { pinning: f64, norm: f64 },
    Cusp { exponent: f64, location: Side },
    Coupling { symbol: FourierSymbol, raw_max: f64 },
}

/// Gap integrals `∫ dp/(ω − a)` and `∫ dp/(1 − ω)` classified as finite or
/// divergent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapIntegrals {
    pub bottom: IntegralResult,
    pub top: IntegralResult,
}

#[derive(Debug)]
struct Inner {
    model: Model,
    dimension: usize,
    a: f64,
    raw_max: f64,
    min_points: Vec<Vec<f64>>,
    max_points: Vec<Vec<f64>>,
    label: String,
    shape: GridShape,
    /// Integrate in the warped variable of [`grid::warp`].
    warped: bool,
    grids: Mutex<HashMap<usize, Arc<SampleGrid>>>,
    gaps: Mutex<Vec<(QuadratureSpec, Result<GapIntegrals>)>>,
}

/// A normalized dispersion relation. Cloning is cheap and clones share the
/// sample-grid and gap-integral caches.
#[derive(Debug, Clone)]
pub struct DispersionRelation {
    inner: Arc<Inner>,
}

/// Map each coordinate into `[−π, π)`.
#[inline]
pub fn reduce_to_torus(x: f64) -> f64 {
    if (-PI..PI).contains(&x) {
        x
    } else {
        let r = x - 2.0 * PI * ((x + PI) / (2.0 * PI)).floor();
        if r >= PI {
            r - 2.0 * PI
        } else {
            r
        }
    }
}

impl DispersionRelation {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn build(
        model: Model,
        dimension: usize,
        a: f64,
        raw_max: f64,
        min_points: Vec<Vec<f64>>,
        max_points: Vec<Vec<f64>>,
        label: String,
        shape: GridShape,
    ) -> Self {
        let on_axis_grid = |x: &f64| x.abs() < 1e-9 || (x.abs() - PI).abs() < 1e-9;
        let warped = min_points.iter().chain(&max_points).all(|p| p.iter().all(on_axis_grid));
        DispersionRelation {
            inner: Arc::new(Inner {
                model,
                dimension,
                a,
                raw_max,
                min_points,
                max_points,
                label,
                shape,
                warped,
                grids: Mutex::new(HashMap::new()),
                gaps: Mutex::new(Vec::new()),
            }),
        }
    }

    pub fn dimension(&self) -> usize {
        self.inner.dimension
    }

    /// Minimum of `ω` after normalization.
    pub fn a(&self) -> f64 {
        self.inner.a
    }

    /// Maximum of the unnormalized relation.
    pub fn raw_max(&self) -> f64 {
        self.inner.raw_max
    }

    pub fn min_points(&self) -> &[Vec<f64>] {
        &self.inner.min_points
    }

    pub fn max_points(&self) -> &[Vec<f64>] {
        &self.inner.max_points
    }

    /// Lexicographically first point where `ω = a`.
    pub fn canonical_min_point(&self) -> &[f64] {
        &self.inner.min_points[0]
    }

    /// Lexicographically first point where `ω = 1`.
    pub fn canonical_max_point(&self) -> &[f64] {
        &self.inner.max_points[0]
    }

    pub fn label(&self) -> &str {
        &self.inner.label
    }

    pub(crate) fn grid_shape(&self) -> GridShape {
        self.inner.shape
    }

    /// Whether integrals use the node-clustering substitution.
    pub fn warped(&self) -> bool {
        self.inner.warped
    }

    /// `ω(p)`, clamped to `[a, 1]`.
    pub fn evaluate(&self, p: &[f64]) -> f64 {
        self.sample(p).omega
    }

    /// `ω(p)` with both gaps. Panics if `p` has the wrong dimension.
    pub fn sample(&self, p: &[f64]) -> OmegaSample {
        let d = self.inner.dimension;
        assert_eq!(p.len(), d, "point dimension mismatch");
        let mut q = [0.0; 3];
        for k in 0..d {
            q[k] = reduce_to_torus(p[k]);
        }
        let q = &q[..d];
        let a = self.inner.a;
        let (omega, gb, gt) = match &self.inner.model {
            Model::NearestNeighbor { pinning, norm } => {
                catalog::nearest_neighbor_sample(q, *pinning, *norm)
            }
            Model::NextNearestNeighbor { pinning, norm } => {
                catalog::next_nearest_sample(q, *pinning, *norm)
            }
            Model::Cusp { exponent, location } => catalog::cusp_sample(q, *exponent, *location),
            Model::Coupling { symbol, raw_max } => {
                let w = symbol.eval(q).max(0.0).sqrt() / raw_max;
                (w, w - a, 1.0 - w)
            }
        };
        let omega = omega.clamp(a, 1.0);
        OmegaSample {
            omega,
            gap_bottom: gb.clamp(0.0, 1.0 - a),
            gap_top: gt.clamp(0.0, 1.0 - a),
        }
    }

    pub(crate) fn check_spec(&self, spec: &QuadratureSpec) -> Result<()> {
        spec.validate()?;
        if spec.dimension != self.dimension() {
            return Err(Error::InvalidSpec(format!(
                "quadrature dimension {} does not match dispersion dimension {}",
                spec.dimension,
                self.dimension()
            )));
        }
        Ok(())
    }

    /// Run the refinement engine on `∫ g(ω(p)) dp` (vector valued).
    pub(crate) fn integrate_spectral<const K: usize, G>(
        &self,
        spec: &QuadratureSpec,
        mode: Mode,
        g: G,
    ) -> Result<[Outcome; K]>
    where
        G: Fn(OmegaSample) -> [f64; K] + Sync,
    {
        self.check_spec(spec)?;
        refine::<K, _>(spec, mode, |n| {
            if self.level_cost(n) > spec.max_level_evaluations {
                return Ok(None);
            }
            self.spectral_sum(n, &g).map(Some)
        })
    }

    /// `∫ g(ω(p)) dp` for a bounded `g`.
    pub fn integrate_omega<G>(&self, spec: &QuadratureSpec, g: G) -> Result<IntegralResult>
    where
        G: Fn(OmegaSample) -> f64 + Sync,
    {
        let [out] = self.integrate_spectral::<1, _>(spec, Mode::Smooth, |s| [g(s)])?;
        out.into_result()
    }

    /// [`integrate_omega`](Self::integrate_omega) for solver use: the value,
    /// or `Inconclusive` when refinement ran out well short of `rel_tol`.
    pub(crate) fn integrate_omega_value<G>(&self, spec: &QuadratureSpec, g: G) -> Result<f64>
    where
        G: Fn(OmegaSample) -> f64 + Sync,
    {
        let [out] = self.integrate_spectral::<1, _>(spec, Mode::Smooth, |s| [g(s)])?;
        out.checked(spec)
    }

    /// `∫ ω dp`.
    pub fn mean_energy_integral(&self, spec: &QuadratureSpec) -> Result<f64> {
        let r = self.integrate_omega(spec, |s| s.omega)?;
        Ok(r.value.unwrap_or(f64::NAN))
    }

    /// Both gap integrals, cached per quadrature spec.
    pub fn gap_integrals(&self, spec: &QuadratureSpec) -> Result<GapIntegrals> {
        {
            let cache = self.inner.gaps.lock().expect("gap cache poisoned");
            if let Some((_, r)) = cache.iter().find(|(s, _)| s == spec) {
                return r.clone();
            }
        }
        let result = self.compute_gap_integrals(spec);
        let mut cache = self.inner.gaps.lock().expect("gap cache poisoned");
        if !cache.iter().any(|(s, _)| s == spec) {
            cache.push((*spec, result.clone()));
        }
        result
    }

    fn compute_gap_integrals(&self, spec: &QuadratureSpec) -> Result<GapIntegrals> {
        let [bottom, top] = self.integrate_spectral::<2, _>(spec, Mode::Singular, |s| {
            [1.0 / s.gap_bottom, 1.0 / s.gap_top]
        })?;
        let bottom = bottom
            .into_result()
            .map_err(|e| Error::InconclusiveIntegral {
                side: Side::Bottom,
                source: Box::new(e),
            })?;
        let top = top.into_result().map_err(|e| Error::InconclusiveIntegral {
            side: Side::Top,
            source: Box::new(e),
        })?;
        Ok(GapIntegrals { bottom, top })
    }

    /// `(2π)^d`.
    pub fn volume(&self) -> f64 {
        torus_volume(self.dimension())
    }
}

/// `(∫ dp/(ω − a), ∫ dp/(1 − ω))`, each classified finite or divergent.
pub fn extremal_gap_integrals(
    omega: &DispersionRelation,
    spec: &QuadratureSpec,
) -> Result<(IntegralResult, IntegralResult)> {
    let g = omega.gap_integrals(spec)?;
    Ok((g.bottom, g.top))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_reduction() {
        assert_eq!(reduce_to_torus(0.5), 0.5);
        assert!((reduce_to_torus(PI) + PI).abs() < 1e-15);
        assert!((reduce_to_torus(0.5 + 4.0 * PI) - 0.5).abs() < 1e-14);
        assert!((reduce_to_torus(-0.5 - 2.0 * PI) + 0.5).abs() < 1e-14);
        let r = reduce_to_torus(-7.0);
        assert!((-PI..PI).contains(&r));
    }

    #[test]
    fn affine_form_matches_direct_evaluation() {
        let s = OmegaSample {
            omega: 0.3,
            gap_bottom: 0.3 - 0.1,
            gap_top: 0.7,
        };
        for (mu, nu) in [(1.0, 0.5), (-1.0, 2.0), (0.0, 1.0)] {
            let direct = mu * 0.3 + nu;
            assert!((s.affine(0.1, mu, nu) - direct).abs() < 1e-15);
        }
    }
}
