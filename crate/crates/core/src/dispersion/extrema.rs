//! Dispersion relations synthesized from coupling stencils.

use std::f64::consts::PI;

use super::coupling::{CouplingStencil, FourierSymbol};
use super::grid::GridShape;
use super::{reduce_to_torus, DispersionRelation, Model};
use crate::error::{Error, Result};
use crate::quadrature::QuadratureSpec;

/// Scan resolution per axis; the scan grid contains `0` and `π`.
fn scan_points(d: usize) -> usize {
    match d {
        1 => 4096,
        2 => 512,
        _ => 64,
    }
}

const MAX_CANDIDATES: usize = 64;

/// `ω = √α̂ / max √α̂` for an even stencil.
///
/// The symbol is scanned on a uniform grid that includes the lattice points
/// `0` and `π`; grid-local extrema are refined by coordinatewise
/// golden-section search and snapped to `{0, π}` coordinates when that does
/// not lose accuracy. `spec` fixes the dimension the relation will be
/// integrated in.
pub fn from_coupling(stencil: &CouplingStencil, spec: &QuadratureSpec) -> Result<DispersionRelation> {
    let d = stencil.dimension();
    if spec.dimension != d {
        return Err(Error::InvalidSpec(format!(
            "quadrature dimension {} does not match stencil dimension {d}",
            spec.dimension
        )));
    }
    if stencil.entries().is_empty() {
        return Err(Error::InvalidStencil("no coefficients".into()));
    }
    let symbol = stencil.symbol();
    let n = scan_points(d);
    let h = 2.0 * PI / n as f64;
    let total = n.pow(d as u32);
    let point = |flat: usize| -> Vec<f64> {
        let mut rem = flat;
        let mut p = vec![0.0; d];
        for k in (0..d).rev() {
            p[k] = -PI + (rem % n) as f64 * h;
            rem /= n;
        }
        p
    };
    let values: Vec<f64> = (0..total).map(|i| symbol.eval(&point(i))).collect();

    let (_, vmax) = arg_extreme(&values, |a, b| a > b);
    let (imin, vmin) = arg_extreme(&values, |a, b| a < b);
    if vmax <= 0.0 {
        return Err(if vmin < 0.0 {
            Error::UnstableCoupling {
                point: point(imin),
                value: vmin,
            }
        } else {
            Error::DegenerateDispersion
        });
    }
    if vmin < -1e-10 * vmax {
        return Err(Error::UnstableCoupling {
            point: point(imin),
            value: vmin,
        });
    }
    let range = vmax - vmin;
    if range <= 1e-12 * vmax {
        return Err(Error::DegenerateDispersion);
    }

    let (max_val, max_points) = refine_extrema(&symbol, &values, n, d, 1.0, range);
    let (neg_min, min_points) = refine_extrema(&symbol, &values, n, d, -1.0, range);
    let min_val = (-neg_min).max(0.0);
    let raw_max = max_val.sqrt();
    let a = min_val.sqrt() / raw_max;
    if a >= 1.0 {
        return Err(Error::DegenerateDispersion);
    }
    let shape = if stencil.is_hyperoctahedral() {
        GridShape::Hyperoctahedral
    } else {
        GridShape::MirrorPaired
    };
    Ok(DispersionRelation::build(
        Model::Coupling { symbol, raw_max },
        d,
        a,
        raw_max,
        min_points,
        max_points,
        format!("coupling(d={d}, radius={})", stencil.radius()),
        shape,
    ))
}

fn arg_extreme(values: &[f64], better: impl Fn(f64, f64) -> bool) -> (usize, f64) {
    let mut best = (0, values[0]);
    for (i, &v) in values.iter().enumerate() {
        if better(v, best.1) {
            best = (i, v);
        }
    }
    best
}

/// Refine the maxima of `sign·α̂`; returns the refined extreme value (of
/// `sign·α̂`) and the sorted, deduplicated extremal points.
fn refine_extrema(
    symbol: &FourierSymbol,
    values: &[f64],
    n: usize,
    d: usize,
    sign: f64,
    range: f64,
) -> (f64, Vec<Vec<f64>>) {
    let f = |p: &[f64]| sign * symbol.eval(p);
    let h = 2.0 * PI / n as f64;
    let best_grid = values
        .iter()
        .map(|v| sign * v)
        .fold(f64::NEG_INFINITY, f64::max);

    // Grid-local maxima close to the global one.
    let mut candidates: Vec<(f64, usize)> = Vec::new();
    let strides: Vec<usize> = (0..d).map(|k| n.pow((d - 1 - k) as u32)).collect();
    for (i, &raw) in values.iter().enumerate() {
        let v = sign * raw;
        if v < best_grid - 0.05 * range {
            continue;
        }
        let idx: Vec<usize> = (0..d).map(|k| i / strides[k] % n).collect();
        let mut local = true;
        'nb: for k in 0..d {
            for step in [1, n - 1] {
                let mut j = i - idx[k] * strides[k];
                j += (idx[k] + step) % n * strides[k];
                if sign * values[j] > v {
                    local = false;
                    break 'nb;
                }
            }
        }
        if local {
            candidates.push((v, i));
        }
    }
    candidates.sort_by(|x, y| y.0.total_cmp(&x.0));
    candidates.truncate(MAX_CANDIDATES);

    let mut refined: Vec<(f64, Vec<f64>)> = candidates
        .iter()
        .map(|&(_, i)| {
            let mut p: Vec<f64> = (0..d).map(|k| -PI + (i / strides[k] % n) as f64 * h).collect();
            let sweeps = if d == 1 { 1 } else { 4 };
            for _ in 0..sweeps {
                for k in 0..d {
                    p[k] = golden_max(|x| {
                        let mut q = p.clone();
                        q[k] = x;
                        f(&q)
                    }, p[k] - h, p[k] + h);
                }
            }
            let mut v = f(&p);
            let snapped: Vec<f64> = p.iter().map(|&x| snap(x)).collect();
            let vs = f(&snapped);
            if vs >= v - 1e-13 * range {
                p = snapped;
                v = vs.max(v);
            }
            let p = p.into_iter().map(canonical_coordinate).collect();
            (v, p)
        })
        .collect();

    let best = refined
        .iter()
        .map(|r| r.0)
        .fold(f64::NEG_INFINITY, f64::max);
    refined.retain(|r| r.0 >= best - 1e-9 * range);
    let mut points: Vec<Vec<f64>> = Vec::new();
    for (_, p) in refined {
        if !points.iter().any(|q| torus_distance(q, &p) < 1e-6) {
            points.push(p);
        }
    }
    points.sort_by(|x, y| {
        x.iter()
            .zip(y)
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let value = points.iter().map(|p| f(p)).fold(f64::NEG_INFINITY, f64::max);
    (value, points)
}

fn snap(x: f64) -> f64 {
    let x = reduce_to_torus(x);
    if x.abs() < 1e-6 {
        0.0
    } else if PI - x.abs() < 1e-6 {
        PI
    } else {
        x
    }
}

/// Representative in `(−π, π]`.
fn canonical_coordinate(x: f64) -> f64 {
    let r = reduce_to_torus(x);
    if r == -PI {
        PI
    } else {
        r
    }
}

fn torus_distance(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(a, b)| {
            let d = reduce_to_torus(a - b).abs();
            d.min(2.0 * PI - d)
        })
        .fold(0.0, f64::max)
}

/// Maximize a unimodal function on `[lo, hi]`.
fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..80 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::nn_dispersion;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn nearest_neighbour_stencil_reproduces_the_chain() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for d in 1..=3 {
            for pinning in [0.0, 1.0] {
                let st = CouplingStencil::nearest_neighbor(d, pinning).unwrap();
                let w = from_coupling(&st, &QuadratureSpec::for_dimension(d)).unwrap();
                let reference = nn_dispersion(d, pinning).unwrap();
                assert!((w.a() - reference.a()).abs() < 1e-12);
                assert!((w.raw_max() - reference.raw_max()).abs() < 1e-12);
                assert_eq!(w.min_points(), reference.min_points());
                assert_eq!(w.max_points(), reference.max_points());
                for _ in 0..1000 {
                    let p: Vec<f64> = (0..d).map(|_| rng.gen_range(-PI..PI)).collect();
                    let diff = (w.evaluate(&p) - reference.evaluate(&p)).abs();
                    assert!(diff < 1e-12, "d={d} pinning={pinning} p={p:?} diff={diff}");
                }
            }
        }
    }

    #[test]
    fn negative_constant_is_unstable() {
        let mut st = CouplingStencil::new(1).unwrap();
        st.insert(&[0], -1.0).unwrap();
        let err = from_coupling(&st, &QuadratureSpec::for_dimension(1)).unwrap_err();
        assert!(matches!(err, Error::UnstableCoupling { .. }));
    }

    #[test]
    fn positive_constant_is_degenerate() {
        let mut st = CouplingStencil::new(2).unwrap();
        st.insert(&[0, 0], 2.0).unwrap();
        let err = from_coupling(&st, &QuadratureSpec::for_dimension(2)).unwrap_err();
        assert_eq!(err, Error::DegenerateDispersion);
    }

    #[test]
    fn unstable_second_neighbour_coupling() {
        // α̂(p) = 4 sin²(p/2) − 8 sin²(p) is negative near p = π/2.
        let mut st = CouplingStencil::new(1).unwrap();
        st.insert(&[0], 2.0 - 4.0).unwrap();
        st.insert(&[1], -1.0).unwrap();
        st.insert(&[2], 2.0).unwrap();
        let err = from_coupling(&st, &QuadratureSpec::for_dimension(1)).unwrap_err();
        assert!(matches!(err, Error::UnstableCoupling { .. }));
    }

    #[test]
    fn interior_maximum_is_located() {
        // α̂(p) = 4 sin²(p/2) + 2.5 − 2.5 cos(2p) peaks away from 0 and π.
        let mut st = CouplingStencil::new(1).unwrap();
        st.insert(&[0], 2.0 + 2.5).unwrap();
        st.insert(&[1], -1.0).unwrap();
        st.insert(&[2], -1.25).unwrap();
        let w = from_coupling(&st, &QuadratureSpec::for_dimension(1)).unwrap();
        assert_eq!(w.max_points().len(), 2);
        for p in w.max_points() {
            assert!(p[0].abs() > 0.1 && p[0].abs() < PI - 0.1);
            assert!((w.evaluate(p) - 1.0).abs() < 1e-12);
        }
        assert_eq!(w.min_points(), &[vec![0.0]]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..2000 {
            let p = [rng.gen_range(-PI..PI)];
            assert!(w.evaluate(&p) <= 1.0);
        }
    }
}
