//! Midpoint sample grids of a dispersion relation.
//!
//! Every integral the solvers need has the form `∫ g(ω(p)) dp`, so a level of
//! the midpoint rule only needs the multiset of `ω` values with weights.
//! Relations symmetric under the hyperoctahedral group (coordinate sign flips
//! and permutations) are sampled on the fundamental domain
//! `0 < p_1 ≤ … ≤ p_d < π` with multiplicity weights; even relations without
//! that symmetry use the mirror pairing `ω(p) = ω(−p)`. Both reproduce the
//! full-grid sum exactly up to summation order.
//!
//! Relations whose extrema sit at lattice points with coordinates in
//! `{0, π}` are integrated in the variable `u` of [`warp`]. It clusters nodes
//! at those coordinates, flattens a kink `ω ~ |p|^s` to order `5s + 4`, and
//! resolves the peaks of near-boundary densities at the extrema.

use rayon::prelude::*;

use super::{DispersionRelation, OmegaSample};
use crate::error::{Error, Result};
use crate::quadrature::grid_coordinate;

/// Largest grid kept in memory, in entries (three `f64` each).
const CACHE_LIMIT: usize = 1 << 21;
const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum GridShape {
    /// Sorted index tuples on the positive half axis.
    Hyperoctahedral,
    /// Half of the flat index range, paired with its mirror image.
    MirrorPaired,
}

#[derive(Debug)]
pub(crate) struct SampleGrid {
    gap_bottom: Vec<f64>,
    gap_top: Vec<f64>,
    weight: Vec<f64>,
}

pub(crate) fn entry_count(shape: GridShape, dimension: usize, n: usize) -> u64 {
    let m = (n / 2) as u64;
    match shape {
        GridShape::Hyperoctahedral => match dimension {
            1 => m,
            2 => m * (m + 1) / 2,
            _ => m * (m + 1) * (m + 2) / 6,
        },
        GridShape::MirrorPaired => (n as u64).pow(dimension as u32) / 2,
    }
}

fn permutation_multiplicity(idx: &[usize]) -> f64 {
    match idx.len() {
        1 => 1.0,
        2 => {
            if idx[0] == idx[1] {
                1.0
            } else {
                2.0
            }
        }
        _ => {
            let (i, j, k) = (idx[0], idx[1], idx[2]);
            if i == j && j == k {
                1.0
            } else if i == j || j == k {
                3.0
            } else {
                6.0
            }
        }
    }
}

/// `ψ(u) = u − (2/3) sin 2u + (1/12) sin 4u` and `ψ'(u) = (8/3) sin⁴u`.
///
/// `ψ` is odd, fixes `0`, `±π/2` and `±π`, and satisfies
/// `ψ(u + 2π) = ψ(u) + 2π`, so the warped grid keeps every symmetry of the
/// plain one. `ψ(u) = ψ₁(2u)/2` with `ψ₁(v) = v − (4/3) sin v + (1/6) sin 2v`.
pub(crate) fn warp(u: f64) -> (f64, f64) {
    let jac = (8.0 / 3.0) * u.sin().powi(4);
    // Reflect to the nearest zero of ψ' so the series stays accurate at ±π.
    let (centre, v) = if u.abs() <= std::f64::consts::FRAC_PI_2 {
        (0.0, u)
    } else {
        let c = std::f64::consts::PI.copysign(u);
        (c, u - c)
    };
    (centre + 0.5 * warp_half(2.0 * v), jac)
}

/// `ψ₁(v)` for `|v| ≤ π`. Near `0`, `ψ₁(v) = v⁵/30 + O(v⁷)` is summed as a
/// series to avoid cancellation.
fn warp_half(u: f64) -> f64 {
    if u.abs() < 0.5 {
        // Coefficient of u^{2j+1}: (−1)^j (2^{2j+1}/6 − 4/3) / (2j+1)!.
        let u2 = u * u;
        let mut term = u; // (−1)^j u^{2j+1} / (2j+1)!
        let mut pow2 = 2.0; // 2^{2j+1}
        let mut sum = 0.0;
        for j in 1..=12 {
            let k = (2 * j) as f64;
            term *= -u2 / (k * (k + 1.0));
            pow2 *= 4.0;
            sum += term * (pow2 / 6.0 - 4.0 / 3.0);
        }
        sum
    } else {
        u - (4.0 / 3.0) * u.sin() + (2.0 * u).sin() / 6.0
    }
}

/// Visit all entries whose leading index (or flat chunk) is `outer`.
/// The visit order is fixed so sums are reproducible.
fn visit_outer<V>(shape: GridShape, warped: bool, dimension: usize, n: usize, outer: usize, mut visit: V)
where
    V: FnMut(&[f64], f64),
{
    let h = 2.0 * std::f64::consts::PI / n as f64;
    let cell = h.powi(dimension as i32);
    let node = |i: usize| {
        let u = grid_coordinate(i, n);
        if warped {
            warp(u)
        } else {
            (u, 1.0)
        }
    };
    match shape {
        GridShape::Hyperoctahedral => {
            let m = n / 2;
            let base = cell * f64::from(1u32 << dimension);
            let coord = |i: usize| node(m + i);
            match dimension {
                1 => {
                    let (p, w) = coord(outer);
                    visit(&[p], base * w)
                }
                2 => {
                    let i = outer;
                    let (pi, wi) = coord(i);
                    for j in i..m {
                        let (pj, wj) = coord(j);
                        visit(&[pi, pj], base * wi * wj * permutation_multiplicity(&[i, j]));
                    }
                }
                _ => {
                    let i = outer;
                    let (pi, wi) = coord(i);
                    for j in i..m {
                        let (pj, wj) = coord(j);
                        for k in j..m {
                            let (pk, wk) = coord(k);
                            visit(
                                &[pi, pj, pk],
                                base * wi * wj * wk * permutation_multiplicity(&[i, j, k]),
                            );
                        }
                    }
                }
            }
        }
        GridShape::MirrorPaired => {
            let half = n.pow(dimension as u32) / 2;
            let end = ((outer + 1) * CHUNK).min(half);
            let mut p = [0.0; 3];
            for flat in outer * CHUNK..end {
                let mut rem = flat;
                let mut w = 2.0 * cell;
                for k in (0..dimension).rev() {
                    let (x, wk) = node(rem % n);
                    p[k] = x;
                    w *= wk;
                    rem /= n;
                }
                visit(&p[..dimension], w);
            }
        }
    }
}

fn outer_count(shape: GridShape, dimension: usize, n: usize) -> usize {
    match shape {
        GridShape::Hyperoctahedral => {
            if dimension == 1 {
                n / 2
            } else {
                n / 2
            }
        }
        GridShape::MirrorPaired => (n.pow(dimension as u32) / 2).div_ceil(CHUNK),
    }
}

impl SampleGrid {
    fn build(rel: &DispersionRelation, n: usize) -> SampleGrid {
        let shape = rel.grid_shape();
        let warped = rel.warped();
        let d = rel.dimension();
        let cap = entry_count(shape, d, n) as usize;
        let mut grid = SampleGrid {
            gap_bottom: Vec::with_capacity(cap),
            gap_top: Vec::with_capacity(cap),
            weight: Vec::with_capacity(cap),
        };
        for outer in 0..outer_count(shape, d, n) {
            visit_outer(shape, warped, d, n, outer, |p, w| {
                let s = rel.sample(p);
                grid.gap_bottom.push(s.gap_bottom);
                grid.gap_top.push(s.gap_top);
                grid.weight.push(w);
            });
        }
        grid
    }

    fn len(&self) -> usize {
        self.weight.len()
    }
}

fn non_finite(rel: &DispersionRelation, n: usize, index: usize, value: f64) -> Error {
    // Recover the offending point by replaying the enumeration.
    let shape = rel.grid_shape();
    let warped = rel.warped();
    let d = rel.dimension();
    let mut seen = 0usize;
    let mut found = Vec::new();
    'outer: for outer in 0..outer_count(shape, d, n) {
        let mut hit = None;
        visit_outer(shape, warped, d, n, outer, |p, _| {
            if seen == index && hit.is_none() {
                hit = Some(p.to_vec());
            }
            seen += 1;
        });
        if let Some(p) = hit {
            found = p;
            break 'outer;
        }
    }
    Error::NonFiniteSample {
        point: found,
        value,
    }
}

impl DispersionRelation {
    fn cached_grid(&self, n: usize) -> Option<std::sync::Arc<SampleGrid>> {
        let count = entry_count(self.grid_shape(), self.dimension(), n) as usize;
        if count > CACHE_LIMIT {
            return None;
        }
        let mut cache = self.inner.grids.lock().expect("grid cache poisoned");
        let grid = cache
            .entry(n)
            .or_insert_with(|| std::sync::Arc::new(SampleGrid::build(self, n)));
        Some(grid.clone())
    }

    /// Number of samples a level with `n` points per axis costs.
    pub(crate) fn level_cost(&self, n: usize) -> u64 {
        entry_count(self.grid_shape(), self.dimension(), n)
    }

    /// Midpoint sum of `g(ω(p))` on `n` points per axis.
    pub(crate) fn spectral_sum<const K: usize, G>(&self, n: usize, g: &G) -> Result<[f64; K]>
    where
        G: Fn(OmegaSample) -> [f64; K] + Sync,
    {
        let a = self.a();
        if let Some(grid) = self.cached_grid(n) {
            let len = grid.len();
            let n_chunks = len.div_ceil(CHUNK);
            let chunk = |c: usize| -> std::result::Result<[f64; K], (usize, f64)> {
                let mut acc = [0.0; K];
                for i in c * CHUNK..((c + 1) * CHUNK).min(len) {
                    let gb = grid.gap_bottom[i];
                    let s = OmegaSample {
                        omega: a + gb,
                        gap_bottom: gb,
                        gap_top: grid.gap_top[i],
                    };
                    let v = g(s);
                    let w = grid.weight[i];
                    for k in 0..K {
                        if !v[k].is_finite() {
                            return Err((i, v[k]));
                        }
                        acc[k] += w * v[k];
                    }
                }
                Ok(acc)
            };
            let partials: std::result::Result<Vec<[f64; K]>, (usize, f64)> = if n_chunks > 8 {
                (0..n_chunks).into_par_iter().map(chunk).collect()
            } else {
                (0..n_chunks).map(chunk).collect()
            };
            return match partials {
                Ok(parts) => Ok(fold(&parts)),
                Err((i, v)) => Err(non_finite(self, n, i, v)),
            };
        }

        let shape = self.grid_shape();
        let warped = self.warped();
        let d = self.dimension();
        let outer = outer_count(shape, d, n);
        let partials: Vec<std::result::Result<[f64; K], (Vec<f64>, f64)>> = (0..outer)
            .into_par_iter()
            .map(|o| {
                let mut acc = [0.0; K];
                let mut bad: Option<(Vec<f64>, f64)> = None;
                visit_outer(shape, warped, d, n, o, |p, w| {
                    if bad.is_some() {
                        return;
                    }
                    let v = g(self.sample(p));
                    for k in 0..K {
                        if !v[k].is_finite() {
                            bad = Some((p.to_vec(), v[k]));
                            return;
                        }
                        acc[k] += w * v[k];
                    }
                });
                match bad {
                    Some(b) => Err(b),
                    None => Ok(acc),
                }
            })
            .collect();
        let mut parts = Vec::with_capacity(partials.len());
        for p in partials {
            match p {
                Ok(v) => parts.push(v),
                Err((point, value)) => return Err(Error::NonFiniteSample { point, value }),
            }
        }
        Ok(fold(&parts))
    }
}

fn fold<const K: usize>(parts: &[[f64; K]]) -> [f64; K] {
    let mut out = [0.0; K];
    for p in parts {
        for k in 0..K {
            out[k] += p[k];
        }
    }
    out
}
