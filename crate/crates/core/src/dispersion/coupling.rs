//! Translation-invariant coupling stencils and their Fourier symbols.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Even coupling `α: Z^d → R` with finite support.
///
/// Inserting an offset also inserts its negative, so a stencil is even by
/// construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingStencil {
    dimension: usize,
    entries: BTreeMap<Vec<i64>, f64>,
}

impl CouplingStencil {
    pub fn new(dimension: usize) -> Result<Self> {
        if !(1..=3).contains(&dimension) {
            return Err(Error::InvalidDimension(dimension));
        }
        Ok(CouplingStencil {
            dimension,
            entries: BTreeMap::new(),
        })
    }

    /// `α(0) = 2d + ω₀²`, `α(±e_k) = −1`.
    pub fn nearest_neighbor(dimension: usize, pinning: f64) -> Result<Self> {
        let mut s = CouplingStencil::new(dimension)?;
        s.insert(&vec![0; dimension], 2.0 * dimension as f64 + pinning * pinning)?;
        for k in 0..dimension {
            let mut e = vec![0; dimension];
            e[k] = 1;
            s.insert(&e, -1.0)?;
        }
        Ok(s)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// All stored offsets, both members of every `±n` pair included.
    pub fn entries(&self) -> &BTreeMap<Vec<i64>, f64> {
        &self.entries
    }

    pub fn get(&self, offset: &[i64]) -> Option<f64> {
        self.entries.get(offset).copied()
    }

    /// Largest `|n_k|` over the support.
    pub fn radius(&self) -> i64 {
        self.entries
            .keys()
            .flat_map(|n| n.iter().map(|c| c.abs()))
            .max()
            .unwrap_or(0)
    }

    /// Set `α(n) = α(−n) = value`. Re-inserting an offset with the same value
    /// is a no-op; a different value is an error.
    pub fn insert(&mut self, offset: &[i64], value: f64) -> Result<()> {
        if offset.len() != self.dimension {
            return Err(Error::InvalidStencil(format!(
                "offset {offset:?} has {} components, expected {}",
                offset.len(),
                self.dimension
            )));
        }
        if !value.is_finite() {
            return Err(Error::InvalidStencil(format!(
                "coefficient at {offset:?} is not finite"
            )));
        }
        let neg: Vec<i64> = offset.iter().map(|c| -c).collect();
        for key in [offset.to_vec(), neg] {
            match self.entries.get(&key) {
                Some(&old) if old != value => {
                    return Err(Error::InvalidStencil(format!(
                        "conflicting coefficients {old} and {value} at offset {key:?} (stencils are even)"
                    )));
                }
                Some(_) => {}
                None => {
                    self.entries.insert(key, value);
                }
            }
        }
        Ok(())
    }

    /// Parse the text format: one `n_1 … n_d value` per line, `#` starts a
    /// comment. The dimension is taken from the first data line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut stencil: Option<CouplingStencil> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() < 2 {
                return Err(Error::InvalidStencil(format!(
                    "line {}: expected `n_1 … n_d value`",
                    lineno + 1
                )));
            }
            let d = fields.len() - 1;
            let s = match &mut stencil {
                Some(s) => s,
                None => stencil.insert(CouplingStencil::new(d)?),
            };
            if d != s.dimension {
                return Err(Error::InvalidStencil(format!(
                    "line {}: {} offset components, expected {}",
                    lineno + 1,
                    d,
                    s.dimension
                )));
            }
            let offset = fields[..d]
                .iter()
                .map(|f| f.parse::<i64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::InvalidStencil(format!("line {}: {e}", lineno + 1)))?;
            let value: f64 = fields[d]
                .parse()
                .map_err(|e| Error::InvalidStencil(format!("line {}: {e}", lineno + 1)))?;
            s.insert(&offset, value)
                .map_err(|e| Error::InvalidStencil(format!("line {}: {e}", lineno + 1)))?;
        }
        stencil.ok_or_else(|| Error::InvalidStencil("no coefficients".into()))
    }

    /// Serialize in the text format accepted by [`CouplingStencil::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (n, v) in &self.entries {
            for c in n {
                out.push_str(&format!("{c} "));
            }
            out.push_str(&format!("{v:?}\n"));
        }
        out
    }

    /// True when the stencil is invariant under coordinate permutations and
    /// sign flips.
    pub fn is_hyperoctahedral(&self) -> bool {
        let perms: &[&[usize]] = match self.dimension {
            1 => &[&[0]],
            2 => &[&[0, 1], &[1, 0]],
            _ => &[
                &[0, 1, 2],
                &[0, 2, 1],
                &[1, 0, 2],
                &[1, 2, 0],
                &[2, 0, 1],
                &[2, 1, 0],
            ],
        };
        self.entries.iter().all(|(n, v)| {
            perms.iter().all(|perm| {
                (0..1u32 << self.dimension).all(|signs| {
                    let m: Vec<i64> = perm
                        .iter()
                        .enumerate()
                        .map(|(k, &src)| {
                            if signs >> k & 1 == 1 {
                                -n[src]
                            } else {
                                n[src]
                            }
                        })
                        .collect();
                    self.entries.get(&m) == Some(v)
                })
            })
        })
    }

    pub(crate) fn symbol(&self) -> FourierSymbol {
        let mut constant = 0.0;
        let mut terms = Vec::new();
        for (n, &v) in &self.entries {
            constant += v;
            // One representative per ±n pair: the lexicographically larger one.
            if n.iter().all(|&c| c == 0) {
                continue;
            }
            let neg: Vec<i64> = n.iter().map(|c| -c).collect();
            if *n > neg {
                terms.push((n.iter().map(|&c| c as f64).collect(), v));
            }
        }
        FourierSymbol {
            dimension: self.dimension,
            constant,
            terms,
        }
    }
}

/// `α̂(p) = Σ_n α(n) cos(n·p) = α̂(0) − 4 Σ_{pairs} α(n) sin²(n·p/2)`.
///
/// The sine form keeps `α̂` accurate near `p = 0`, where an unpinned
/// coupling vanishes.
#[derive(Debug, Clone)]
pub(crate) struct FourierSymbol {
    dimension: usize,
    constant: f64,
    terms: Vec<(Vec<f64>, f64)>,
}

impl FourierSymbol {
    pub(crate) fn eval(&self, p: &[f64]) -> f64 {
        let mut acc = self.constant;
        for (n, v) in &self.terms {
            let mut phase = 0.0;
            for k in 0..self.dimension {
                phase += n[k] * p[k];
            }
            let s = (0.5 * phase).sin();
            acc -= 4.0 * v * s * s;
        }
        acc
    }
}
