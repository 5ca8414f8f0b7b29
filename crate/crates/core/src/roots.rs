//! Bracketed scalar root finding.
//!
//! Every solver in this crate works on a function known to be strictly
//! monotone on an explicit bracket, so a sign-change method with guaranteed
//! convergence is all that is needed. [`brent`] interpolates when it can and
//! falls back to bisection otherwise; the bracket always shrinks.

use crate::error::{Error, Result};

/// A bracket `[lo, hi]` with function values of opposite sign at its ends.
///
/// End values may be limits rather than evaluations (for instance the value a
/// monotone map approaches at an open endpoint); they only steer the first
/// interpolation steps.
#[derive(Debug, Clone, Copy)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
}

impl Bracket {
    pub fn new(lo: f64, hi: f64, f_lo: f64, f_hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::RootFinding(format!("empty bracket [{lo}, {hi}]")));
        }
        if f_lo.is_nan() || f_hi.is_nan() || f_lo * f_hi > 0.0 {
            return Err(Error::RootFinding(format!(
                "no sign change on [{lo}, {hi}]: f = ({f_lo}, {f_hi})"
            )));
        }
        Ok(Bracket { lo, hi, f_lo, f_hi })
    }
}

/// Brent's method. Stops once the bracket is narrower than `xtol` (absolute)
/// or an exact zero is hit.
pub fn brent<F>(mut f: F, bracket: Bracket, xtol: f64, max_iter: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let Bracket {
        lo: mut a,
        hi: mut b,
        f_lo: mut fa,
        f_hi: mut fb,
    } = bracket;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    let mut c = b;
    let mut fc = fb;
    let mut d = b - a;
    let mut e = d;

    for _ in 0..max_iter {
        if (fb > 0.0 && fc > 0.0) || (fb < 0.0 && fc < 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() && fa.is_finite() && fc.is_finite() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 {
            d
        } else {
            tol1.copysign(xm)
        };
        fb = f(b)?;
        if fb.is_nan() {
            return Err(Error::RootFinding(format!("function is NaN at {b}")));
        }
    }
    Err(Error::RootFinding(format!(
        "no convergence after {max_iter} iterations (bracket [{b}, {c}])"
    )))
}

/// Expand `x ↦ x·factor` from `start` until `pred(f(x))` holds; returns the
/// first `(x, f(x))` that satisfies it.
pub fn expand_geometric<F, P>(
    mut f: F,
    start: f64,
    factor: f64,
    max_steps: usize,
    pred: P,
) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
    P: Fn(f64) -> bool,
{
    let mut x = start;
    for _ in 0..max_steps {
        let fx = f(x)?;
        if pred(fx) {
            return Ok((x, fx));
        }
        x *= factor;
    }
    Err(Error::RootFinding(format!(
        "bracket expansion from {start} by {factor} failed after {max_steps} steps"
    )))
}

/// Root of a function decreasing on `[lo, hi]` (`0 < lo`), approached from
/// `lo` in steps `x ↦ factor·x`, so no evaluation lands beyond `factor`
/// times the root. Returns `lo` if `f(lo) ≤ 0` and `hi` if `f(hi) ≥ 0`.
pub fn decreasing_root_upward<F>(mut f: F, lo: f64, hi: f64, factor: f64, rel_tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut x = lo;
    let mut fx = f(lo)?;
    if fx <= 0.0 {
        return Ok(lo);
    }
    loop {
        let next = (x * factor).min(hi);
        let f_next = f(next)?;
        if f_next <= 0.0 {
            if f_next == 0.0 {
                return Ok(next);
            }
            return brent(&mut f, Bracket::new(x, next, fx, f_next)?, rel_tol * next, 200);
        }
        if next >= hi {
            return Ok(hi);
        }
        x = next;
        fx = f_next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn upward_search_stays_near_the_root() {
        let mut largest: f64 = 0.0;
        let x = decreasing_root_upward(
            |x| {
                largest = largest.max(x);
                Ok(3.0 - x)
            },
            0.01,
            1e6,
            2.0,
            1e-14,
        )
        .unwrap();
        assert!((x - 3.0).abs() < 1e-12);
        assert!(largest <= 6.0);
    }

    #[test]
    fn finds_cube_root_of_two() {
        let f = |x: f64| Ok(x * x * x - 2.0);
        let br = Bracket::new(0.0, 2.0, -2.0, 6.0).unwrap();
        let x = brent(f, br, 1e-14, 200).unwrap();
        assert!((x - 2f64.cbrt()).abs() < 1e-13);
    }

    #[test]
    fn decreasing_function() {
        let f = |x: f64| Ok((-x).exp() - 0.25);
        let br = Bracket::new(0.0, 10.0, 0.75, (-10f64).exp() - 0.25).unwrap();
        let x = brent(f, br, 1e-14, 200).unwrap();
        assert!((x - 4f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn limit_values_at_open_ends() {
        // tan is unbounded at ±π/2; only interior points are evaluated.
        let f = |x: f64| Ok(x.tan() - 1.0);
        let h = std::f64::consts::FRAC_PI_2;
        let br = Bracket::new(-h, h, f64::NEG_INFINITY, f64::INFINITY).unwrap();
        let x = brent(f, br, 1e-14, 300).unwrap();
        assert!((x - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn rejects_brackets_without_sign_change() {
        assert!(Bracket::new(0.0, 1.0, 1.0, 2.0).is_err());
        assert!(Bracket::new(1.0, 0.0, -1.0, 2.0).is_err());
    }

    #[test]
    fn geometric_expansion() {
        let (x, fx) = expand_geometric(|x| Ok(x * x), 1.0, 2.0, 20, |v| v > 100.0).unwrap();
        assert_eq!(x, 16.0);
        assert_eq!(fx, 256.0);
    }
}
