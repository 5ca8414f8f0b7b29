use std::f64::consts::PI;

use phonon_eq::quadrature::periodic_midpoint;
use phonon_eq::*;
use proptest::prelude::*;

// I0(1), from mpmath.
const BESSEL_I0_1: f64 = 1.2660658777520084;

fn spec(d: usize) -> QuadratureSpec {
    QuadratureSpec::for_dimension(d)
}

#[test]
fn exp_cos_reaches_the_bessel_value() {
    for d in 1..=3 {
        let r = integrate(|p: &[f64]| p.iter().map(|x| x.cos().exp()).product(), &spec(d)).unwrap();
        let want = (2.0 * PI * BESSEL_I0_1).powi(d as i32);
        let got = r.value.unwrap();
        assert!((got / want - 1.0).abs() < 1e-12, "d = {d}: {got} vs {want}");
        assert!(r.converged);
    }
}

#[test]
fn exp_cos_error_drops_a_thousandfold_per_doubling() {
    let exact = 2.0 * PI * BESSEL_I0_1;
    let err = |n| (periodic_midpoint(&|p: &[f64]| p[0].cos().exp(), 1, n).unwrap() - exact).abs();
    let (e4, e8) = (err(4), err(8));
    assert!(e4 / e8 >= 1e3, "{e4} / {e8}");
}

#[test]
fn canonical_integrands_are_classified() {
    let s1 = spec(1);
    let s2 = spec(2);
    let half = |p: &[f64]| 1.0 / (p[0] / 2.0).sin().abs().sqrt();
    let one = |p: &[f64]| 1.0 / (p[0] / 2.0).sin().abs();
    let radial = |p: &[f64]| 1.0 / ((p[0] / 2.0).sin().powi(2) + (p[1] / 2.0).sin().powi(2)).sqrt();
    let inverse_square = |p: &[f64]| 1.0 / ((p[0] / 2.0).sin().powi(2) + (p[1] / 2.0).sin().powi(2));
    assert!(integrate_singular(half, &s1).unwrap().is_finite());
    assert!(integrate_singular(one, &s1).unwrap().is_divergent());
    assert!(integrate_singular(radial, &s2).unwrap().is_finite());
    assert!(integrate_singular(inverse_square, &s2).unwrap().is_divergent());
}

#[test]
fn integrable_singularity_matches_its_closed_form() {
    // ∫ |sin(p/2)|^{-1/2} dp over the circle = 2 B(1/4, 1/2) = 10.4882...
    let r = integrate_singular(|p: &[f64]| 1.0 / (p[0] / 2.0).sin().abs().sqrt(), &spec(1)).unwrap();
    let v = r.value.unwrap();
    assert!((v - 10.488230217168479).abs() < 1e-3 * v, "{v}");
}

#[test]
fn invalid_specs_are_rejected() {
    let bad = spec(1).with_base_points(48);
    assert!(matches!(integrate(|_| 1.0, &bad), Err(Error::InvalidSpec(_))));
    let bad = QuadratureSpec::for_dimension(4);
    assert!(matches!(integrate(|_| 1.0, &bad), Err(Error::InvalidDimension(4))));
}

#[test]
fn non_finite_samples_are_reported() {
    let r = integrate(|p: &[f64]| if p[0] > 3.0 { f64::NAN } else { 1.0 }, &spec(1));
    assert!(matches!(r, Err(Error::NonFiniteSample { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn midpoint_rule_is_linear(a in -5.0f64..5.0, b in -5.0f64..5.0, k in 1u32..4) {
        let f = |p: &[f64]| (p[0] * k as f64).cos() + p[0].sin().exp();
        let g = |p: &[f64]| p[0].cos().powi(2);
        let n = 64;
        let lhs = periodic_midpoint(&|p: &[f64]| a * f(p) + b * g(p), 1, n).unwrap();
        let rhs = a * periodic_midpoint(&f, 1, n).unwrap() + b * periodic_midpoint(&g, 1, n).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn midpoint_rule_is_reflection_invariant(c in -3.0f64..3.0, d in 1usize..=3) {
        let f = |p: &[f64]| p.iter().map(|x| (x + c).sin() + 0.3 * x).sum::<f64>().exp();
        let g = |p: &[f64]| {
            let q: Vec<f64> = p.iter().map(|x| -x).collect();
            f(&q)
        };
        let n = 16;
        prop_assert_eq!(periodic_midpoint(&f, d, n).unwrap(), periodic_midpoint(&g, d, n).unwrap());
    }

    #[test]
    fn trigonometric_polynomials_integrate_exactly(k in 1i32..6, phase in 0.0f64..6.3) {
        let r = integrate(|p: &[f64]| 2.0 + (k as f64 * p[0] + phase).cos(), &spec(1)).unwrap();
        prop_assert!((r.value.unwrap() - 4.0 * PI).abs() < 1e-12);
    }

    /// Stronger singularities have larger partial sums at every level.
    #[test]
    fn singular_partial_sums_order_with_the_exponent(s1 in 0.1f64..0.9, gap in 0.05f64..0.5) {
        let s2 = s1 + gap;
        let f = |s: f64| move |p: &[f64]| (p[0] / 2.0).sin().abs().powf(-s);
        for n in [16, 64, 256] {
            let v1 = periodic_midpoint(&f(s1), 1, n).unwrap();
            let v2 = periodic_midpoint(&f(s2), 1, n).unwrap();
            prop_assert!(v2 > v1);
        }
    }
}
