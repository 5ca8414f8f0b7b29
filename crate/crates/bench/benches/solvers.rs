//! Timings for the quadrature, threshold and maximizer paths.
//!
//! Relations cache their gap integrals, so the `cold` benches rebuild the
//! relation on every iteration and the rest reuse a warmed one.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use phonon_eq::quantum::default_t_grid;
use phonon_eq::*;

fn spec(w: &DispersionRelation) -> QuadratureSpec {
    QuadratureSpec::for_dimension(w.dimension())
}

fn warm(w: DispersionRelation) -> DispersionRelation {
    thresholds(&w, &spec(&w)).unwrap();
    w
}

fn quadrature(c: &mut Criterion) {
    let mut g = c.benchmark_group("quadrature");
    for d in 1..=3 {
        let s = QuadratureSpec::for_dimension(d);
        g.bench_function(format!("exp_cos_d{d}"), |b| {
            b.iter(|| integrate(|p: &[f64]| p.iter().map(|x| x.cos().exp()).product(), black_box(&s)).unwrap())
        });
    }
    let s = QuadratureSpec::for_dimension(1);
    g.bench_function("singular_half_power", |b| {
        b.iter(|| integrate_singular(|p: &[f64]| 1.0 / (p[0] / 2.0).sin().abs().sqrt(), black_box(&s)).unwrap())
    });
    g.finish();
}

fn threshold_computation(c: &mut Criterion) {
    let mut g = c.benchmark_group("thresholds_cold");
    g.sample_size(10);
    let cases: [(&str, fn() -> DispersionRelation); 3] = [
        ("nn_d1", || nn_dispersion(1, 0.5).unwrap()),
        ("nn_d2", || nn_dispersion(2, 0.0).unwrap()),
        ("cusp_top_d1", || cusp_model(1, 0.5, CuspLocation::Top).unwrap()),
    ];
    for (name, make) in cases {
        g.bench_function(name, |b| {
            b.iter_batched(make, |w| thresholds(&w, &spec(&w)).unwrap(), BatchSize::SmallInput)
        });
    }
    g.finish();
}

fn classical(c: &mut Criterion) {
    let w = warm(nn_dispersion(1, 0.5).unwrap());
    let s = spec(&w);
    let target = rj_moments(&EqParams::new(2.0, 0.5), &w, &s).unwrap();
    let mut g = c.benchmark_group("classical");
    g.bench_function("solve_rj_nn_d1", |b| b.iter(|| solve_rj(black_box(&target), &w, &s).unwrap()));
    let top = warm(cusp_model(1, 0.5, CuspLocation::Top).unwrap());
    let ts = spec(&top);
    let beta = thresholds(&top, &ts).unwrap().beta;
    let above = MassEnergy::new(2.0, 2.0 * 0.5 * (1.0 + beta));
    g.bench_function("maximizer_top_atom", |b| {
        b.iter(|| classical_maximizer(black_box(&above), &top, &ts).unwrap())
    });
    g.finish();
}

fn quantum(c: &mut Criterion) {
    let w = warm(cusp_model(1, 0.5, CuspLocation::Top).unwrap());
    let s = spec(&w);
    let target = be_moments(&EqParams::new(1.0, 0.2), &w, &s).unwrap();
    let mut g = c.benchmark_group("quantum");
    g.sample_size(20);
    g.bench_function("solve_be_cusp_top", |b| b.iter(|| solve_be(black_box(&target), &w, &s).unwrap()));
    let condensed = MassEnergy::new(3.0, 2.9);
    g.bench_function("maximizer_condensate", |b| {
        b.iter(|| quantum_maximizer(black_box(&condensed), &w, &s).unwrap())
    });
    let grid = default_t_grid();
    g.bench_function("boundary_curves", |b| b.iter(|| boundary_curves(&w, &s, black_box(&grid)).unwrap()));
    g.finish();
}

criterion_group!(benches, quadrature, threshold_computation, classical, quantum);
criterion_main!(benches);
