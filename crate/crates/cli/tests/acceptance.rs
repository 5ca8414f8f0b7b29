//! The ten acceptance criteria. Each prints one PASS/FAIL line; the process
//! exits nonzero if any fails.

use std::f64::consts::PI;
use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use phonon_eq::quadrature::periodic_midpoint;
use phonon_eq::quantum::{curve_energy, default_t_grid};
use phonon_eq::verify::{
    density_grid_points, param_distance, random_interior_params, random_trig_density,
};
use phonon_eq::*;
use phonon_eq_cli::{
    cmd_phase_diagram, cmd_thresholds, CommonArgs, ModelKind, RunConfig, Statistics, SweepGrid,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = std::result::Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn spec(w: &DispersionRelation) -> QuadratureSpec {
    QuadratureSpec::for_dimension(w.dimension())
}

fn catalog() -> Vec<DispersionRelation> {
    vec![
        nn_dispersion(1, 0.0).unwrap(),
        nn_dispersion(1, 0.5).unwrap(),
        nn_dispersion(2, 0.0).unwrap(),
        nn_dispersion(2, 1.0).unwrap(),
        nn_dispersion(3, 0.0).unwrap(),
        nn_dispersion(3, 1.0).unwrap(),
        nnn_dispersion(2, 0.0).unwrap(),
        nnn_dispersion(3, 0.0).unwrap(),
        cusp_model(1, 0.5, CuspLocation::Bottom).unwrap(),
        cusp_model(1, 0.5, CuspLocation::Top).unwrap(),
    ]
}

fn config(model: ModelKind, d: usize, pinning: Option<f64>, s: Option<f64>, top: bool) -> RunConfig {
    use phonon_eq_cli::config::Location;
    RunConfig::resolve(&CommonArgs {
        model: Some(model),
        dimension: Some(d),
        pinning,
        exponent: s,
        location: s.map(|_| if top { Location::Top } else { Location::Bottom }),
        ..CommonArgs::default()
    })
    .unwrap()
}

fn condensation_table() -> Check {
    let mut rows = Vec::new();
    for d in 1..=3 {
        rows.push((config(ModelKind::Nn, d, Some(0.0), None, false), d >= 2));
        rows.push((config(ModelKind::Nn, d, Some(1.0), None, false), d >= 3));
        rows.push((config(ModelKind::Nnn, d, Some(0.0), None, false), d >= 3));
    }
    for s in [0.1, 0.3, 0.5, 0.7, 0.9, 0.95, 0.99] {
        rows.push((config(ModelKind::Cusp, 1, None, Some(s), false), true));
    }
    rows.push((config(ModelKind::Cusp, 1, None, Some(1.0), false), false));
    let mut lines = Vec::new();
    for (cfg, expected) in &rows {
        let r = cmd_thresholds(cfg).map_err(|e| e.to_string())?;
        ensure(
            r.thresholds.bottom_condensation == *expected,
            format!("{}: bottom condensation {} expected {expected}", r.dispersion, r.thresholds.bottom_condensation),
        )?;
        lines.push(r.dispersion);
    }
    Ok(format!("{} rows match", lines.len()))
}

fn moment_identity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let relations = catalog();
    let mut worst = [0.0f64; 4];
    for k in 0..200 {
        let w = &relations[k % relations.len()];
        let p = random_interior_params(&mut rng, w.a(), 0.01, (0.05, 20.0));
        let m = rj_moments(&p, w, &spec(w)).map_err(|e| e.to_string())?;
        let v = w.volume();
        let err = (p.mu * m.energy + p.nu * m.mass - v).abs() / v;
        let d = w.dimension();
        worst[d] = worst[d].max(err);
        let tol = if d == 3 { 1e-4 } else { 1e-6 };
        ensure(err <= tol, format!("{} at {p:?}: relative error {err:e}", w.label()))?;
    }
    Ok(format!("worst relative error by d: 1: {:e}, 2: {:e}, 3: {:e}", worst[1], worst[2], worst[3]))
}

fn f_limits() -> Check {
    let w = nn_dispersion(1, 0.0).unwrap();
    let s = spec(&w);
    let f = |x: f64| f_function(x, &w, &s).map_err(|e| e.to_string());
    let limit = 2.0 / PI;
    let (up, down) = (f(1e6)?, f(-1e6)?);
    ensure((up - limit).abs() <= 1e-4 && (down - limit).abs() <= 1e-4, format!("F(±1e6) = {up}, {down}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..100 {
        let upper = rng.gen_bool(0.5);
        let mut draw = || {
            let t = 10f64.powf(rng.gen_range(-4.0..6.0));
            if upper {
                -w.a() + t
            } else {
                -1.0 - t
            }
        };
        let (x1, x2) = (draw(), draw());
        let (x1, x2) = (x1.min(x2), x1.max(x2));
        if x1 == x2 {
            continue;
        }
        let (f1, f2) = (f(x1)?, f(x2)?);
        ensure(f1 < f2, format!("F({x1}) = {f1} >= F({x2}) = {f2}"))?;
        lo = lo.min(f1);
        hi = hi.max(f2);
    }
    ensure(lo > w.a() && hi < 1.0, format!("sampled range [{lo}, {hi}]"))?;
    Ok(format!("F(1e6) - 2/pi = {:e}, F(-1e6) - 2/pi = {:e}, range [{lo:.6}, {hi:.6}]", up - limit, down - limit))
}

fn classical_round_trip() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut worst: f64 = 0.0;
    for w in catalog() {
        let s = spec(&w);
        for _ in 0..50 {
            let p = random_interior_params(&mut rng, w.a(), 0.02, (0.1, 10.0));
            let m = rj_moments(&p, &w, &s).map_err(|e| e.to_string())?;
            let q = solve_rj(&m, &w, &s).map_err(|e| format!("{} at {p:?}: {e}", w.label()))?;
            let err = param_distance(&p, &q);
            ensure(err <= 1e-6, format!("{} at {p:?}: recovered {q:?}", w.label()))?;
            worst = worst.max(err);
        }
    }
    Ok(format!("worst relative parameter error {worst:e}"))
}

fn classical_conservation() -> Check {
    let cases = [
        (cusp_model(1, 0.5, CuspLocation::Top).unwrap(), Regime::ClassicalII),
        (cusp_model(1, 0.5, CuspLocation::Bottom).unwrap(), Regime::ClassicalIII),
        (nn_dispersion(1, 0.0).unwrap(), Regime::ClassicalI),
    ];
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (w, regime) in &cases {
        let s = spec(w);
        let th = thresholds(w, &s).map_err(|e| e.to_string())?;
        let band = match regime {
            Regime::ClassicalII => (th.beta, 1.0),
            Regime::ClassicalIII => (w.a(), th.alpha),
            _ => (th.alpha, th.beta),
        };
        for mass in [0.5, 6.0, 40.0] {
            for u in [0.1, 0.5, 0.9] {
                let target = MassEnergy::new(mass, mass * (band.0 + u * (band.1 - band.0)));
                let m = classical_maximizer(&target, w, &s)
                    .map_err(|e| format!("{} at {target:?}: {e}", w.label()))?;
                ensure(m.regime == *regime, format!("{}: regime {} expected {regime}", w.label(), m.regime))?;
                let (rm, re) = moments(&m, w, &s)
                    .map_err(|e| format!("{} at {target:?}: {e}", w.label()))?
                    .relative_residual(&target);
                ensure(rm.max(re) <= 1e-6, format!("{}: residuals {rm:e} {re:e}", w.label()))?;
                worst = worst.max(rm.max(re));
                for atom in &m.atoms {
                    let level = if *regime == Regime::ClassicalII { 1.0 } else { w.a() };
                    ensure(atom.mass >= 0.0, format!("negative atom {atom:?}"))?;
                    ensure(
                        (w.evaluate(&atom.point) - level).abs() <= 1e-12,
                        format!("{}: atom at {:?} is off the extremal set", w.label(), atom.point),
                    )?;
                }
                ensure(m.atoms.len() == regime.atom_count(), "wrong atom count")?;
                count += 1;
            }
        }
    }
    Ok(format!("{count} targets, worst relative residual {worst:e}"))
}

fn entropy_inequalities() -> Check {
    let relations = [
        nn_dispersion(1, 0.0).unwrap(),
        cusp_model(1, 0.5, CuspLocation::Bottom).unwrap(),
        nn_dispersion(2, 0.5).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let (mut min_c, mut min_q) = (f64::INFINITY, f64::INFINITY);
    let (mut eq_c, mut eq_q): (f64, f64) = (0.0, 0.0);
    for k in 0..100 {
        let w = &relations[k % relations.len()];
        let s = spec(w);
        let d = w.dimension();
        let n = density_grid_points(d);
        let p = random_interior_params(&mut rng, w.a(), 0.05, (0.3, 3.0));
        let level = rng.gen_range(0.05..5.0);
        let f = random_trig_density(&mut rng, d, n, 3, level);
        let err = |e: Error| e.to_string();
        min_c = min_c.min(check_classical_inequality(&f, &p, w, &s).map_err(err)?);
        min_q = min_q.min(check_quantum_inequality(&f, &p, w, &s).map_err(err)?);
        if k < relations.len() {
            let r = GridDensity::from_fn(d, n, |q| rj_density(&p, w, q).unwrap());
            let b = GridDensity::from_fn(d, n, |q| be_density(&p, w, q).unwrap());
            eq_c = eq_c.max(check_classical_inequality(&r, &p, w, &s).map_err(err)?.abs());
            eq_q = eq_q.max(check_quantum_inequality(&b, &p, w, &s).map_err(err)?.abs());
        }
    }
    ensure(min_c >= -1e-8 && min_q >= -1e-8, format!("min slacks {min_c:e}, {min_q:e}"))?;
    ensure(eq_c <= 1e-8 && eq_q <= 1e-8, format!("slack at the equilibrium {eq_c:e}, {eq_q:e}"))?;
    Ok(format!("min slack classical {min_c:e}, quantum {min_q:e}; at equality {eq_c:e}, {eq_q:e}"))
}

fn quantum_structure() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let relations = catalog();
    let mut worst = f64::INFINITY;
    for k in 0..100 {
        let w = &relations[k % relations.len()];
        let p = random_interior_params(&mut rng, w.a(), 0.01, (0.05, 20.0));
        let abc = abc_integrals(&p, w, &spec(w)).map_err(|e| e.to_string())?;
        let rel = abc.determinant() / (abc.a * abc.c);
        ensure(rel > 0.0, format!("{} at {p:?}: AC - B^2 = {}", w.label(), abc.determinant()))?;
        worst = worst.min(rel);
    }
    let mut slopes = Vec::new();
    for w in [
        cusp_model(1, 0.5, CuspLocation::Top).unwrap(),
        cusp_model(1, 0.5, CuspLocation::Bottom).unwrap(),
        cusp_model(1, 0.2, CuspLocation::Bottom).unwrap(),
    ] {
        let s = spec(&w);
        let th = thresholds(&w, &s).map_err(|e| e.to_string())?;
        let curves = boundary_curves(&w, &s, &default_t_grid()).map_err(|e| e.to_string())?;
        for (curve, limit, name) in [(&curves.plus, th.beta, "C+"), (&curves.minus, th.alpha, "C-")] {
            let Some(c) = curve else { continue };
            ensure(
                c.samples.windows(2).all(|x| x[1].mass < x[0].mass && x[1].energy < x[0].energy),
                format!("{} {name} is not strictly decreasing in t", w.label()),
            )?;
            let m = c.max_mass();
            let ratio = c.interpolate(m) / m;
            ensure(
                (ratio - limit).abs() <= 0.02 * limit,
                format!("{} {name}: f(M)/M = {ratio} vs {limit}", w.label()),
            )?;
            slopes.push(format!("{} {name} {:.3e}", w.label(), ratio / limit - 1.0));
        }
    }
    Ok(format!("min (AC-B^2)/(AC) {worst:e}; relative slope errors: {}", slopes.join(", ")))
}

fn quantum_round_trip() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let relations = [
        nn_dispersion(1, 0.0).unwrap(),
        nn_dispersion(2, 0.5).unwrap(),
        nn_dispersion(3, 1.0).unwrap(),
        cusp_model(1, 0.5, CuspLocation::Top).unwrap(),
        cusp_model(1, 0.5, CuspLocation::Bottom).unwrap(),
    ];
    let (mut worst_rt, mut worst_cl): (f64, f64) = (0.0, 0.0);
    for w in &relations {
        let s = spec(w);
        for k in 0..50 {
            let p = random_interior_params(&mut rng, w.a(), 0.02, (0.1, 10.0));
            let m = be_moments(&p, w, &s).map_err(|e| e.to_string())?;
            let q = solve_be(&m, w, &s).map_err(|e| format!("{} at {p:?}: {e}", w.label()))?;
            let err = param_distance(&p, &q);
            ensure(err <= 1e-6, format!("{} at {p:?}: recovered {q:?}", w.label()))?;
            worst_rt = worst_rt.max(err);
            if k < 10 {
                // Moments of an RJ state of moderate size, scaled by 10^3.
                let base = random_interior_params(&mut rng, w.a(), 0.05, (0.5, 2.0));
                let rj = rj_moments(&base, w, &s).map_err(|e| e.to_string())?;
                let classical = solve_rj(&rj, w, &s).map_err(|e| e.to_string())?;
                let quantum = solve_be(&rj.scaled(1e3), w, &s).map_err(|e| e.to_string())?;
                let expected = EqParams::new(classical.mu / 1e3, classical.nu / 1e3);
                let err = param_distance(&expected, &quantum);
                ensure(err <= 1e-2, format!("{}: classical limit off by {err:e}", w.label()))?;
                worst_cl = worst_cl.max(err);
            }
        }
    }
    Ok(format!("worst round-trip error {worst_rt:e}; worst classical-limit distance {worst_cl:e}"))
}

fn quadrature_convergence() -> Check {
    let i0 = 1.266_065_877_752_008_4;
    let mut ratios = Vec::new();
    for d in 1..=2usize {
        let exact = (2.0 * PI).powi(d as i32) * i0;
        let floor = 1e-10 * exact;
        let f = |p: &[f64]| p[0].cos().exp();
        let mut n = 4;
        let mut prev = (periodic_midpoint(&f, d, n).map_err(|e| e.to_string())? - exact).abs();
        while prev > floor {
            n *= 2;
            let err = (periodic_midpoint(&f, d, n).map_err(|e| e.to_string())? - exact).abs();
            let ratio = prev / err;
            ensure(ratio >= 1e3, format!("d={d}: error ratio {ratio:e} at n={n}"))?;
            ratios.push(format!("d={d} n={n}: {ratio:.1e}"));
            prev = err;
        }
    }

    let s1 = QuadratureSpec::for_dimension(1);
    let s2 = QuadratureSpec::for_dimension(2);
    let half = |x: f64| (x / 2.0).sin();
    let smooth: [(&str, IntegralResult, f64); 3] = [
        ("1 on T^2", integrate(|_| 1.0, &s2).map_err(|e| e.to_string())?, (2.0 * PI).powi(2)),
        ("sin^2(p/2)", integrate(|p| half(p[0]).powi(2), &s1).map_err(|e| e.to_string())?, PI),
        ("|sin(p/2)|", integrate(|p| half(p[0]).abs(), &s1).map_err(|e| e.to_string())?, 4.0),
    ];
    for (name, r, exact) in &smooth {
        let v = r.value.ok_or(format!("{name}: {r:?}"))?;
        ensure(r.is_finite() && (v - exact).abs() <= 1e-7 * exact, format!("{name}: {v} vs {exact}"))?;
    }
    let singular = [
        ("1/|sin(p/2)|", integrate_singular(|p| 1.0 / half(p[0]).abs(), &s1), None),
        (
            "|sin(p/2)|^-1/2",
            integrate_singular(|p| half(p[0]).abs().powf(-0.5), &s1),
            Some(10.488_230_217_168_479),
        ),
        (
            "1/|s(p)| on T^2",
            integrate_singular(|p| 1.0 / (half(p[0]).powi(2) + half(p[1]).powi(2)).sqrt(), &s2),
            Some(50.759_947_737_193_616),
        ),
    ];
    for (name, r, exact) in singular {
        let r = r.map_err(|e| format!("{name}: {e}"))?;
        match exact {
            None => ensure(r.is_divergent(), format!("{name}: {r:?}"))?,
            Some(x) => {
                let v = r.value.ok_or(format!("{name}: {r:?}"))?;
                ensure(r.is_finite() && (v - x).abs() <= 1e-6 * x, format!("{name}: {v} vs {x}"))?;
            }
        }
    }
    Ok(format!("error ratios {}; six canonical integrands classified", ratios.join(", ")))
}

fn phase_diagram_smoke() -> Check {
    let cfg = {
        let mut c = config(ModelKind::Cusp, 1, None, Some(0.5), true);
        c.statistics = Statistics::Quantum;
        c
    };
    let w = cfg.dispersion().map_err(|e| e.to_string())?;
    let grid = SweepGrid::default_for(&w);
    let diagram = cmd_phase_diagram(&cfg, Some(grid)).map_err(|e| e.to_string())?;
    ensure(diagram.cells.len() == 2500, format!("{} cells", diagram.cells.len()))?;
    let count = |r: &str| diagram.cells.iter().filter(|c| c.regime == r).count();
    let (below, interior, above) = (count("BelowCurveMinus"), count("InteriorS"), count("AboveCurvePlus"));
    ensure(below == 0 && interior > 0 && above > 0, format!("bands: below {below}, interior {interior}, above {above}"))?;
    let s = spec(&w);
    for row in diagram.cells.chunks(grid.e_steps) {
        let m = row[0].mass;
        let (_, f_plus) = curve_energy(Side::Top, m, &w, &s)
            .map_err(|e| e.to_string())?
            .ok_or("C+ missing")?;
        let mut seen_above = false;
        for c in row {
            ensure(c.atom_mass.map_or(true, f64::is_finite), "non-finite atom mass")?;
            match c.regime.as_str() {
                "Inadmissible" => ensure(c.energy <= 0.0 || c.energy >= m, format!("admissible cell marked inadmissible {c:?}"))?,
                "InteriorS" => ensure(!seen_above && c.energy < f_plus, format!("interior cell above C+ {c:?}"))?,
                "AboveCurvePlus" => {
                    seen_above = true;
                    ensure(c.energy >= f_plus * (1.0 - 1e-9) && c.atom_mass.unwrap() >= 0.0, format!("{c:?}"))?
                }
                other => return Err(format!("unexpected regime {other}")),
            }
        }
    }
    Ok(format!("{interior} InteriorS, {above} AboveCurvePlus, {below} BelowCurveMinus cells"))
}

fn main() {
    let criteria: [(&str, fn() -> Check, Option<Duration>); 10] = [
        ("condensation table", condensation_table, Some(Duration::from_secs(120))),
        ("moment identity", moment_identity, Some(Duration::from_secs(60))),
        ("F limits and monotonicity", f_limits, None),
        ("classical round trip", classical_round_trip, Some(Duration::from_secs(120))),
        ("classical maximizer conservation", classical_conservation, None),
        ("entropy inequalities", entropy_inequalities, None),
        ("quantum structure", quantum_structure, None),
        ("quantum round trip and classical limit", quantum_round_trip, None),
        ("quadrature convergence", quadrature_convergence, None),
        ("phase diagram smoke test", phase_diagram_smoke, Some(Duration::from_secs(60))),
    ];
    let mut failures = 0;
    for (i, (name, check, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|p| Err(format!("panicked: {p:?}")));
        let elapsed = start.elapsed();
        let outcome = match (outcome, limit) {
            (Ok(_), Some(l)) if elapsed > *l => Err(format!("took {elapsed:?}, limit {l:?}")),
            (o, _) => o,
        };
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("{tag} criterion {} {name} ({:.1}s): {detail}", i + 1, elapsed.as_secs_f64());
        if outcome.is_err() {
            failures += 1;
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
