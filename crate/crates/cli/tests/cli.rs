use std::process::Command;

use phonon_eq::Regime;
use phonon_eq_cli::{run, PhaseDiagram, SolveReport, ThresholdsReport};
use serde_json::Value;

fn run_args(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("phonon-eq").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn error_kind(stderr: &str) -> String {
    let v: Value = serde_json::from_str(stderr.trim()).unwrap();
    v["error"]["kind"].as_str().unwrap().to_string()
}

#[test]
fn solve_reports_a_conserving_maximizer() {
    let (code, out, err) = run_args(&["solve", "--model", "nn", "--d", "1", "--omega0", "0.5", "--mass", "2", "--energy", "1.5"]);
    assert_eq!(code, 0, "{err}");
    let r: SolveReport = serde_json::from_str(&out).unwrap();
    assert_eq!(r.regime, Regime::ClassicalI);
    assert!(r.atoms.is_empty());
    assert!(r.residuals.mass_residual.max(r.residuals.energy_residual) < 1e-6);
}

#[test]
fn solve_report_survives_a_json_round_trip() {
    let (code, out, err) =
        run_args(&["solve", "--model", "cusp", "--s", "0.5", "--location", "top", "--d", "1", "--stat", "quantum", "--mass", "3", "--energy", "2.9"]);
    assert_eq!(code, 0, "{err}");
    let r: SolveReport = serde_json::from_str(&out).unwrap();
    assert_eq!(r.regime, Regime::QuantumAbove);
    let again: SolveReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
    assert_eq!(r, again);
    assert_eq!(r.measure.atoms.len(), 1);
}

#[test]
fn energy_above_mass_is_inadmissible() {
    let (code, out, err) = run_args(&["solve", "--mass", "1", "--energy", "2"]);
    assert_eq!(code, 2);
    assert!(out.is_empty());
    assert_eq!(error_kind(&err), "InadmissibleTarget");
}

#[test]
fn line_tolerance_roots_exit_inconclusive() {
    let (code, _, err) = run_args(&["solve", "--d", "1", "--mass", "0.5", "--energy", "0.025"]);
    assert_eq!(code, 3);
    assert_eq!(error_kind(&err), "Unresolvable");
}

#[test]
fn usage_errors_exit_four() {
    for args in [
        &["solve", "--mass", "1"][..],
        &["solve", "--model", "nn", "--s", "0.5", "--mass", "1", "--energy", "0.5"],
        &["solve", "--model", "cusp", "--mass", "1", "--energy", "0.5"],
        &["solve", "--bogus"],
        &["thresholds", "--d", "4"],
    ] {
        let (code, _, err) = run_args(args);
        assert_eq!(code, 4, "{args:?}: {err}");
    }
}

#[test]
fn thresholds_match_the_chain() {
    let (code, out, _) = run_args(&["thresholds", "--d", "1"]);
    assert_eq!(code, 0);
    let r: ThresholdsReport = serde_json::from_str(&out).unwrap();
    assert!((r.thresholds.i - 4.0).abs() < 1e-9);
    assert!(!r.thresholds.bottom_condensation);
}

#[test]
fn config_file_supplies_missing_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "model = cusp\ns = 0.5\nlocation = top\nd = 1\nmass = 3\nenergy = 1  # overridden\n").unwrap();
    let (code, out, err) = run_args(&["solve", "--config", cfg.to_str().unwrap(), "--energy", "2.9"]);
    assert_eq!(code, 0, "{err}");
    let r: SolveReport = serde_json::from_str(&out).unwrap();
    assert_eq!(r.regime, Regime::ClassicalII);
    assert_eq!(r.target.energy, 2.9);

    std::fs::write(&cfg, "colour = blue\n").unwrap();
    let (code, _, err) = run_args(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 4);
    assert_eq!(error_kind(&err), "Usage");
}

#[test]
fn phase_diagram_writes_cells_and_curves() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("phase.csv");
    let (code, _, err) = run_args(&[
        "phase-diagram", "--model", "cusp", "--s", "0.5", "--location", "top", "--d", "1", "--stat", "quantum",
        "--m-steps", "10", "--e-steps", "8", "-o", path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("M,E,regime,atom_mass"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 80);
    assert!(!text.contains("NaN") && !text.contains("nan"));
    for region in ["InteriorS", "AboveCurvePlus"] {
        assert!(rows.iter().any(|r| r.contains(region)), "{region}");
    }

    let curves = std::fs::read_to_string(dir.path().join("phase.curves.csv")).unwrap();
    assert_eq!(curves.lines().next(), Some("curve,t,M,E"));
    assert!(curves.lines().skip(1).all(|l| l.starts_with("C+,")));
}

#[test]
fn phase_diagram_json_round_trips() {
    let (code, out, err) = run_args(&[
        "phase-diagram", "--d", "1", "--omega0", "0.5", "--m-steps", "4", "--e-steps", "4", "--format", "json",
    ]);
    assert_eq!(code, 0, "{err}");
    let d: PhaseDiagram = serde_json::from_str(&out).unwrap();
    assert_eq!(d.cells.len(), 16);
    assert!(d.cells.iter().any(|c| c.regime == "Unresolved" && c.atom_mass.is_none()));
    let again: PhaseDiagram = serde_json::from_str(&serde_json::to_string(&d).unwrap()).unwrap();
    assert_eq!(d, again);
}

#[test]
fn curves_csv_lists_both_sides_on_the_cubic_lattice() {
    let (code, out, err) = run_args(&["curves", "--d", "3", "--format", "csv", "--t-count", "12"]);
    assert_eq!(code, 0, "{err}");
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "curve,t,M,E");
    assert!(lines.iter().any(|l| l.starts_with("C+,")));
    assert!(lines.iter().any(|l| l.starts_with("C-,")));
}

#[test]
fn corrupted_identity_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("verify.json");
    let (code, out, _) = run_args(&[
        "verify", "--d", "1", "--omega0", "0.5", "--samples", "4", "--corrupt", "identity",
        "--report", report.to_str().unwrap(),
    ]);
    assert_eq!(code, 1);
    assert!(out.lines().any(|l| l.starts_with("FAIL moment_identity")), "{out}");
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!(v["checks"].as_array().unwrap().iter().any(|c| c["passed"] == false));
}

#[test]
fn binary_prints_json_and_sets_the_exit_code() {
    let bin = env!("CARGO_BIN_EXE_phonon-eq");
    let ok = Command::new(bin).args(["thresholds", "--d", "2"]).output().unwrap();
    assert!(ok.status.success());
    let v: Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(v["bottom_condensation"], true);

    let bad = Command::new(bin).args(["solve", "--mass", "1", "--energy", "2"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let v: Value = serde_json::from_slice(&bad.stderr).unwrap();
    assert_eq!(v["error"]["exit_code"], 2);
}
