//! End-to-end runs of the `eigenkit` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use eigenkit_cli::output;
use eigenkit_cli::run::peaks_from_scan_file;
use tempfile::TempDir;

const SINGLE_EDGE: &str = r#"{"vertices":2,"edges":[[0,1]]}"#;

fn eigenkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eigenkit")).args(args).output().expect("binary runs")
}

fn write_input(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn assert_ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn qpe_on_a_dyadic_eigenphase_writes_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_input(&dir, "u.json", r#"{"unitary":{"phases":[0.375,0.0]},"initial":{"basis":0}}"#);
    let csv = dir.path().join("qpe.csv");
    let summary = dir.path().join("qpe.json");
    let out = eigenkit(&["qpe", "--input", s(&input), "--output", s(&csv), "--ancilla", "3", "--summary", s(&summary)]);
    assert_ok(&out);
    let rows = output::read_qpe(&csv).unwrap();
    assert_eq!(rows.len(), 1, "{rows:?}");
    assert_eq!(rows[0].k, 3);
    assert!((rows[0].probability - 1.0).abs() < 1e-12);
    let sm: output::QpeSummary = output::read_json(&summary).unwrap();
    assert_eq!(sm.argmax, 3);
    assert_eq!(sm.phase_estimate, 0.375);
    assert_eq!(sm.energy_estimate, None);
}

#[test]
fn rodeo_scan_finds_both_levels_of_the_single_edge_ising() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_input(&dir, "g.json", SINGLE_EDGE);
    let csv = dir.path().join("scan.csv");
    let summary = dir.path().join("peaks.json");
    let args = [
        "rodeo-scan", "--input", s(&input), "--output", s(&csv), "--summary", s(&summary), "--e-min", "-2", "--e-max",
        "1", "--e-points", "31", "--sigma", "5", "--cycles", "3", "--trials", "400", "--seed", "7",
    ];
    assert_ok(&eigenkit(&args));
    let sm: output::ScanSummary = output::read_json(&summary).unwrap();
    let energies: Vec<f64> = sm.peaks.iter().map(|p| p.energy).collect();
    assert_eq!(energies.len(), 2, "{energies:?}");
    assert!((energies[0] + 1.0).abs() <= 0.1, "{energies:?}");
    assert!(energies[1].abs() <= 0.1, "{energies:?}");

    // The scan file alone is enough to recover the peaks.
    let again = peaks_from_scan_file(&csv, 3).unwrap();
    assert_eq!(again.iter().map(|p| p.energy).collect::<Vec<_>>(), energies);
}

#[test]
fn seeded_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_input(&dir, "g.json", SINGLE_EDGE);
    let run = |name: &str, seed: &str| {
        let p = dir.path().join(name);
        let out = eigenkit(&[
            "rodeo-scan", "--input", s(&input), "--output", s(&p), "--e-min", "-1.5", "--e-max", "0.5", "--e-points", "9",
            "--trials", "100", "--seed", seed,
        ]);
        assert_ok(&out);
        std::fs::read(p).unwrap()
    };
    let a = run("a.csv", "11");
    let b = run("b.csv", "11");
    let c = run("c.csv", "12");
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn every_command_round_trips_through_its_reader() {
    let dir = tempfile::tempdir().unwrap();
    let ham = write_input(
        &dir,
        "h.json",
        r#"{"n_qubits":2,"terms":[{"coeff":0.5,"pauli":"ZZ"},{"coeff":0.3,"pauli":"XI"},{"coeff":-0.2,"pauli":"IZ"}],
            "initial":{"eigenstate":0},"unitary":{"dt":0.7},"split":[0,2]}"#,
    );
    let out = |name: &str| dir.path().join(name);

    assert_ok(&eigenkit(&["spectrum", "--input", s(&ham), "--output", s(&out("spec.csv"))]));
    let spec = output::read_spectrum(&out("spec.csv")).unwrap();
    assert_eq!(spec.len(), 4);
    assert!(spec.windows(2).all(|w| w[0].energy <= w[1].energy));

    assert_ok(&eigenkit(&[
        "evolve", "--input", s(&ham), "--output", s(&out("ev.csv")), "--total-time", "1", "--steps", "10", "--order", "2",
    ]));
    let ev = output::read_evolve(&out("ev.csv")).unwrap();
    assert_eq!(ev.len(), 11);
    // An eigenstate keeps its energy under exact evolution; the product formula nearly so.
    assert!(ev.iter().all(|r| (r.energy - spec[0].energy).abs() < 1e-2 && r.fidelity > 0.999));

    assert_ok(&eigenkit(&[
        "adiabatic", "--input", s(&ham), "--output", s(&out("ad.csv")), "--total-time", "2", "8", "--steps", "200",
    ]));
    let ad = output::read_adiabatic(&out("ad.csv")).unwrap();
    assert_eq!(ad.iter().map(|r| r.total_time).collect::<Vec<_>>(), vec![2.0, 8.0]);
    assert!(ad.iter().all(|r| (r.fidelity + r.infidelity - 1.0).abs() < 1e-12));
    assert!(ad[1].infidelity < ad[0].infidelity);

    assert_ok(&eigenkit(&[
        "qpe", "--input", s(&ham), "--output", s(&out("qpe.csv")), "--ancilla", "6", "--summary", s(&out("qpe.json")),
    ]));
    let q = output::read_qpe(&out("qpe.csv")).unwrap();
    assert!((q.iter().map(|r| r.probability).sum::<f64>() - 1.0).abs() < 1e-10);
    let qs: output::QpeSummary = output::read_json(&out("qpe.json")).unwrap();
    assert!((qs.energy_estimate.unwrap() - spec[0].energy).abs() < 2.0 * std::f64::consts::PI / (0.7 * 64.0));

    assert_ok(&eigenkit(&[
        "ipe", "--input", s(&ham), "--output", s(&out("ipe.csv")), "--ancilla", "6", "--summary", s(&out("ipe.json")),
    ]));
    let ipe = output::read_ipe(&out("ipe.csv")).unwrap();
    assert_eq!(ipe.len(), 6);
    let is: output::IpeSummary = output::read_json(&out("ipe.json")).unwrap();
    assert_eq!(is.bit_string.len(), 6);
    // Rounds read the least significant digit first; the string is printed most significant first.
    assert_eq!(is.bit_string, ipe.iter().rev().map(|r| char::from(b'0' + r.digit)).collect::<String>());

    assert_ok(&eigenkit(&[
        "rodeo", "--input", s(&ham), "--output", s(&out("rodeo.json")), "--energy", &spec[0].energy.to_string(),
        "--trials", "50", "--mode", "exact-born",
    ]));
    let r: output::RodeoSummary = output::read_json(&out("rodeo.json")).unwrap();
    assert_eq!(r.mode, "exact-born");
    assert!((r.mean_success - 1.0).abs() < 1e-9, "eigenstate input always succeeds");
    assert!((r.ensemble_fidelity.unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn variational_commands_write_traces() {
    let dir = tempfile::tempdir().unwrap();
    let vqe = write_input(
        &dir,
        "vqe.json",
        r#"{"n_qubits":2,"terms":[{"coeff":1.0,"pauli":"ZZ"},{"coeff":0.5,"pauli":"XI"}],
            "ansatz":{"layers":[{"generator":"IY"},{"generator":"YI"},{"generator":"XY"}],"theta0":[0.1,0.2,0.3]},
            "optimizer":{"step_size":0.2,"max_iterations":400}}"#,
    );
    let trace = dir.path().join("trace.csv");
    let summary = dir.path().join("vqe.json");
    assert_ok(&eigenkit(&["vqe", "--input", s(&vqe), "--output", s(&trace), "--summary", s(&summary)]));
    let rows = output::read_trace(&trace).unwrap();
    assert!(!rows.is_empty());
    let sm: output::VqeSummary = output::read_json(&summary).unwrap();
    assert_eq!(sm.theta.len(), 3);
    assert!(rows.iter().all(|r| r.energy >= sm.energy - 1e-12), "summary holds the best energy seen");

    let graph = write_input(&dir, "tri.json", r#"{"vertices":3,"edges":[[0,1],[1,2],[0,2]],"optimizer":{"max_iterations":50}}"#);
    let qsum = dir.path().join("qaoa.json");
    assert_ok(&eigenkit(&[
        "qaoa", "--input", s(&graph), "--output", s(&dir.path().join("qaoa.csv")), "--steps", "3", "--summary", s(&qsum),
    ]));
    let q: output::QaoaSummary = output::read_json(&qsum).unwrap();
    assert_eq!(q.betas.len(), 3);
    assert!(q.energy <= q.prescription_energy + 1e-12);
    assert!(q.energy >= q.ground_energy - 1e-9);
}

#[test]
fn adiabatic_bound_mode_reaches_the_requested_fidelity() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_input(
        &dir,
        "pair.json",
        r#"{"n_qubits":2,"terms":[{"coeff":0.5,"pauli":"ZZ"},{"coeff":-0.5,"pauli":"II"}],
            "driver":{"n_qubits":2,"terms":[{"coeff":-1,"pauli":"IX"},{"coeff":-1,"pauli":"XI"}]},
            "symmetries":[{"n_qubits":2,"terms":[{"coeff":1,"pauli":"XX"}]}]}"#,
    );
    let out = dir.path().join("bound.json");
    assert_ok(&eigenkit(&["adiabatic", "--input", s(&input), "--output", s(&out), "--delta", "0.1", "--steps", "2000"]));
    let b: output::BoundSummary = output::read_json(&out).unwrap();
    assert!(b.required_time > 0.0);
    assert!(b.fidelity >= 0.9, "{b:?}");

    let both = eigenkit(&["adiabatic", "--input", s(&input), "--output", s(&out), "--delta", "0.1", "--total-time", "3"]);
    assert!(!both.status.success());
    let linear = eigenkit(&["adiabatic", "--input", s(&input), "--output", s(&out), "--delta", "0.1", "--ramp", "linear"]);
    assert!(!linear.status.success());
}

#[test]
fn domain_errors_exit_nonzero_with_context() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_input(&dir, "bad.json", r#"{"n_qubits":1,"terms":[{"coeff":1.0,"pauli":"Q"}]}"#);
    let out_path = dir.path().join("x.csv");
    let out = eigenkit(&["spectrum", "--input", s(&bad), "--output", s(&out_path)]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("terms[0].pauli") && err.contains('Q'), "{err}");
    assert!(!out_path.exists(), "no partial output on failure");

    let good = write_input(&dir, "g.json", SINGLE_EDGE);
    let out = eigenkit(&["rodeo", "--input", s(&good), "--output", s(&out_path), "--energy", "0", "--sigma", "-1"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: rodeo"), "{}", String::from_utf8_lossy(&out.stderr));

    let sup = write_input(&dir, "sup.json", r#"{"unitary":{"phases":[0.25,0.5]},"initial":"uniform"}"#);
    let out = eigenkit(&["ipe", "--input", s(&sup), "--output", s(&out_path), "--ancilla", "3"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("not an eigenstate"));
}

#[test]
fn aliasing_time_step_is_warned_about() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_input(
        &dir,
        "big.json",
        r#"{"n_qubits":1,"terms":[{"coeff":4.0,"pauli":"Z"}],"initial":{"basis":0},"unitary":{"dt":2.0}}"#,
    );
    let out = eigenkit(&["qpe", "--input", s(&input), "--output", s(&dir.path().join("q.csv")), "--ancilla", "3"]);
    assert_ok(&out);
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));

    let small = write_input(
        &dir,
        "small.json",
        r#"{"n_qubits":1,"terms":[{"coeff":1.0,"pauli":"Z"}],"initial":{"basis":0},"unitary":{"dt":1.0}}"#,
    );
    let out = eigenkit(&["qpe", "--input", s(&small), "--output", s(&dir.path().join("q.csv")), "--ancilla", "3"]);
    assert_ok(&out);
    assert!(out.stderr.is_empty());
}
