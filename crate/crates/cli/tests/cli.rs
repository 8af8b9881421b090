//! End-to-end checks of the binary: formats, exit codes, determinism.

use std::path::Path;
use std::process::{Command, Output};

fn schwinger(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_schwinger"))
        .args(args)
        .output()
        .expect("binary should run")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("utf8 stdout")
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

#[test]
fn basis_dumps_match_enumeration() {
    let out = schwinger(&["basis", "--set", "n_cut=1", "--set", "max_particles=0"]);
    assert_eq!(exit_code(&out), 0);
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2, "{text}");
    assert!(lines[0].starts_with("# basis"));
    assert_eq!(lines[1], "F:;A:");

    let out = schwinger(&["basis", "--set", "n_cut=1", "--set", "max_particles=2"]);
    assert_eq!(exit_code(&out), 0);
    let state_lines = stdout(&out).lines().count() - 1;
    assert_eq!(state_lines, 10);
}

#[test]
fn invalid_configuration_exits_2() {
    let out = schwinger(&["basis", "--set", "n_cut=-1"]);
    assert_eq!(exit_code(&out), 2);
    assert!(!out.stderr.is_empty());

    let out = schwinger(&["basis", "--set", "frobnicate=1"]);
    assert_eq!(exit_code(&out), 2);

    let out = schwinger(&["op", "--set", "which=nonsense"]);
    assert_eq!(exit_code(&out), 2);

    let out = schwinger(&["anomaly", "--set", "which=nonsense"]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn config_file_loads_and_overrides_apply_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.conf");
    std::fs::write(&path, "# comment\nn_cut = 1\nmax_particles = 2\ncharge = 0\n").unwrap();
    let config = path.to_str().unwrap();

    let out = schwinger(&["basis", "--config", config]);
    assert_eq!(exit_code(&out), 0);
    assert_eq!(stdout(&out).lines().count(), 11);

    let out = schwinger(&["basis", "--config", config, "--set", "max_particles=0"]);
    assert_eq!(stdout(&out).lines().count(), 2);
}

#[test]
fn operator_dump_is_row_col_re_im() {
    let out = schwinger(&[
        "op",
        "--set",
        "which=q",
        "--set",
        "n_cut=1",
        "--set",
        "max_particles=1",
        "--set",
        "charge=any",
    ]);
    assert_eq!(exit_code(&out), 0);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# op which=q"));
    assert!(lines.next().unwrap().starts_with("# provenance:"));
    assert_eq!(lines.next().unwrap(), "row col re im");
    for line in lines {
        let fields: Vec<&str> = line.split(' ').collect();
        assert_eq!(fields.len(), 4, "{line}");
        fields[0].parse::<usize>().unwrap();
        fields[1].parse::<usize>().unwrap();
        fields[2].parse::<f64>().unwrap();
        fields[3].parse::<f64>().unwrap();
    }
}

#[test]
fn anomaly_table_converges_to_the_counterterm() {
    let out = schwinger(&["anomaly", "--set", "a=0.3", "--set", "which=ca"]);
    assert_eq!(exit_code(&out), 0);
    let text = stdout(&out);
    let value_line = text.lines().nth(1).unwrap();
    let abs_err: f64 = value_line
        .split("abs_err=")
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!(abs_err < 1e-6, "{value_line}");
    assert!(text.lines().count() > 4, "expected a convergence table:\n{text}");
}

#[test]
fn gauge_check_passes_and_charge_like_coupling_fails() {
    let small = ["--set", "n_cut=2", "--set", "max_particles=2", "--set", "a=0.25"];
    let out = schwinger(&[&["gauge-check"], &small[..]].concat());
    assert_eq!(exit_code(&out), 0);
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["passed"], serde_json::Value::Bool(true));

    let out = schwinger(
        &[&["gauge-check"], &small[..], &["--set", "coupling_mode=charge-like"]].concat(),
    );
    assert_eq!(exit_code(&out), 1);
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["flow"]["matched"], serde_json::Value::Bool(false));
    assert!(report["flow"]["witness"].is_array());
}

#[test]
fn verify_reports_every_section_and_gates_the_exit_code() {
    let small = ["--set", "n_cut=2", "--set", "max_particles=2", "--set", "a=0.25"];
    let out = schwinger(&[&["verify"], &small[..]].concat());
    assert_eq!(exit_code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let sections = report["sections"].as_array().unwrap();
    let names: Vec<&str> =
        sections.iter().map(|s| s["name"].as_str().unwrap()).collect();
    assert_eq!(
        names,
        [
            "anticommutators",
            "unexcited-expectations",
            "anomaly-ca",
            "anomaly-ca-prime",
            "chirality-shift",
            "gauge-invariance",
            "spectral-flow"
        ]
    );
    assert!(sections.iter().all(|s| s["passed"] == serde_json::Value::Bool(true)));

    // The coupling written without the regularized axial charge fails the
    // flow section and only that section.
    let out = schwinger(
        &[&["verify"], &small[..], &["--set", "coupling_mode=literal-ham"]].concat(),
    );
    assert_eq!(exit_code(&out), 1);
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    for section in report["sections"].as_array().unwrap() {
        let expected = section["name"] != serde_json::Value::from("spectral-flow");
        assert_eq!(section["passed"], serde_json::Value::Bool(expected), "{section}");
    }
}

#[test]
fn spectrum_frozen_mode_and_refinement_pair() {
    let base = [
        "--set",
        "n_cut=2",
        "--set",
        "max_particles=2",
        "--set",
        "coupling_e=0",
        "--set",
        "m_grid=1",
        "--set",
        "k_eigs=3",
    ];
    let out = schwinger(&[&["spectrum"], &base[..]].concat());
    assert_eq!(exit_code(&out), 0);
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 5, "{text}");
    let first = text.lines().nth(2).unwrap();
    let e0: f64 = first.split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(e0, 0.0, "free vacuum energy at a=0 should vanish: {first}");

    let ground = |m_grid: &str| -> f64 {
        let out = schwinger(&[
            "spectrum",
            "--set",
            "n_cut=2",
            "--set",
            "max_particles=2",
            "--set",
            &format!("m_grid={m_grid}"),
            "--set",
            "k_eigs=1",
        ]);
        assert_eq!(exit_code(&out), 0);
        stdout(&out).lines().nth(2).unwrap().split(',').nth(1).unwrap().parse().unwrap()
    };
    // Twisted-closure energies refine upward.
    assert!(ground("8") < ground("16"));
}

#[test]
fn spectrum_rejects_oversized_eigenvalue_requests() {
    let out = schwinger(&[
        "spectrum",
        "--set",
        "n_cut=1",
        "--set",
        "max_particles=1",
        "--set",
        "m_grid=1",
        "--set",
        "k_eigs=1000",
    ]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn identical_configs_produce_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str, threads: Option<&str>| -> Vec<u8> {
        let path = dir.path().join(tag);
        let out_arg = format!("out={}", path.display());
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_schwinger"));
        cmd.args([
            "verify",
            "--set",
            "n_cut=2",
            "--set",
            "max_particles=3",
            "--set",
            "a=0.25",
            "--set",
            &out_arg,
        ]);
        if let Some(n) = threads {
            cmd.env("SCHWINGER_THREADS", n);
        }
        let out = cmd.output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(out.stdout.is_empty());
        std::fs::read(&path).unwrap()
    };
    let first = run("a.json", None);
    let second = run("b.json", None);
    let single_thread = run("c.json", Some("1"));
    assert_eq!(first, second);
    assert_eq!(first, single_thread);
    assert!(!first.is_empty());

    let spectrum = |tag: &str| -> Vec<u8> {
        let path = dir.path().join(tag);
        let out_arg = format!("out={}", path.display());
        let out = schwinger(&[
            "spectrum",
            "--set",
            "n_cut=2",
            "--set",
            "max_particles=2",
            "--set",
            "m_grid=8",
            "--set",
            &out_arg,
        ]);
        assert_eq!(exit_code(&out), 0);
        std::fs::read(&path).unwrap()
    };
    assert_eq!(spectrum("s1.csv"), spectrum("s2.csv"));
    assert!(!Path::new(&dir.path().join("s1.csv")).as_os_str().is_empty());
}
