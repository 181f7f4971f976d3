//! End-to-end checks of the command-line interface: subcommands, exit codes,
//! stream separation, and byte-identical reruns.

use std::fs;

use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_otoc-sim"))
}

fn run_cli(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const TINY_CONFIG: &str = r#"{
  "topology": { "branches": 1, "h_per_branch": 2, "f_per_h": 3 },
  "j_hz": 8.7,
  "g_list": [0.0, 0.3],
  "n_list": [1],
  "t_grid": { "max_jt": 2.0, "n_points": 32 },
  "mode": "unitary_only",
  "output": { "dir": "out" }
}"#;

#[test]
fn gradient_ratio_prints_single_line() {
    let out = run_cli(&["gradient-ratio", "--q", "1"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "-1");

    let out = run_cli(&["gradient-ratio", "--q", "-1", "--gamma-p", "1", "--gamma-h", "2.4681"]);
    assert!(out.status.success());
    let v: f64 = stdout(&out).trim().parse().unwrap();
    assert!((v - 3.9362).abs() < 1e-12);
}

#[test]
fn validate_reports_feasibility_without_failing() {
    let dir = tempfile::tempdir().unwrap();
    let ok_path = dir.path().join("ok.json");
    fs::write(&ok_path, TINY_CONFIG).unwrap();
    let out = run_cli(&["validate", ok_path.to_str().unwrap()]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("N = 6 qubits"));
    assert!(text.contains("feasible:    yes"));

    // 3 branches = 16 qubits: report-only, still exit 0
    let big = TINY_CONFIG.replace("\"branches\": 1", "\"branches\": 3");
    let big_path = dir.path().join("big.json");
    fs::write(&big_path, big).unwrap();
    let out = run_cli(&["validate", big_path.to_str().unwrap()]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("N = 16 qubits"));
    assert!(text.contains("feasible:    NO"));
}

#[test]
fn run_is_byte_identical_across_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.json");
    fs::write(&config_path, TINY_CONFIG).unwrap();

    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out_dir in [&out_a, &out_b] {
        let out = run_cli(&[
            "run",
            config_path.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "stderr: {}", stderr(&out));
        // data summary on stdout, progress on stderr
        assert!(stdout(&out).contains("config_hash="));
        assert!(!stdout(&out).contains("[otoc-sim]"));
        assert!(stderr(&out).contains("[otoc-sim]"));
    }

    let mut names: Vec<String> = fs::read_dir(&out_a)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names.len(), 5, "2 series + 2 spectra + manifest: {names:?}");
    for name in &names {
        let a = fs::read(out_a.join(name)).unwrap();
        let b = fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "file {name} differs between reruns");
    }
}

#[test]
fn csv_rows_are_self_describing() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.json");
    fs::write(&config_path, TINY_CONFIG).unwrap();
    let out_dir = dir.path().join("out");
    let out = run_cli(&["run", config_path.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success());

    let hash_line = stdout(&out)
        .lines()
        .find(|l| l.starts_with("config_hash="))
        .unwrap()
        .to_string();
    let hash = hash_line.trim_start_matches("config_hash=").to_string();

    let series = fs::read_to_string(out_dir.join("series_g0_n1_unitary_only.csv")).unwrap();
    let mut lines = series.lines();
    assert_eq!(lines.next().unwrap(), format!("# config_hash={hash}"));
    assert_eq!(lines.next().unwrap(), "Jt,value");
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "0");
    assert!((first[1].parse::<f64>().unwrap() - 1.0).abs() < 1e-10);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config_hash"].as_str().unwrap(), hash);
    assert_eq!(manifest["cells"].as_array().unwrap().len(), 2);
    assert_eq!(manifest["config"]["j_hz"].as_f64().unwrap(), 8.7);
}

#[test]
fn schema_errors_name_the_offending_field() {
    let dir = tempfile::tempdir().unwrap();
    let bad_path = dir.path().join("bad.json");
    fs::write(&bad_path, TINY_CONFIG.replace("\"j_hz\"", "\"j_hzz\"")).unwrap();
    let out = run_cli(&["run", bad_path.to_str().unwrap()]);
    assert!(!out.status.success());
    let err = stderr(&out);
    let error_lines: Vec<&str> = err.lines().filter(|l| l.starts_with("error:")).collect();
    assert_eq!(error_lines.len(), 1, "single-line error expected: {err}");
    assert!(error_lines[0].contains("j_hzz"));
}

#[test]
fn infeasible_run_exits_with_ceiling_error() {
    let dir = tempfile::tempdir().unwrap();
    let big_path = dir.path().join("big.json");
    fs::write(&big_path, TINY_CONFIG.replace("\"branches\": 1", "\"branches\": 3")).unwrap();
    let out = run_cli(&["run", big_path.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("ceiling"));
}

#[test]
fn unknown_preset_lists_the_available_names() {
    let out = run_cli(&["preset", "nope", "--out", "/tmp/unused"]);
    assert!(!out.status.success());
    let err = stderr(&out);
    assert!(err.contains("fig3") && err.contains("fig7-ambiguity"));
}

#[test]
fn worker_env_var_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.json");
    fs::write(&config_path, TINY_CONFIG).unwrap();
    let out_dir = dir.path().join("out");
    let out = bin()
        .env("OTOC_SIM_WORKERS", "1")
        .args(["run", config_path.to_str().unwrap(), "--out", out_dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(stderr(&out).contains("on 1 workers"));

    // single-worker output matches the default-pool output byte for byte
    let out_dir2 = dir.path().join("out2");
    let out2 = run_cli(&[
        "run",
        config_path.to_str().unwrap(),
        "--out",
        out_dir2.to_str().unwrap(),
    ]);
    assert!(out2.status.success());
    let a = fs::read(out_dir.join("series_g0.3_n1_unitary_only.csv")).unwrap();
    let b = fs::read(out_dir2.join("series_g0.3_n1_unitary_only.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn run_rejects_missing_config_file() {
    let out = run_cli(&["run", "/nonexistent/config.json"]);
    assert!(!out.status.success());
    assert!(stderr(&out).starts_with("error:"));
}
