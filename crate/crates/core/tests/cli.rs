//! End-to-end checks of the command-line interface: exit codes, fixed file
//! schemas and bitwise determinism of repeated runs.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_memsim"))
}

#[test]
fn print_defaults_emits_valid_toml() {
    let out = bin()
        .args(["simulate", "--print-defaults"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("[domain]"));
    assert!(text.contains("[parameters]"));
    assert!(text.contains("[time]"));
    assert!(text.contains("[admissibility]"));
    // the printed defaults must parse back
    let doc: toml::Value = toml::from_str(&text).unwrap();
    assert_eq!(doc["domain"]["n"].as_integer(), Some(24));
}

#[test]
fn unknown_subcommand_is_usage_error() {
    let out = bin().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sigma_out_of_range_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[parameters]\nsigma = 1.5\n").unwrap();
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("sigma"), "diagnostic should name sigma: {err}");
}

#[test]
fn simulate_writes_schema_files_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "[domain]\nn = 8\nm = 8\n[time]\ndt = 2e-4\nt_end = 0.01\nsample_stride = 10\nsteady_exit = false\n",
    )
    .unwrap();

    let run = |sub: &str| {
        let out_dir = tempfile::tempdir().unwrap();
        let out = bin()
            .args([sub, "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(out_dir.path())
            .arg("--seed")
            .arg("3")
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let trace = std::fs::read_to_string(out_dir.path().join("trace.csv")).unwrap();
        let summary = std::fs::read_to_string(out_dir.path().join("summary.json")).unwrap();
        (trace, summary)
    };

    let (trace_a, summary_a) = run("simulate");
    let (trace_b, summary_b) = run("simulate");
    assert_eq!(trace_a, trace_b, "trace.csv must be bitwise deterministic");
    assert_eq!(summary_a, summary_b);

    let mut lines = trace_a.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,min_u,max_u,norm_proxy,E_m,E_e,E,dissipation,drift"
    );
    let doc: serde_json::Value = serde_json::from_str(&summary_a).unwrap();
    assert_eq!(doc["status"]["kind"], "reached_horizon");
    assert_eq!(doc["resolution"]["n"], 8);
}

#[test]
fn verify_quick_passes_and_dumps_fields() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[output]\nwrite_fields = true\n").unwrap();
    let out_dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["verify", "--quick", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(out_dir.path())
        .arg("--seed")
        .arg("1")
        .output()
        .unwrap();
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(
        out.status.success(),
        "verify --quick failed:\n{stdout}\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(stdout.lines().all(|l| l.starts_with("PASS")), "{stdout}");
    // verification dumps: phi as i,j,k,value and g as i,j,value
    let phi = std::fs::read_to_string(out_dir.path().join("phi.csv")).unwrap();
    assert!(phi.starts_with("i,j,k,value"));
    let g = std::fs::read_to_string(out_dir.path().join("g.csv")).unwrap();
    assert!(g.starts_with("i,j,value"));
}

#[test]
fn spectrum_emits_eigenvalue_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[domain]\nn = 5\nm = 5\n").unwrap();
    let out = bin()
        .args(["spectrum", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "k,l,mu");
    // 5x5 modes follow
    assert_eq!(lines.count(), 25);
    // first entry is mu_11 = 4 pi^4 for beta = 1, tau = 0
    let first = text.lines().nth(1).unwrap();
    let mu: f64 = first.split(',').nth(2).unwrap().parse().unwrap();
    assert!((mu - 4.0 * std::f64::consts::PI.powi(4)).abs() < 1e-9);
}
