//! End-to-end checks of the `iongate` binary: exit codes, error wording,
//! output layout and re-run determinism.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_iongate"))
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("iongate-cli-test-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

const FAST_GATE: &str = r#"
[gate]
scheme = "ddms"
rabi_hz = 308.0
detuning_hz = 871.2
carrier_rabi_hz = 3690.0
loops = 2
refocus_pulse = true
fock_dim = 14

[simulate]
sample_stride = 32
"#;

#[test]
fn simulate_writes_outputs_and_manifest() {
    let dir = tmp_dir("simulate");
    let cfg = write(&dir, "gate.toml", FAST_GATE);
    let out = dir.join("out");
    let status = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out-dir")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    for name in ["time_series.csv", "final_state.json", "run_manifest.json"] {
        assert!(out.join(name).exists(), "missing {name}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("run_manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["command"], "simulate");
    assert!(manifest["config_digest"].as_str().unwrap().starts_with("sha256:"));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("final_state.json")).unwrap())
            .unwrap();
    assert!(summary["fidelity"].as_f64().unwrap() >= 0.9999);
}

#[test]
fn figure_table2_reproduces_budget_totals() {
    let dir = tmp_dir("table2");
    let out = dir.join("out");
    let status = bin()
        .args(["figure", "table2", "--config"])
        .arg(configs_dir().join("table2.toml"))
        .arg("--out-dir")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let totals: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("table2_summary.json")).unwrap())
            .unwrap();
    let rsb = totals["rsb_total_hz"].as_f64().unwrap() / 1e3;
    let bsb = totals["bsb_total_hz"].as_f64().unwrap() / 1e3;
    let diff = totals["differential_hz"].as_f64().unwrap() / 1e3;
    assert!((rsb - (-47.0)).abs() <= 1.5, "rsb {rsb:.2} kHz");
    assert!((bsb - 68.0).abs() <= 1.5, "bsb {bsb:.2} kHz");
    assert!((diff - 21.0).abs() <= 1.5, "differential {diff:.2} kHz");
}

#[test]
fn odd_loops_with_refocus_fails_naming_the_rule() {
    let dir = tmp_dir("oddloops");
    let cfg = write(
        &dir,
        "bad.toml",
        r#"
[gate]
scheme = "ddms"
rabi_hz = 308.0
detuning_hz = 1230.8
carrier_rabi_hz = 3690.0
loops = 3
refocus_pulse = true
"#,
    );
    let output = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out-dir")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(
        stderr.contains("even number of phase-space loops"),
        "stderr did not name the rule: {stderr}"
    );
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tmp_dir("badkey");
    let cfg = write(
        &dir,
        "typo.toml",
        r#"
[gate]
scheme = "ddms"
rabi_hz = 308.0
detuning_hz = 1230.8
carrier_rabi_hz = 3690.0
loops = 4
refocus_pulse = true
rabii_hz = 3.0
"#,
    );
    let output = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out-dir")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("rabii_hz"), "stderr should name the bad key: {stderr}");
}

#[test]
fn zero_drive_keeps_populations_constant() {
    let dir = tmp_dir("zerodrive");
    let cfg = write(
        &dir,
        "idle.toml",
        r#"
[gate]
scheme = "ms"
rabi_hz = 0.0
detuning_hz = 1000.0
loops = 1
fock_dim = 4

[simulate]
sample_stride = 10
"#,
    );
    let out = dir.join("out");
    let status = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out-dir")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(out.join("time_series.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let fields: Vec<f64> =
            line.split(',').map(|f| f.parse().unwrap()).collect();
        assert!((fields[4] - 1.0).abs() < 1e-12, "p_dd drifted: {line}");
    }
}

#[test]
fn unknown_figure_lists_supported_names() {
    let dir = tmp_dir("figname");
    let cfg = write(&dir, "gate.toml", FAST_GATE);
    let output = bin()
        .args(["figure", "fig9x", "--config"])
        .arg(&cfg)
        .arg("--out-dir")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    for name in ["fig2a", "fig2b", "fig3a", "fig3b", "fig5a", "fig5b", "table2"] {
        assert!(stderr.contains(name), "missing {name} in: {stderr}");
    }
}

#[test]
fn fig2a_mid_populations_vanish_at_gate_detuning() {
    let dir = tmp_dir("fig2a");
    let cfg = write(
        &dir,
        "fig2a.toml",
        r#"
[gate]
scheme = "ddms"
rabi_hz = 308.0
detuning_hz = 1232.0
carrier_rabi_hz = 3690.0
loops = 4
refocus_pulse = true
fock_dim = 16

[fig2a]
detuning_start_hz = 1132.0
detuning_stop_hz = 1332.0
points = 3
"#,
    );
    let out = dir.join("out");
    let status = bin()
        .args(["figure", "fig2a", "--config"])
        .arg(&cfg)
        .arg("--out-dir")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(out.join("fig2a.csv")).unwrap();
    // middle row is the gate detuning: P1 < 0.005, P2 + P0 > 0.995
    let row: Vec<f64> = csv.lines().nth(2).unwrap().split(',').map(|f| f.parse().unwrap()).collect();
    assert!((row[0] - 1232.0).abs() < 1e-9);
    assert!(row[2] < 0.005, "P1 = {}", row[2]);
    assert!(row[1] + row[3] > 0.995, "P2+P0 = {}", row[1] + row[3]);
}

#[test]
fn zeeman_empty_table_fails() {
    let dir = tmp_dir("zeeman-empty");
    let table = write(&dir, "empty.csv", "# nothing here\n");
    let output = bin()
        .args(["zeeman", "--table"])
        .arg(&table)
        .arg("--config")
        .arg(configs_dir().join("drive.toml"))
        .arg("--out-dir")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("no transitions"));
}

#[test]
fn zeeman_zero_rabi_row_gives_zero_totals() {
    let dir = tmp_dir("zeeman-zero");
    let table = write(
        &dir,
        "zero.csv",
        "label,frequency_hz,rabi_rsb_hz,rabi_bsb_hz,sign\nsilent,3.25e9,0.0,0.0,+1\n",
    );
    let out = dir.join("out");
    let status = bin()
        .args(["zeeman", "--table"])
        .arg(&table)
        .arg("--config")
        .arg(configs_dir().join("drive.toml"))
        .arg("--out-dir")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let totals: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("zeeman_totals.json")).unwrap())
            .unwrap();
    assert_eq!(totals["rsb_total_hz"].as_f64().unwrap(), 0.0);
    assert_eq!(totals["bsb_total_hz"].as_f64().unwrap(), 0.0);
}

#[test]
fn zeeman_malformed_row_reports_line_number() {
    let dir = tmp_dir("zeeman-bad");
    let table = write(
        &dir,
        "bad.csv",
        "label,frequency_hz,rabi_rsb_hz,rabi_bsb_hz,sign\nok,3.2e9,1e3,1e3,+1\nbroken,3.2e9,oops,1e3,+1\n",
    );
    let output = bin()
        .args(["zeeman", "--table"])
        .arg(&table)
        .arg("--config")
        .arg(configs_dir().join("drive.toml"))
        .arg("--out-dir")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("line 3"));
}

#[test]
fn remaining_figures_produce_their_datasets() {
    let dir = tmp_dir("figures");
    let out = dir.join("out");

    // fig2b: noiseless parity scan of a fast two-loop gate
    let fig2b = write(
        &dir,
        "fig2b.toml",
        r#"
[gate]
scheme = "ddms"
rabi_hz = 308.0
detuning_hz = 871.2
carrier_rabi_hz = 3690.0
loops = 2
refocus_pulse = true
fock_dim = 14

[fig2b]
phase_points = 12
"#,
    );
    let status = bin()
        .args(["figure", "fig2b", "--config"])
        .arg(&fig2b)
        .arg("--out-dir")
        .arg(out.join("fig2b"))
        .status()
        .unwrap();
    assert!(status.success());
    let summary: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out.join("fig2b/fig2b_summary.json")).unwrap(),
    )
    .unwrap();
    assert!(summary["parity_amplitude"].as_f64().unwrap() > 0.999);
    assert!(summary["composed_fidelity"].as_f64().unwrap() > 0.999);

    // fig3a: short Ramsey comparison
    let fig3a = write(
        &dir,
        "fig3a.toml",
        r#"
[fig3a]
exposure_time_s = 1.0e-3
dd_enabled = true
carrier_rabi_hz = 3000.0
delta_prime_rms_hz = 40.0
shots = 40
seed = 9
"#,
    );
    let status = bin()
        .args(["figure", "fig3a", "--config"])
        .arg(&fig3a)
        .arg("--out-dir")
        .arg(out.join("fig3a"))
        .status()
        .unwrap();
    assert!(status.success());
    let summary: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out.join("fig3a/fig3a_summary.json")).unwrap(),
    )
    .unwrap();
    let dd = summary["contrast_dd"].as_f64().unwrap();
    let bare = summary["contrast_no_dd"].as_f64().unwrap();
    assert!(dd > bare, "decoupling should preserve contrast: {dd} vs {bare}");

    // fig5a: time scan of both schemes on a shared grid
    let fig5a = write(
        &dir,
        "fig5a.toml",
        r#"
[gate]
scheme = "ddms"
rabi_hz = 308.0
detuning_hz = 871.2
carrier_rabi_hz = 3690.0
loops = 2
refocus_pulse = true
fock_dim = 14

[fig5a]
sample_stride = 64
"#,
    );
    let status = bin()
        .args(["figure", "fig5a", "--config"])
        .arg(&fig5a)
        .arg("--out-dir")
        .arg(out.join("fig5a"))
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(out.join("fig5a/fig5a.csv")).unwrap();
    assert!(csv.lines().count() > 10);
    assert!(csv.starts_with("time_s,ddms_p2,ddms_p1,ddms_p0,ssb_p2,ssb_p1,ssb_p0"));

    // fig3b + fig5b: minimal grids through the full command path
    let fig3b = write(
        &dir,
        "fig3b.toml",
        r#"
[gate]
scheme = "ms"
rabi_hz = 308.0
detuning_hz = 871.2
loops = 2
fock_dim = 14

[fig3b]
sigma_hz = [0.0, 30.0]
shots = 6
seed = 4
"#,
    );
    let status = bin()
        .args(["figure", "fig3b", "--config"])
        .arg(&fig3b)
        .arg("--out-dir")
        .arg(out.join("fig3b"))
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(out.join("fig3b/fig3b.csv")).unwrap();
    let last: Vec<f64> = csv.lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(last[0], 30.0);
    assert!(last[1] < 1.0 && last[2] > 0.0);

    let fig5b = write(
        &dir,
        "fig5b.toml",
        r#"
[gate]
scheme = "ddms"
rabi_hz = 308.0
detuning_hz = 871.2
carrier_rabi_hz = 3690.0
loops = 2
refocus_pulse = true
fock_dim = 14

[fig5b]
carrier_start_hz = 0.0
carrier_stop_hz = 3690.0
points = 3
delta_prime_hz = 20.0
"#,
    );
    let status = bin()
        .args(["figure", "fig5b", "--config"])
        .arg(&fig5b)
        .arg("--out-dir")
        .arg(out.join("fig5b"))
        .status()
        .unwrap();
    assert!(status.success());
    let summary: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out.join("fig5b/fig5b_summary.json")).unwrap(),
    )
    .unwrap();
    assert!(summary["ms_baseline_error"].as_f64().unwrap() > 0.01);
}

#[test]
fn sweep_rerun_is_byte_identical() {
    let dir = tmp_dir("sweep-det");
    let cfg = write(
        &dir,
        "sweep.toml",
        r#"
[gate]
scheme = "ddms"
rabi_hz = 308.0
detuning_hz = 871.2
carrier_rabi_hz = 3690.0
loops = 2
refocus_pulse = true
fock_dim = 14

[sweep]
axis = "delta_prime_rms_hz"
values = [10.0, 25.0]
shots = 4
seed = 3
"#,
    );
    let (out_a, out_b) = (dir.join("a"), dir.join("b"));
    for out in [&out_a, &out_b] {
        let status = bin()
            .args(["sweep", "--config"])
            .arg(&cfg)
            .arg("--out-dir")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = std::fs::read(out_a.join("sweep.csv")).unwrap();
    let b = std::fs::read(out_b.join("sweep.csv")).unwrap();
    assert_eq!(a, b);
}
