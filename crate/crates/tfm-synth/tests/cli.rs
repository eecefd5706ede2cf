use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;
use tfm_core::resonator::{mzi_effective_mu, MziCoupler};
use tfm_synth::commands::{cmd_sweep_mzi, default_mu_range};

fn tfm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tfm-synth")).args(args).output().expect("binary runs")
}

fn bell_text() -> String {
    std::fs::read_to_string(tfm_synth::preset_path("bell_phi_minus").unwrap()).unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn missing_kappa_is_a_config_error_naming_the_key() {
    let dir = TempDir::new().unwrap();
    let mut seen = false;
    let text: String = bell_text()
        .lines()
        .filter(|l| {
            // drop only the kappa line of the signal chain
            let drop = !seen && l.starts_with("kappa");
            seen |= drop;
            !drop
        })
        .map(|l| format!("{l}\n"))
        .collect();
    let cfg = write_config(dir.path(), "no_kappa.toml", &text);
    let out = tfm(&["simulate", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("kappa"), "{}", stderr(&out));
}

#[test]
fn unitless_quantity_is_rejected() {
    let dir = TempDir::new().unwrap();
    let text = bell_text().replacen("kappa = \"0.0985 sqrtTHz\"", "kappa = 0.0985", 1);
    let cfg = write_config(dir.path(), "bare.toml", &text);
    let out = tfm(&["pgr", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("kappa"));
}

#[test]
fn unknown_preset_is_a_config_error() {
    let out = tfm(&["pgr", "--preset", "bell_phi_plus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("bell_phi_minus"));
}

#[test]
fn empty_mu_grid_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let text = format!("{}\n[search]\nmu = [{{ min = \"2 GHz\", max = \"1 GHz\", step = \"0.25 GHz\" }}]\n", bell_text());
    let cfg = write_config(dir.path(), "empty_mu.toml", &text);
    let out = tfm(&["optimize", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("empty"));
}

#[test]
fn optimize_trace_repeats_under_a_fixed_seed() {
    let dir = TempDir::new().unwrap();
    let text = format!("{}\n[search]\nmu = [{{ min = \"1 GHz\", max = \"2 GHz\", step = \"0.5 GHz\" }}]\n", bell_text());
    let cfg = write_config(dir.path(), "short.toml", &text);
    let run = |sub: &str| {
        let out_dir = dir.path().join(sub);
        let out = tfm(&[
            "optimize",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--restarts",
            "1",
            "--seed",
            "0",
            "--grid",
            "128",
        ]);
        let summary = stdout_json(&out);
        assert_eq!(summary["trials"], 3);
        for f in ["best_params.toml", "report.json", "summary.json"] {
            assert!(out_dir.join(f).is_file(), "{f} missing");
        }
        std::fs::read(out_dir.join("trace.jsonl")).unwrap()
    };
    let (a, b) = (run("a"), run("b"));
    assert_eq!(a, b);
    let lines: Vec<Value> = String::from_utf8(a).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0]["mu"]["mu_12"].as_f64().unwrap() > 0.0);
}

#[test]
fn pair_rate_scales_with_power_squared() {
    let base = stdout_json(&tfm(&["pgr", "--preset", "bell_phi_minus"]));
    let four = stdout_json(&tfm(&["pgr", "--preset", "bell_phi_minus", "--avg-power", "4mW"]));
    let ratio = four["pairs_per_pulse"].as_f64().unwrap() / base["pairs_per_pulse"].as_f64().unwrap();
    assert!((ratio - 16.0).abs() < 1e-6, "ratio {ratio}");
    let bad = tfm(&["pgr", "--preset", "bell_phi_minus", "--avg-power", "4"]);
    assert_eq!(bad.status.code(), Some(2));
}

fn sweep(splitter: &str) -> Vec<Vec<f64>> {
    let out = tfm(&["sweep-mzi", "--preset", "bell_phi_minus", "--splitter", splitter, "--mu-max", "3 GHz"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("mu_12_ghz,phi_h1_rad,phi_h2_rad,phi_h3_rad,finesse_deg_per_ghz"));
    lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect()
}

#[test]
fn mzi_sweep_rows_and_finesse() {
    let weak = sweep("0.05");
    let strong = sweep("0.10");
    assert_eq!(weak[0][0], 0.0);
    assert_eq!(weak.len(), 13);
    // at a common mu, the weaker splitter needs finer phase control
    assert!(weak[4][4] > strong[4][4], "{} vs {}", weak[4][4], strong[4][4]);
}

#[test]
fn mzi_settings_reproduce_the_requested_coupling() {
    let cfg = tfm_synth::config::load(&tfm_synth::preset_path("bell_phi_minus").unwrap()).unwrap();
    let geometry = cfg.mzi.unwrap().geometry;
    let sweep = cmd_sweep_mzi(&cfg, None, default_mu_range()).unwrap();
    assert!(sweep.rows.len() > 4);
    for (mu, setting) in &sweep.rows {
        let coupler = MziCoupler { splitter: 0.05, phases: setting.phases, geometry };
        let back = mzi_effective_mu(&coupler).unwrap();
        assert!((back.rad_per_s() - mu.rad_per_s()).abs() <= 1e-6 * mu.rad_per_s().max(1.0), "{mu} -> {back}");
    }
}

#[test]
fn simulate_writes_result_files() {
    let dir = TempDir::new().unwrap();
    let out_dir = dir.path().join("sim");
    let out = tfm(&["simulate", "--preset", "bell_phi_minus", "--grid", "128", "--jsa-csv", "--out", out_dir.to_str().unwrap()]);
    let report = stdout_json(&out);
    assert!(report["lambda"].as_array().unwrap().len() > 1);
    for f in ["jsa.bin", "jsa.json", "jsa.csv", "spectra_pump.csv", "spectra_signal.csv", "spectra_idler.csv", "report.json"] {
        assert!(out_dir.join(f).is_file(), "{f} missing");
    }
    assert_eq!(std::fs::metadata(out_dir.join("jsa.bin")).unwrap().len(), 128 * 128 * 16);
    let on_disk: Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(on_disk, report);
}
