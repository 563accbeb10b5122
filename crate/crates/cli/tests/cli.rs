use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn pslab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pslab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok_json(args: &[&str]) -> Value {
    let out = pslab(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn design_filter_writes_symmetric_taps() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("taps.csv");
    let st = pslab(&[
        "design-filter", "--kind", "rrc", "--alpha", "0.35", "--sps", "16", "--span", "16", "--out", p(&out),
    ]);
    assert!(st.status.success());
    let text = fs::read_to_string(&out).unwrap();
    let taps: Vec<f64> = text.lines().map(|l| l.trim().parse().unwrap()).collect();
    assert_eq!(taps.len(), 257);
    for k in 0..taps.len() {
        assert_eq!(taps[k], taps[256 - k]);
    }
}

#[test]
fn design_filter_rejects_bad_alpha() {
    let out = pslab(&["design-filter", "--kind", "rc", "--alpha", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn design_filter_vsg8_prints_tabulated_taps() {
    let out = pslab(&["design-filter", "--vsg8", "--kind", "rc"]);
    assert!(out.status.success());
    let taps: Vec<f64> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| l.trim().parse().unwrap())
        .collect();
    assert_eq!(
        taps,
        [0.015609, 0.174413, 0.588622, 1.0, 1.0, 0.588622, 0.174413, 0.015609]
    );
}

#[test]
fn modulate_length_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let iq = dir.path().join("tx.iq");
    let v = ok_json(&["modulate", "--out", p(&iq)]);
    // default long filter: sps 16, span 32, M = 513
    assert_eq!(v["n_samples"], 256 * 16 + 512);
    let meta: Value = serde_json::from_str(&fs::read_to_string(iq.with_extension("json")).unwrap()).unwrap();
    assert_eq!(meta["sample_rate_hz"].as_f64().unwrap(), 25_000.0 * 16.0);
    assert_eq!(meta["n_samples"], 256 * 16 + 512);
    assert_eq!(fs::metadata(&iq).unwrap().len(), 8 * (256 * 16 + 512));
}

#[test]
fn loopback_is_error_free() {
    let dir = tempfile::tempdir().unwrap();
    let iq = dir.path().join("tx.iq");
    let bits = dir.path().join("bits.txt");
    for format in ["qpsk", "oqpsk"] {
        ok_json(&["modulate", "--format", format, "--out", p(&iq), "--bits-out", p(&bits)]);
        let v = ok_json(&[
            "analyze", "--format", format, "--input", p(&iq), "--bits", p(&bits), "--measurement-filter", "rrc",
        ]);
        assert_eq!(v["ber"].as_f64().unwrap(), 0.0, "{format}: {v}");
        assert!(v["evm_pct_rms"].as_f64().unwrap() < 1.0, "{format}: {v}");
        let obw = v["obw_hz"].as_f64().unwrap();
        assert!(obw > 25_000.0 && obw < 1.35 * 25_000.0, "{format}: {v}");
    }
}

#[test]
fn vsg8_loopback_is_error_free() {
    let dir = tempfile::tempdir().unwrap();
    let iq = dir.path().join("tx.iq");
    let bits = dir.path().join("bits.txt");
    ok_json(&["modulate", "--vsg8", "--kind", "rc", "--out", p(&iq), "--bits-out", p(&bits)]);
    let v = ok_json(&["analyze", "--vsg8", "--kind", "rc", "--input", p(&iq), "--bits", p(&bits)]);
    assert_eq!(v["ber"].as_f64().unwrap(), 0.0, "{v}");
}

#[test]
fn truncated_payload_is_corrupt() {
    let dir = tempfile::tempdir().unwrap();
    let iq = dir.path().join("tx.iq");
    ok_json(&["modulate", "--out", p(&iq)]);
    let data = fs::read(&iq).unwrap();
    fs::write(&iq, &data[..data.len() - 8]).unwrap();
    let out = pslab(&["analyze", "--input", p(&iq)]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let out = pslab(&["psd", "--input", p(&iq)]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn missing_capture_is_io_error() {
    let out = pslab(&["analyze", "--input", "/nonexistent/capture.iq"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn gain_error_seen_without_alignment() {
    let dir = tempfile::tempdir().unwrap();
    let iq = dir.path().join("tx.iq");
    ok_json(&["modulate", "--gain", "1.02", "--out", p(&iq)]);
    let v = ok_json(&["analyze", "--input", p(&iq), "--no-align"]);
    let mag = v["mag_err_pct_rms"].as_f64().unwrap();
    assert!((mag - 2.0).abs() < 0.05, "{v}");
    assert!(v["phase_err_deg_rms"].as_f64().unwrap() < 0.05, "{v}");

    let v = ok_json(&["analyze", "--input", p(&iq)]);
    assert!(v["mag_err_pct_rms"].as_f64().unwrap() < 0.1, "{v}");
}

#[test]
fn psd_csv_has_header_and_power() {
    let dir = tempfile::tempdir().unwrap();
    let iq = dir.path().join("tx.iq");
    let csv = dir.path().join("psd.csv");
    ok_json(&["modulate", "--n-symbols", "4096", "--out", p(&iq)]);
    let v = ok_json(&["psd", "--input", p(&iq), "--out", p(&csv)]);
    assert!(v["resolution_hz"].as_f64().unwrap() <= 100.0);
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), "freq_hz,density");
    let obw = v["obw_hz"].as_f64().unwrap();
    assert!(obw > 25_000.0 && obw < 35_000.0, "{v}");
}

fn read_sorted_dir(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn sweep_outputs_are_complete_and_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = pslab(&["sweep", "--seed", "42", "--ber-bits", "20000", "--out-dir", p(d.path())]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8(out.stdout).unwrap().contains("Bandwidth Efficiency"));
    }
    assert_eq!(read_sorted_dir(a.path()), read_sorted_dir(b.path()));

    let results = fs::read_to_string(a.path().join("results.csv")).unwrap();
    assert_eq!(results.lines().count(), 21);
    let figs: Vec<_> = fs::read_dir(a.path())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().starts_with("fig"))
        .collect();
    assert_eq!(figs.len(), 5);

    let fig7 = fs::read_to_string(a.path().join("fig7_bw_eff.csv")).unwrap();
    let rows: Vec<Vec<f64>> = fig7
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    for col in 1..5 {
        assert!(rows.windows(2).all(|w| w[0][col] > w[1][col]), "column {col}");
    }
}

#[test]
fn sweep_rejects_unknown_config_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"n_symbol": 10}"#).unwrap();
    let out = pslab(&["sweep", "--config", p(&cfg), "--out-dir", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
}
