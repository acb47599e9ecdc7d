//! Acceptance check for the end-to-end CLI path: the identity process
//! estimated through the full pipeline must come back with unit fidelity
//! and a single peak at χ_00.

use std::path::PathBuf;
use std::process::Command;

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("mseqpt-accept-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn c9_noop_end_to_end_through_cli() {
    let dir = temp_dir("noop");
    let status = Command::new(env!("CARGO_BIN_EXE_mseqpt"))
        .args([
            "run",
            "--channel",
            "noop",
            "--protocol",
            "mseqpt",
            "--backend",
            "ideal",
            "--format",
            "both",
            "--out-dir",
        ])
        .arg(&dir)
        .status()
        .unwrap();
    assert!(status.success());

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    let fidelity = report["fidelity"].as_f64().unwrap();
    assert!(
        (fidelity - 1.0).abs() < 1e-9,
        "fidelity {fidelity} not 1 within 1e-9"
    );

    // Single peak: χ_00 = 1, every other element zero, in both the JSON
    // grids and the CSV bar file.
    let real = report["chi_real"].as_array().unwrap();
    let imag = report["chi_imag"].as_array().unwrap();
    for a in 0..16 {
        for b in 0..16 {
            let re = real[a][b].as_f64().unwrap();
            let im = imag[a][b].as_f64().unwrap();
            let want = if (a, b) == (0, 0) { 1.0 } else { 0.0 };
            assert!((re - want).abs() < 1e-9, "re({a},{b}) = {re}");
            assert!(im.abs() < 1e-9, "im({a},{b}) = {im}");
        }
    }
    let bars = std::fs::read_to_string(dir.join("chi_bars.csv")).unwrap();
    let peak_rows = bars
        .lines()
        .skip(1)
        .filter(|line| {
            let fields: Vec<&str> = line.split(',').collect();
            fields[2].parse::<f64>().unwrap().abs() > 1e-9
                || fields[3].parse::<f64>().unwrap().abs() > 1e-9
        })
        .count();
    assert_eq!(peak_rows, 1, "exactly one nonzero bar expected");

    println!("PASS c9 end-to-end identity process: fidelity {fidelity:.12}, single χ_00 peak");
}
