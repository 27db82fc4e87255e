//! Regression pins for the shipped demo instance and its complexity reports.

use std::path::{Path, PathBuf};
use std::process::Command;

use bead::complexity::{exponents, Algorithm};
use bead::instance::format::parse_instance;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn bead(dir: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_bead"))
        .current_dir(dir)
        .env_remove("BEAD_OUT_DIR")
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn synth_matches_golden_instance() {
    let dir = tempfile::tempdir().unwrap();
    let o = bead(
        dir.path(),
        &["synth", "--kernel", "matern", "--nu", "1.1", "--d", "1", "--norm", "1.0", "--centers", "8", "--seed", "7", "--out", "demo_instance.txt"],
    );
    assert!(o.status.success());
    let got = std::fs::read_to_string(dir.path().join("demo_instance.txt")).unwrap();
    assert_eq!(got, std::fs::read_to_string(data("demo_instance.txt")).unwrap());
    assert_eq!(String::from_utf8_lossy(&o.stdout), std::fs::read_to_string(data("demo_synth_summary.txt")).unwrap());
}

#[test]
fn demo_instance_values() {
    let f = parse_instance(&std::fs::read_to_string(data("demo_instance.txt")).unwrap()).unwrap();
    assert_eq!(f.centers().len(), 8);
    assert!((f.norm_estimate() - 1.0).abs() < 1e-12);
    assert!((f.fmax() - 0.6553402838074655).abs() < 1e-12);
    assert!((f.eval(f.argmax()) - f.fmax()).abs() < 1e-12);
}

#[test]
fn complexity_reports_match_golden() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(data("demo_instance.txt"), dir.path().join("demo_instance.txt")).unwrap();
    let o = bead(dir.path(), &["--out-dir", "out", "complexity", "--instance", "demo_instance.txt"]);
    assert!(o.status.success());
    for name in ["complexity_lower_delta0.05.txt", "complexity_upper_delta0.05.txt"] {
        let got = std::fs::read_to_string(dir.path().join("out").join(name)).unwrap();
        assert_eq!(got, std::fs::read_to_string(data(name)).unwrap(), "{name}");
    }
}

#[test]
fn pinned_exponents() {
    let t = exponents(1, 1.1, 1.2).unwrap();
    assert!((t.entry(Algorithm::SupKernelUcb).uniform - 0.65625).abs() < 1e-15);
    assert!((t.entry(Algorithm::Bead).upper - 7.0 / 13.0).abs() < 1e-15);
    assert!((t.entry(Algorithm::SupKernelUcb).lower.unwrap() - (1.1 + 1.0 / 12.0) / 3.2).abs() < 1e-15);
    assert!((t.entry(Algorithm::GpUcb).uniform - 0.8125).abs() < 1e-15);
}
