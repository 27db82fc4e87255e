//! Command-line behaviour: exit codes, output directory resolution, file
//! headers and round trips.

use std::path::Path;
use std::process::{Command, Output};

use bead::harness::SweepResult;
use bead::instance::format::parse_instance;
use bead::trace::RegretTrace;

fn bead(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bead"))
        .current_dir(dir)
        .env_remove("BEAD_OUT_DIR")
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(bead(p, &["--help"]).status.code(), Some(0));
    assert_eq!(bead(p, &["frobnicate"]).status.code(), Some(2));
    assert_eq!(bead(p, &["synth", "--nu", "-1"]).status.code(), Some(2));
    assert_eq!(bead(p, &["simulate", "--instance", "x.txt", "--strategy", "magic"]).status.code(), Some(2));
    assert_eq!(bead(p, &["simulate", "--instance", "missing.txt"]).status.code(), Some(2));
    assert_eq!(bead(p, &["exponents", "--d", "0"]).status.code(), Some(2));
    std::fs::write(p.join("broken.txt"), "# bead instance v1\nkernel = matern\nnu = oops\n").unwrap();
    assert_eq!(bead(p, &["complexity", "--instance", "broken.txt"]).status.code(), Some(2));
    assert_eq!(bead(p, &["synth", "--centers", "2"]).status.code(), Some(0));
    assert_eq!(bead(p, &["complexity", "--instance", "bead-out/instance.txt", "--delta", "0.05", "--rho", "1.5"]).status.code(), Some(2));
    // an output directory that is a regular file is a runtime failure
    std::fs::write(p.join("occupied"), "").unwrap();
    assert_eq!(bead(p, &["--out-dir", "occupied", "exponents"]).status.code(), Some(1));
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_bead"))
        .current_dir(dir.path())
        .env("BEAD_OUT_DIR", "from-env")
        .args(["exponents", "--d", "1..3"])
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.path().join("from-env/exponents.txt").exists());
    assert!(bead(dir.path(), &["exponents", "--d", "2"]).status.success());
    assert!(dir.path().join("bead-out/exponents.txt").exists());
    assert!(bead(dir.path(), &["--out-dir", "flag", "exponents"]).status.success());
    assert!(dir.path().join("flag/exponents.txt").exists());
}

#[test]
fn synth_growth_reports_fit() {
    let dir = tempfile::tempdir().unwrap();
    let o = bead(dir.path(), &["synth", "--nu", "1.5", "--growth-b", "2.0", "--seed", "3"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let b_hat: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("b_hat: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((b_hat - 2.0).abs() <= 0.25, "{out}");
    let text = std::fs::read_to_string(dir.path().join("bead-out/instance.txt")).unwrap();
    assert!(text.starts_with("# bead instance v1\n# tool = bead\n# version = "));
    let f = parse_instance(&text).unwrap();
    assert_eq!(f.growth().unwrap().b_hat, b_hat);
}

#[test]
fn simulate_outputs_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert!(bead(p, &["synth", "--nu", "1.5", "--centers", "2", "--seed", "1"]).status.success());
    std::fs::write(
        p.join("sweep.cfg"),
        "# sweep settings\ninstance = bead-out/instance.txt\nstrategies = bead,random\nbudgets = 32,64,128\nreplications = 4\n",
    )
    .unwrap();
    let o = bead(p, &["simulate", "--config", "sweep.cfg", "--replications", "2", "--write-traces"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = std::fs::read_to_string(p.join("bead-out/summary.txt")).unwrap();
    let parsed = SweepResult::parse(&summary).unwrap();
    assert_eq!(parsed.cells.len(), 2 * 3 * 2);
    assert_eq!(parsed.fits.len(), 2);
    assert_eq!(parsed.to_text(), summary);
    assert!(parsed.header.iter().any(|(k, v)| k == "replications" && v == "2"));
    assert!(parsed.header.iter().any(|(k, _)| k == "version"));
    let trace_text = std::fs::read_to_string(p.join("bead-out/traces/bead_n64_r1.txt")).unwrap();
    let trace = RegretTrace::parse(&trace_text).unwrap();
    assert_eq!(trace.len(), 64);
    trace.check_invariants().unwrap();
    let cell = parsed
        .cells
        .iter()
        .find(|c| c.strategy.name() == "bead" && c.budget == 64 && c.replicate == 1)
        .unwrap();
    assert_eq!(cell.final_regret, trace.final_regret());
    assert!(p.join("bead-out/plot_regret.py").exists());
}

#[test]
fn exponents_notice_when_lower_curves_omitted() {
    let dir = tempfile::tempdir().unwrap();
    let o = bead(dir.path(), &["exponents", "--nu", "1.5", "--b", "1.2", "--d", "1..4", "--plot-script"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("lower-bound curves omitted"));
    let text = std::fs::read_to_string(dir.path().join("bead-out/exponents.txt")).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#') && !l.starts_with("algorithm")).collect();
    assert_eq!(rows.len(), 16);
    assert!(rows.iter().all(|r| r.split_whitespace().nth(6) == Some("NA")));
    assert!(dir.path().join("bead-out/plot_exponents.py").exists());
}

#[test]
fn complexity_of_constant_instance_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("zero.txt"),
        "# bead instance v1\nkernel = matern\nnu = 1.1\ntheta = 1\ndim = 1\nnorm_budget = 1\nnorm_expansion = 0\nfmax = 0\nargmax = 0\n",
    )
    .unwrap();
    let o = bead(dir.path(), &["complexity", "--instance", "zero.txt"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for line in stdout(&o).lines().filter(|l| l.starts_with('0')) {
        let f: Vec<&str> = line.split_whitespace().collect();
        assert_eq!(&f[1..4], &["0", "0", "0"], "{line}");
    }
}
