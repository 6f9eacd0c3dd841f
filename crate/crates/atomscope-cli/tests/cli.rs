use std::path::Path;
use std::process::Command;

fn atomscope(args: &[&str], out: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_atomscope"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("ATOMSCOPE_THREADS", "1")
        .output()
        .unwrap()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn tf_writes_profiles_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = atomscope(&["tf", "--Z", "10", "--N", "10,5", "--grid-n", "400"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["tf_Z10_N10.csv", "tf_Z10_N10.json", "tf_Z10_N5.csv", "report.csv", "report.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    assert!(read(&dir.path().join("tf_Z10_N5.csv")).starts_with("r,rho,phi\n"));
    let report = read(&dir.path().join("report.csv"));
    assert!(report.starts_with("Z,N,alpha,observable,value,bound,pass,runtime_s\n"));
    assert_eq!(report.matches("tf_residual").count(), 2);
}

#[test]
fn hf_and_otf_exports() {
    let dir = tempfile::tempdir().unwrap();
    let out = atomscope(&["hf", "--Z", "4", "--kappa", "0.2"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("hf_Z4_N4.json").exists());
    let out = atomscope(&["otf", "--Z", "6"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_str(&read(&dir.path().join("otf_Z6_N6.json"))).unwrap();
    assert_eq!(json["r_cut"], 1.0);
    assert!(json["sandwich"]["holds"].as_bool().unwrap());
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "timings = false\nnu = [1.0]\ntf_z = [1e12]\nz = [3.0]\nformat = [\"json\"]\n").unwrap();
    let out = atomscope(
        &["scan", "radius", "--Z", "2,4", "--format", "csv", "--config", cfg.to_str().unwrap()],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(!dir.path().join("report.csv").exists());
    let json: serde_json::Value = serde_json::from_str(&read(&dir.path().join("report.json"))).unwrap();
    assert_eq!(json["metadata"]["config"]["z"], serde_json::json!([3.0]));
    assert_eq!(json["metadata"]["experiment"], "radius");
    assert!(dir.path().join("observable_vs_x.csv").exists());
    assert!(String::from_utf8_lossy(&out.stdout).contains("2^(1/2)"));
}

#[test]
fn check_exit_code_follows_asserted_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = atomscope(&["check", "--seed", "3"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let csv = read(&dir.path().join("report.csv"));
    assert!(csv.lines().skip(1).all(|l| l.contains(",true,")), "{csv}");
    // an asserted proxy that fails gives a nonzero exit status
    let cfg = dir.path().join("ie.toml");
    std::fs::write(&cfg, "z = [2.0, 3.0]\nkappa = 0.1\n").unwrap();
    let out = atomscope(&["scan", "ionization-energy", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn bad_input_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = atomscope(&["hf", "--Z", "4", "--kappa", "0.9"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kappa"));
}
