use atomscope::expcli::*;

fn table(text: &str) -> toml::Table {
    text.parse().unwrap()
}

#[test]
fn config_defaults_and_validation() {
    let cfg = ExperimentConfig::from_toml("").unwrap();
    assert_eq!(cfg, ExperimentConfig::default());
    assert_eq!(cfg.z, (2..=10).map(f64::from).collect::<Vec<_>>());
    assert!(ExperimentConfig::from_toml("kappa = 0.7").is_err());
    assert!(ExperimentConfig::from_toml("z = []").is_err());
    assert!(ExperimentConfig::from_toml("unknown_key = 1").is_err());
    assert!(ExperimentConfig::from_toml("scheme = \"spiral\"").is_err());
    assert!(ExperimentConfig::from_toml("n_policy = \"explicit\"").is_err());
    assert!(ExperimentConfig::from_toml("format = [\"xml\"]").is_err());
    let cfg = ExperimentConfig::from_toml("experiment = \"energy-gap\"\nscheme = \"exp:0.01\"").unwrap();
    assert_eq!(cfg.experiment, ExperimentKind::EnergyGap);
    assert!(cfg.grid_scheme().unwrap().is_some());
    assert!(ExperimentConfig::default().grid_scheme().unwrap().is_none());
    assert_eq!("ionization-energy".parse::<ExperimentKind>().unwrap(), ExperimentKind::IonizationEnergy);
    assert!("nope".parse::<ExperimentKind>().is_err());
    assert!((cfg.alpha(4.0) - 0.025).abs() < 1e-15);
}

#[test]
fn config_hash_ignores_key_order() {
    let a = ExperimentConfig::from_toml("kappa = 0.2\nz = [3.0, 4.0]\nseed = 7").unwrap();
    let b = ExperimentConfig::from_toml("seed = 7\nz = [3.0, 4.0]\nkappa = 0.2").unwrap();
    assert_eq!(a.hash(), b.hash());
    assert_eq!(a.hash().len(), 64);
    let c = ExperimentConfig::from_toml("seed = 8\nz = [3.0, 4.0]\nkappa = 0.2").unwrap();
    assert_ne!(a.hash(), c.hash());
}

#[test]
fn file_keys_override_flags() {
    let flags = table("kappa = 0.2\nseed = 3\nz = [2.0]");
    let file = table("kappa = 0.3\nq = 1");
    let cfg = ExperimentConfig::merged(flags, file).unwrap();
    assert_eq!(cfg.kappa, 0.3);
    assert_eq!(cfg.seed, 3);
    assert_eq!(cfg.q, 1);
    assert_eq!(cfg.z, vec![2.0]);
    assert!(ExperimentConfig::merged(table("kappa = 0.2"), table("kappa = 1.0")).is_err());
}

#[test]
fn pass_flags() {
    let r = ReportRow::asserted(2.0, 2.0, 0.05, "x", 1.0, 2.0);
    assert_eq!(r.pass, PassFlag::Pass);
    assert_eq!(ReportRow::asserted(2.0, 2.0, 0.05, "x", 3.0, 2.0).pass, PassFlag::Fail);
    assert_eq!(ReportRow::asserted(2.0, 2.0, 0.05, "x", f64::NAN, 2.0).pass, PassFlag::Fail);
    assert_eq!(ReportRow::compared(2.0, 2.0, 0.05, "x", 3.0, 2.0).pass, PassFlag::ReportOnly);
    assert_eq!(ReportRow::invalid(2.0, 2.0, 0.05, "x").pass, PassFlag::Invalid);
    let mut report = ScanReport::new(&ExperimentConfig::default());
    assert_eq!(report.exit_code(), 0);
    report.rows.push(ReportRow::report_only(1.0, 1.0, 0.1, "y", 1e9));
    report.rows.push(ReportRow::invalid(1.0, 1.0, 0.1, "y"));
    assert_eq!(report.exit_code(), 0);
    report.rows.push(ReportRow::asserted(1.0, 1.0, 0.1, "z", 2.0, 1.0));
    assert_eq!(report.exit_code(), 1);
    for row in &report.rows {
        assert_eq!(row.recomputed_pass(), row.pass);
    }
}

#[test]
fn empty_report_has_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let report = ScanReport::new(&ExperimentConfig::default());
    let files = emit_report(&report, &["csv".into(), "json".into()], dir.path()).unwrap();
    assert_eq!(files.len(), 2);
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert_eq!(csv, "Z,N,alpha,observable,value,bound,pass,runtime_s\n");
    assert!(!dir.path().join("observable_vs_x.csv").exists());
    let back = ScanReport::load_json(&dir.path().join("report.json")).unwrap();
    assert_eq!(back, report);
}

#[test]
fn json_round_trip_keeps_nan_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let mut report = ScanReport::new(&ExperimentConfig::default());
    report.rows.push(ReportRow::asserted(3.0, 4.0, 0.1 / 3.0, "a", 0.1, 0.2).with_runtime(1.5));
    report.rows.push(ReportRow::invalid(3.0, 4.0, 0.1 / 3.0, "b"));
    report.rows.push(ReportRow::compared(3.0, 4.0, 0.1 / 3.0, "c", 1.0 / 3.0, 0.5));
    report.series.push(SeriesPoint {
        z: 3.0,
        observable: "s".into(),
        x: 0.5,
        value: 2.0,
    });
    report.metadata.fitted.insert("Q".into(), 1.0);
    emit_report(&report, &["json".into(), "csv".into()], dir.path()).unwrap();
    let back = ScanReport::load_json(&dir.path().join("report.json")).unwrap();
    assert_eq!(back.rows[0], report.rows[0]);
    assert!(back.rows[1].value.is_nan() && back.rows[1].pass == PassFlag::Invalid);
    assert_eq!(back.rows[2], report.rows[2]);
    assert_eq!(back.series, report.series);
    assert_eq!(back.metadata, report.metadata);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(json["rows"][1]["pass"], "invalid");
    assert!(json["rows"][1]["value"].is_null());
    assert_eq!(json["rows"][0]["pass"], "true");
    for key in ["version", "config_hash", "date"] {
        assert!(json["metadata"][key].is_string(), "{key}");
    }
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[1].ends_with(",true,1.5000000000000000e0"), "{}", lines[1]);
    assert!(lines[2].contains(",NaN,,invalid,"), "{}", lines[2]);
    let series = std::fs::read_to_string(dir.path().join("observable_vs_x.csv")).unwrap();
    assert!(series.starts_with("Z,observable,x,value\n"));
}

#[test]
fn envelope_fits() {
    let xs: Vec<f64> = (0..60).map(|k| 0.01 * 1.15f64.powi(k)).collect();
    // s = 2 x^(-3) + 0.1 is covered by C x^(-4+eps) + M
    let s: Vec<f64> = xs.iter().map(|x| (2.0 * x.powi(-3)).min(1e6) + 0.1).collect();
    let fit = fit_envelope(&xs, &s, 1.0);
    for (x, v) in xs.iter().zip(&s) {
        assert!(fit.c * x.powf(fit.eps - 4.0) + fit.m >= *v * (1.0 - 1e-12));
    }
    assert!(fit.looseness >= 1.0);
    let common = fit_common_envelope(&[(xs.clone(), s.clone()), (xs.clone(), s.iter().map(|v| 2.0 * v).collect())]);
    assert_eq!(common.len(), 2);
    assert_eq!(common[0].eps, common[1].eps);
    assert!((common[1].c / common[0].c - 2.0).abs() < 1e-9);
    assert_eq!(eps_lattice().len(), 79);
    // identical atoms give identically zero differences
    let f = |x: f64| (-x).exp();
    let d = potential_differences(&f, &f, &f, &f, &xs);
    assert!(d.iter().all(|&(a, b)| a == 0.0 && b == 0.0));
    let zero = fit_envelope(&xs, &vec![0.0; xs.len()], 1.0);
    assert_eq!((zero.c, zero.m, zero.looseness), (0.0, 0.0, 1.0));
}

#[test]
fn thread_limit_and_ordering() {
    std::env::set_var("ATOMSCOPE_THREADS", "1");
    assert_eq!(thread_limit(), 1);
    let out = parallel_map(&[3, 1, 2], |x| x * 10);
    assert_eq!(out, vec![30, 10, 20]);
    std::env::set_var("ATOMSCOPE_THREADS", "zero");
    assert!(thread_limit() >= 1);
    std::env::remove_var("ATOMSCOPE_THREADS");
}

#[test]
fn property_suites_pass() {
    assert_eq!(natale_violations(2000, 1), 0);
    assert_eq!(sandwich_violations(2000, 2).unwrap(), 0);
    assert_eq!(lt_f_violations(200, 3).unwrap(), 0);
    assert_eq!(k2_bound_violations().unwrap(), 0);
    assert_eq!(criticality_nonmonotone_steps().unwrap(), 0);
}

#[test]
fn reports_are_reproducible_without_timings() {
    let cfg = ExperimentConfig::from_toml(
        "experiment = \"radius\"\nz = [3.0]\nnu = [0.5, 1.0, 4.0]\ntf_z = [1e2, 1e12]\ntimings = false",
    )
    .unwrap();
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    emit_report(&a, &cfg.format, dir_a.path()).unwrap();
    emit_report(&b, &cfg.format, dir_b.path()).unwrap();
    for name in ["report.csv", "observable_vs_x.csv"] {
        let fa = std::fs::read(dir_a.path().join(name)).unwrap();
        let fb = std::fs::read(dir_b.path().join(name)).unwrap();
        assert_eq!(fa, fb, "{name}");
    }
    assert!(a.rows.iter().all(|r| r.runtime_s == 0.0));
    // nu = 4 exceeds N = 3 for the HF atom
    assert!(a.rows_named("hf_radius_scaled").any(|r| r.pass == PassFlag::Invalid));
    assert_eq!(a.rows_named("tf_radius_constant_rel_err").count(), 1);
    assert_eq!(a.exit_code(), 0, "{:?}", a.rows);
    assert!(a.metadata.notes.iter().any(|n| n.contains("2^(1/2)")));
}

#[test]
fn ionization_energy_of_hydrogen_is_the_eigenvalue() {
    let cfg = ExperimentConfig::from_toml("experiment = \"ionization-energy\"\nz = [1.0]\nmode = \"nonrelativistic\"\ntimings = false").unwrap();
    let report = run_experiment(&cfg).unwrap();
    let row = report.rows_named("one_electron_identity").next().unwrap();
    assert_eq!(row.pass, PassFlag::Pass, "{row:?}");
    let ie = report.rows_named("ionization_energy").next().unwrap().value;
    assert!((ie - 0.5).abs() < 1e-3, "{ie}");
}
