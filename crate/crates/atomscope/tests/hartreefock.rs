
use atomscope::hartreefock::*;
use atomscope::radial::{make_grid, FunctionKind, GridScheme, RadialFunction};

// Restricted HF ground state of helium (nonrelativistic), independent dense-grid run.
const HE_ORACLE: f64 = -2.8617;

fn nonrel() -> HfConfig {
    HfConfig {
        mode: KineticMode::Nonrelativistic,
        ..HfConfig::default()
    }
}

#[test]
fn hydrogen_channels() {
    let g = make_grid(60.0, 2000, GridScheme::Uniform).unwrap();
    let coulomb: Vec<f64> = g.r().iter().map(|r| -1.0 / r).collect();
    let s = build_channel_kinetic(g.clone(), 0, 1.0, KineticMode::Nonrelativistic).unwrap();
    let e = lowest_eigenpairs(&s, &coulomb, 2).unwrap();
    assert!((e[0].0 + 0.5).abs() < 1e-3, "{}", e[0].0);
    assert!(e[0].1[0] > 0.0 && e[1].1[0] > 0.0);
    let p = build_channel_kinetic(g.clone(), 1, 1.0, KineticMode::Nonrelativistic).unwrap();
    for z in [1.0, 3.0] {
        let v: Vec<f64> = g.r().iter().map(|r| -z / r).collect();
        let e = lowest_eigenpairs(&p, &v, 1).unwrap()[0].0;
        assert!((e / (-z * z / 8.0) - 1.0).abs() < 1e-3, "Z={z}: {e}");
    }
    let rel = build_channel_kinetic(g.clone(), 0, 1e-3, KineticMode::Relativistic).unwrap();
    let er = lowest_eigenpairs(&rel, &coulomb, 1).unwrap()[0].0;
    assert!((er - e[0].0).abs() < 1e-4, "{er} vs {}", e[0].0);
}

#[test]
fn kinetic_matrix_properties() {
    let g = make_grid(20.0, 300, GridScheme::Exponential { scale: 0.05 }).unwrap();
    for l in 0..3 {
        let t = build_channel_kinetic(g.clone(), l, 0.3, KineticMode::Relativistic).unwrap();
        assert!(t.asymmetry() < 1e-12);
        let free = lowest_eigenpairs(&t, &vec![0.0; g.len()], 5).unwrap();
        assert!(free.iter().all(|(e, _)| *e > 0.0));
        // alpha^-1 T <= p^2/2 as matrices, checked on the nonrelativistic spectrum
        let nr = build_channel_kinetic(g.clone(), l, 0.3, KineticMode::Nonrelativistic).unwrap();
        for (a, b) in t.laplacian_eigenvalues().iter().zip(nr.laplacian_eigenvalues()) {
            assert_eq!(a, b);
        }
    }
    // kappa = 0.5: relativistic ground state lies below the nonrelativistic one
    let z = 10.0;
    let alpha = 0.05;
    let v: Vec<f64> = g.r().iter().map(|r| -z / r).collect();
    let rel = build_channel_kinetic(g.clone(), 0, alpha, KineticMode::Relativistic).unwrap();
    let nr = build_channel_kinetic(g.clone(), 0, alpha, KineticMode::Nonrelativistic).unwrap();
    assert!(lowest_eigenpairs(&rel, &v, 1).unwrap()[0].0 <= lowest_eigenpairs(&nr, &v, 1).unwrap()[0].0);
    let log = make_grid(20.0, 300, GridScheme::log()).unwrap();
    assert!(build_channel_kinetic(log, 0, 0.1, KineticMode::Relativistic).is_err());
}

#[test]
fn criticality_scan_is_monotone() {
    let g = make_grid(30.0, 300, GridScheme::Exponential { scale: 0.02 }).unwrap();
    let kappas: Vec<f64> = (0..=53).map(|i| 0.1 + 0.01 * i as f64).collect();
    let scan = criticality_scan(g, 1.0, &kappas).unwrap();
    assert!(scan.windows(2).all(|w| w[1].1 < w[0].1));
}

#[test]
fn direct_potential_of_hydrogenic_1s() {
    let z: f64 = 2.0;
    let g = make_grid(30.0, 1500, GridScheme::Exponential { scale: 0.05 }).unwrap();
    let u = RadialFunction::from_fn(g.clone(), FunctionKind::Potential, |r| 2.0 * z.powf(1.5) * r * (-z * r).exp()).unwrap();
    // renormalize on the grid
    let norm = g.integrate(&u.values().iter().map(|v| v * v).collect::<Vec<_>>()).sqrt();
    let u = RadialFunction::new(g.clone(), u.values().iter().map(|v| v / norm).collect(), FunctionKind::ReducedOrbital).unwrap();
    let shell = Shell { n: 1, l: 0, occ: 1.0, eps: 0.0, u };
    let v = direct_potential(std::slice::from_ref(&shell)).unwrap();
    for (&r, &p) in g.r().iter().zip(v.values()) {
        let exact = (1.0 - (-2.0 * z * r).exp() * (1.0 + z * r)) / r;
        assert!((p - exact).abs() < 1e-5 * exact.max(1.0), "r={r}: {p} vs {exact}");
    }
    assert!((v.values().last().unwrap() * g.r_max() - 1.0).abs() < 1e-9);
    // linearity in the occupation
    let half = Shell { occ: 0.5, ..shell.clone() };
    let two = direct_potential(&[half.clone(), half]).unwrap();
    for (a, b) in two.values().iter().zip(v.values()) {
        assert!((a - b).abs() < 1e-14 * b.abs().max(1.0));
    }
    // one electron: exchange on its own orbital is the direct term
    let k = exchange_apply(std::slice::from_ref(&shell), 2, 0, shell.u.values()).unwrap();
    for ((a, p), u) in k.values().iter().zip(v.values()).zip(shell.u.values()) {
        assert!((a - p * u).abs() < 1e-10 * (p * u).abs().max(1e-300) + 1e-300);
    }
}

#[test]
fn angular_coefficients() {
    assert_eq!(angular_coefficient(0, 0, 0), 1.0);
    assert!((angular_coefficient(1, 1, 0) - 1.0 / 3.0).abs() < 1e-15);
    assert!((angular_coefficient(1, 0, 1) - 1.0 / 3.0).abs() < 1e-15);
    assert!((angular_coefficient(1, 2, 1) - 2.0 / 15.0).abs() < 1e-15);
    assert!((angular_coefficient(2, 2, 2) - 2.0 / 35.0).abs() < 1e-15);
    assert_eq!(angular_coefficient(1, 1, 1), 0.0);
    assert_eq!(angular_coefficient(0, 3, 1), 0.0);
    // sum rule: sum_k (2k+1) (l k l'; 000)^2 = 1
    for l1 in 0..4 {
        for l2 in 0..4 {
            let s: f64 = (0..8).map(|k| (2 * k + 1) as f64 * angular_coefficient(l1, k, l2)).sum();
            assert!((s - 1.0).abs() < 1e-14, "{l1} {l2}: {s}");
        }
    }
}

#[test]
fn one_electron_identity() {
    for (z, mode) in [(1.0, KineticMode::Nonrelativistic), (3.0, KineticMode::Relativistic)] {
        let cfg = HfConfig { mode, ..HfConfig::default() };
        let alpha = 0.1;
        let sol = scf_solve(z, 1.0, alpha, 2, &cfg).unwrap();
        assert!(sol.converged);
        let g = sol.grid.clone();
        let t = build_channel_kinetic(g.clone(), 0, alpha, mode).unwrap();
        let v: Vec<f64> = g.r().iter().map(|r| -z / r).collect();
        let e = lowest_eigenpairs(&t, &v, 1).unwrap()[0].0;
        assert!((sol.energy.total - e).abs() < 1e-10, "{} vs {e}", sol.energy.total);
        assert!((sol.shells[0].eps - e).abs() < 1e-10);
        assert!((sol.energy.direct - sol.energy.exchange).abs() < 1e-12);
    }
}

#[test]
fn helium() {
    let t = std::time::Instant::now();
    let nr = scf_solve(2.0, 2.0, 1e-4, 2, &nonrel()).unwrap();
    assert!(nr.converged, "{:?}", nr.diagnostics);
    assert!((nr.energy.total - HE_ORACLE).abs() < 2e-3, "{}", nr.energy.total);
    let rel = scf_solve(2.0, 2.0, 1e-4, 2, &HfConfig::default()).unwrap();
    assert!((rel.energy.total - nr.energy.total).abs() < 1e-3);
    for s in [&nr, &rel] {
        assert!(s.el_residual <= 1e-6 && s.orthonormality <= 1e-8);
        assert!(s.energy.direct >= s.energy.exchange && s.energy.exchange >= 0.0);
        // closed 1s^2: exchange is half the same-orbital Coulomb integral
        assert!((s.energy.exchange - 0.5 * s.energy.direct).abs() < 1e-12);
        assert!(s.bound);
    }
    println!("He: {} ({} iterations) in {:?}", nr.energy.total, nr.iterations, t.elapsed());
}

// Tabulated restricted HF totals (nonrelativistic) of neutral atoms.
const LI_HF: f64 = -7.432_727;
const BE_HF: f64 = -14.573_023;
const NE_HF: f64 = -128.547_098;

#[test]
fn light_atoms_match_tabulated_totals() {
    // second-order grid error: about 1e-4 of the total at 300 points
    for (z, oracle, conf) in [(3.0, LI_HF, "1s2 2s1"), (4.0, BE_HF, "1s2 2s2"), (10.0, NE_HF, "1s2 2s2 2p6")] {
        let s = scf_solve(z, z, 1e-4, 2, &nonrel()).unwrap();
        assert!(s.converged && s.bound);
        assert_eq!(configuration_label(&s), conf);
        assert!(((s.energy.total - oracle) / oracle).abs() < 1.5e-4, "Z={z}: {}", s.energy.total);
        let occ: f64 = s.shells.iter().map(|sh| sh.occ).sum();
        assert!((occ - z).abs() < 1e-12);
        assert!((s.rho.total_charge().unwrap() - z).abs() < 1e-9);
        assert!(s.el_residual <= 1e-6 && s.orthonormality <= 1e-8);
    }
    // boron fills 2p, not 3s
    let b = scf_solve(5.0, 5.0, 0.02, 2, &HfConfig::default()).unwrap();
    assert_eq!(configuration_label(&b), "1s2 2s2 2p1");
}

#[test]
fn exchange_operator_is_symmetric() {
    let s = scf_solve(7.0, 7.0, 0.01, 2, &HfConfig::default()).unwrap();
    let g = s.grid.clone();
    let a: Vec<f64> = g.r().iter().map(|r| r * (-r).exp()).collect();
    let b: Vec<f64> = g.r().iter().map(|r| r * r * (-0.5 * r).exp()).collect();
    for t in 0..s.shells.len() {
        let ka = exchange_apply(&s.shells, 2, t, &a).unwrap();
        let kb = exchange_apply(&s.shells, 2, t, &b).unwrap();
        let l: Vec<f64> = a.iter().zip(kb.values()).map(|(x, y)| x * y).collect();
        let r: Vec<f64> = ka.values().iter().zip(&b).map(|(x, y)| x * y).collect();
        let (l, r) = (g.integrate(&l), g.integrate(&r));
        assert!((l - r).abs() < 1e-10 * l.abs().max(1.0), "shell {t}: {l} vs {r}");
    }
    assert!(exchange_apply(&s.shells, 2, 99, &a).is_err());
}

#[test]
fn helium_exchange_against_double_quadrature() {
    let s = scf_solve(2.0, 2.0, 1e-4, 2, &nonrel()).unwrap();
    let g = &s.grid;
    let u = s.shells[0].u.values();
    // midpoint rule on a fine uniform mesh of the interpolated u^2
    let m = 3000;
    let h = g.r_max() / m as f64;
    let x: Vec<f64> = (0..m).map(|i| (i as f64 + 0.5) * h).collect();
    let sq: Vec<f64> = u.iter().map(|v| v * v).collect();
    let f: Vec<f64> = x.iter().map(|&r| g.interpolate(&sq, r)).collect();
    let mut f0 = 0.0;
    for i in 0..m {
        for j in 0..m {
            f0 += f[i] * f[j] / x[i].max(x[j]);
        }
    }
    f0 *= h * h;
    // 1s^2: exchange = F0 / 2 (times two electrons), direct = 2 F0
    assert!((s.energy.exchange / f0 - 1.0).abs() < 2e-3, "{} vs {f0}", s.energy.exchange);
    assert!((s.energy.direct / (2.0 * f0) - 1.0).abs() < 2e-3);
}

#[test]
fn radius_screening_and_export() {
    let s = scf_solve(10.0, 10.0, 0.01, 2, &HfConfig::default()).unwrap();
    let mut last = f64::INFINITY;
    for nu in [0.5, 1.0, 2.0, 5.0, 9.0] {
        let r = hf_radius(&s, nu).unwrap();
        assert!(r < last);
        assert!((s.charge_outside(r).unwrap() - nu).abs() < 1e-9);
        last = r;
    }
    assert!(hf_radius(&s, 10.0).is_err() && hf_radius(&s, 0.0).is_err());
    // R -> 0 leaves the bare nucleus, full screening kills the tail
    for x in [0.1, 1.0, 3.0] {
        let v = hf_screened_potential(&s, 1e-12, x).unwrap();
        assert!((v - 10.0 / x).abs() < 1e-8 * v);
    }
    let far = hf_screened_potential(&s, s.grid.r_max(), 20.0).unwrap();
    assert!(far.abs() * 20.0 < 1e-6, "{far}");

    let dir = tempfile::tempdir().unwrap();
    s.export(dir.path(), "ne").unwrap();
    let text = std::fs::read_to_string(dir.path().join("ne.json")).unwrap();
    let back: HfSummary = serde_json::from_str(&text).unwrap();
    assert_eq!(back, s.summary());
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    for key in ["Z", "N", "q", "alpha", "converged", "iterations", "energy", "shells"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    for key in ["kinetic", "nuclear", "direct", "exchange", "total"] {
        assert!(v["energy"].get(key).is_some());
    }
    assert!(std::fs::read_to_string(dir.path().join("ne_rho.csv")).unwrap().starts_with("r,rho\n"));
    let p = RadialFunction::read_csv(&dir.path().join("ne_2p.csv"), s.grid.clone(), FunctionKind::Potential).unwrap();
    assert_eq!(p.values(), s.shells[2].u.values());
}

#[test]
fn unbinding_is_a_flag() {
    // two electrons beyond the neutral helium atom do not bind
    let cfg = HfConfig { validate_binding: true, ..HfConfig::default() };
    let s = scf_solve(2.0, 6.0, 0.05, 2, &cfg).unwrap();
    assert!(!s.bound && s.bound_doubled == Some(false), "{} {:?}", s.homo_eps, s.bound_doubled);
    let neutral = scf_solve(2.0, 2.0, 0.05, 2, &cfg).unwrap();
    assert!(neutral.bound && neutral.bound_doubled == Some(true));
    // kappa beyond 2/pi is rejected
    assert!(scf_solve(10.0, 10.0, 0.064, 2, &HfConfig::default()).is_err());
    assert!(scf_solve(2.0, 0.0, 0.01, 2, &HfConfig::default()).is_err());
}

#[test]
fn config_round_trips() {
    let cfg = HfConfig { grid_n: 123, validate_binding: true, ..HfConfig::default() };
    let text = serde_json::to_string(&cfg).unwrap();
    assert_eq!(serde_json::from_str::<HfConfig>(&text).unwrap(), cfg);
    let partial: HfConfig = serde_json::from_str(r#"{"mode":"nonrelativistic"}"#).unwrap();
    assert_eq!(partial.mode, KineticMode::Nonrelativistic);
    assert_eq!(partial.damping, 0.3);
}
