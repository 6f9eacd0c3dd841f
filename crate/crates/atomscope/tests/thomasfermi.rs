use std::sync::Arc;

use atomscope::radial::{make_grid, GridScheme, RadialFunction, RadialGrid, ScreenedPotential};
use atomscope::thomasfermi::*;

// Frozen oracles (independent double-precision shooting and inward tabulation).
const B_ORACLE: f64 = 1.588_071_022_611;
// y(t) t^3 of the neutral profile at t = 10, 1e3 and 1e5.
const TAIL_10: f64 = 24.31;
const TAIL_1E3: f64 = 135.13;
const TAIL_1E5: f64 = 143.74;

fn grid(z: f64, n: usize) -> Arc<RadialGrid> {
    make_grid(60.0, n, GridScheme::Exponential { scale: 0.02 / z.cbrt() }).unwrap()
}

#[test]
fn dimensionless_slope_and_tail() {
    let p = solve_tf_dimensionless(1e-12).unwrap();
    assert!((p.slope_shooting - B_ORACLE).abs() < 1e-9, "{}", p.slope_shooting);
    assert!((p.slope - B_ORACLE).abs() < 1e-9, "{}", p.slope);
    assert_eq!(p.profile.eval(0.0).0, 1.0);
    for (t, v) in [(10.0, TAIL_10), (1e3, TAIL_1E3), (1e5, TAIL_1E5)] {
        let y = p.profile.eval(t).0;
        assert!((y * t * t * t - v).abs() < 0.01, "t={t}: {}", y * t * t * t);
    }
    // the approach to 144/t^3 is slow (exponent zeta); within 1% only near t = 1e5
    let y3 = p.profile.eval(1e5).0 * 1e15;
    assert!((y3 / 144.0 - 1.0).abs() < 0.01);
    // y decreasing and below 144/t^3
    let mut last = 1.0;
    for k in 1..400 {
        let t = 1e-3 * 1.05f64.powi(k);
        let (y, dy) = p.profile.eval(t);
        assert!(y < last && dy < 0.0 && y * t.powi(3) < 144.0);
        last = y;
    }
}

#[test]
fn neutral_kinetic_identity() {
    // int y'^2 = (2/7) B for the neutral profile
    let p = neutral_profile().unwrap();
    let s = p.profile.kinetic_tail(0.0);
    assert!((s - 2.0 / 7.0 * p.slope).abs() < 1e-9, "{s}");
}

#[test]
fn hydrogen_energy_and_scaling() {
    let s1 = solve_tf_atom(1.0, 1.0, 2, grid(1.0, 600)).unwrap();
    let e0 = e0(2).unwrap();
    assert!((s1.energy + e0).abs() < 1e-12);
    assert!((e0 - 0.7687).abs() < 1e-4, "{e0}");
    let s10 = solve_tf_atom(10.0, 10.0, 2, grid(10.0, 600)).unwrap();
    let scaled = s10.energy / 10f64.powf(7.0 / 3.0);
    assert!(((scaled - s1.energy) / s1.energy).abs() < 1e-6);
    assert_eq!(s1.mu, 0.0);
    // direct quadrature of the functional agrees with the virial value
    let eq = s10.energy_by_quadrature().unwrap();
    assert!(((eq - s10.energy) / s10.energy).abs() < 1e-8, "{eq} vs {}", s10.energy);
}

#[test]
fn invariants_hold() {
    for &(z, n) in &[(1.0, 1.0), (10.0, 10.0), (10.0, 5.0), (92.0, 92.0), (20.0, 30.0)] {
        let s = solve_tf_atom(z, n, 2, grid(z, 800)).unwrap();
        assert!(s.residual <= 1e-6, "Z={z} N={n}: residual {}", s.residual);
        assert!(s.rho.values().iter().all(|&v| v >= 0.0));
        assert!(s.total_charge <= n.min(z) + 1e-6);
        if n < z {
            assert!(s.mu > 0.0);
            assert!(((s.total_charge - n) / n).abs() < 1e-6, "{}", s.total_charge);
        } else {
            assert_eq!(s.mu, 0.0);
        }
    }
}

#[test]
fn ion_has_positive_mu_and_exact_charge() {
    let s = solve_tf_atom(10.0, 5.0, 2, grid(10.0, 800)).unwrap();
    assert!(s.mu > 0.0);
    let q = s.rho.total_charge().unwrap();
    assert!((q - 5.0).abs() < 1e-3, "{q}");
    assert!((s.total_charge - 5.0).abs() < 1e-8);
}

#[test]
fn mu_nonincreasing_in_n() {
    let mut last = f64::INFINITY;
    for frac in [0.25, 0.5, 0.75, 1.0] {
        let s = solve_tf_atom(12.0, 12.0 * frac, 2, grid(12.0, 400)).unwrap();
        assert!(s.mu <= last);
        last = s.mu;
    }
    let empty = solve_tf_atom(12.0, 0.0, 2, grid(12.0, 400)).unwrap();
    assert!(empty.mu.is_infinite());
    assert_eq!(empty.total_charge, 0.0);
}

#[test]
fn weyl_identity() {
    // -(2^(3/2) q / 15 pi^2) int phi^(5/2) = -(2/5) int phi rho
    let s = solve_tf_atom(10.0, 10.0, 2, grid(10.0, 2000)).unwrap();
    let r = s.grid.r();
    let phi = s.phi.values();
    let f52: Vec<f64> = phi.iter().map(|p| p.max(0.0).powf(2.5)).collect();
    let fr: Vec<f64> = phi.iter().zip(s.rho.values()).map(|(p, d)| p * d).collect();
    let q = 2.0;
    let lhs = -(2f64.powf(1.5) * q / (15.0 * std::f64::consts::PI.powi(2))) * s.grid.integrate_volume(&f52);
    let rhs = -0.4 * s.grid.integrate_volume(&fr);
    assert!(((lhs - rhs) / rhs).abs() < 1e-6, "{lhs} {rhs}");
    assert!(r.len() == phi.len());
}

#[test]
fn sommerfeld_constants_and_envelopes() {
    let env = SommerfeldEnvelope::new(2, 20.0).unwrap();
    assert!((env.zeta - 0.772_001_872_658_765_7).abs() < 1e-12);
    assert!((env.beta0 - 0.08593).abs() < 1e-5, "{}", env.beta0);
    for q in [1, 2, 4] {
        let e = SommerfeldEnvelope::new(q, 5.0).unwrap();
        assert!(e.a.is_finite() && e.a > 0.0);
        // the lower envelope is continuous at the branch point
        let x = e.branch_radius();
        assert!((e.lower(x * (1.0 - 1e-12)) - e.lower(x * (1.0 + 1e-12))).abs() < 1e-6 * e.lower(x));
    }
    for &z in &[1.0, 10.0, 20.0, 92.0] {
        for q in [1, 2] {
            let s = solve_tf_atom(z, z, q, grid(z, 800)).unwrap();
            let env = SommerfeldEnvelope::new(q, z).unwrap();
            for (&x, &phi) in s.grid.r().iter().zip(s.phi.values()) {
                let (lo, hi) = sommerfeld_bounds(x, &env).unwrap();
                assert!(lo <= phi && phi <= hi, "Z={z} q={q} x={x}: {lo} {phi} {hi}");
                let (rb, pb) = est0ext_bounds(x, q);
                assert!(s.rho_at(x) <= rb && phi <= pb);
            }
        }
    }
}

#[test]
fn radius_behaviour() {
    let s = solve_tf_atom(30.0, 30.0, 2, grid(30.0, 600)).unwrap();
    let half = tf_radius(&s, 15.0).unwrap();
    assert!((s.charge_outside(half) - 15.0).abs() < 1e-9);
    let mut last = 0.0;
    for nu in [29.9, 20.0, 10.0, 1.0, 0.1] {
        let r = tf_radius(&s, nu).unwrap();
        assert!(r > last);
        last = r;
    }
    assert!(tf_radius(&s, 30.0 - 1e-9).unwrap() < 1e-3);
    assert!(tf_radius(&s, 0.0).is_err() && tf_radius(&s, 31.0).is_err());
    // TF scaling: Z = 1e12 is deep in the universal-tail regime
    let big = solve_tf_atom(1e12, 1e12, 2, make_grid(1.0, 64, GridScheme::Uniform).unwrap()).unwrap();
    for nu in [1.0, 2.0, 4.0, 8.0] {
        let c = tf_radius(&big, nu).unwrap() * f64::cbrt(nu);
        assert!((c / radius_constant(2) - 1.0).abs() < 0.02, "nu={nu}: {c}");
    }
    assert!((radius_constant(2) - 7.366).abs() < 1e-3);
}

#[test]
fn rho53_checks() {
    let s1 = solve_tf_atom(1.0, 1.0, 2, grid(1.0, 400)).unwrap();
    let s10 = solve_tf_atom(10.0, 10.0, 2, grid(10.0, 400)).unwrap();
    let s92 = solve_tf_atom(92.0, 92.0, 2, grid(92.0, 400)).unwrap();
    assert!(rho_53_bound_check(&s1).2 && rho_53_bound_check(&s92).2);
    let a = rho_53_bound_check(&s1).0;
    let b = rho_53_bound_check(&s10).0 / 10f64.powf(7.0 / 3.0);
    assert!(((a - b) / a).abs() < 1e-6);
}

#[test]
fn otf_reproduces_tf_outside_the_ball() {
    let z = 20.0;
    let g = grid(z, 1500);
    let tf = solve_tf_atom(z, z, 2, g.clone()).unwrap();
    let sp = ScreenedPotential::new(&tf.rho, z).unwrap();
    for r in [0.3, 1.0, 2.5] {
        // exact Phi_r of the TF atom outside r: (Z - Q(r))/s
        let zeff = z - tf.charge_within(r);
        let v = RadialFunction::from_fn(g.clone(), atomscope::radial::FunctionKind::Potential, |s| {
            if s >= r {
                zeff / s
            } else {
                sp.at(r, s).unwrap()
            }
        })
        .unwrap();
        let otf = solve_otf(&v, r, tf.charge_outside(r), 2).unwrap();
        assert!(otf.mu.abs() < 1e-12);
        let mut diff = 0.0;
        let mut norm = 0.0;
        for (i, &s) in g.r().iter().enumerate() {
            if s >= r {
                let w = g.weights()[i] * s * s;
                diff += w * (otf.rho.values()[i] - tf.rho.values()[i]).abs();
                norm += w * tf.rho.values()[i];
            }
        }
        assert!(diff / norm < 1e-3, "r={r}: {}", diff / norm);
        let fit = otf_sandwich_fit(&otf);
        assert!(fit.holds && fit.points > 0);
        // ionic variant: fewer electrons than Z_eff
        let ion = solve_otf(&v, r, 0.5 * zeff, 2).unwrap();
        assert!(ion.mu > 0.0);
        assert!((ion.total_charge - 0.5 * zeff).abs() < 1e-9);
        assert!((ion.charge_within(g.r_max()) - 0.5 * zeff).abs() < 1e-6 * zeff);
    }
}

#[test]
fn export_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let s = solve_tf_atom(10.0, 5.0, 2, grid(10.0, 200)).unwrap();
    s.export(dir.path(), "tf").unwrap();
    let csv = std::fs::read_to_string(dir.path().join("tf.csv")).unwrap();
    assert!(csv.starts_with("r,rho,phi\n"));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("tf.json")).unwrap()).unwrap();
    for key in ["Z", "N", "q", "mu", "energy", "total_charge", "residual"] {
        assert!(json.get(key).is_some(), "{key}");
    }
    let back: TfSummary = serde_json::from_value(json).unwrap();
    assert_eq!(back, s.summary());
}
