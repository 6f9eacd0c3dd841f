use std::f64::consts::{PI, SQRT_2};

use atomscope::hartreefock::{build_channel_kinetic, lowest_eigenpairs, KineticMode};
use atomscope::radial::{make_grid, GridScheme};
use atomscope::relkin::*;
use proptest::prelude::*;

// K_2(1), independent series evaluation.
const K2_AT_1: f64 = 1.624_838_898_635_177_5;

#[test]
fn kinetic_symbol_examples() {
    assert_eq!(kinetic_symbol(0.0, 1.0).unwrap(), 0.0);
    assert!((kinetic_symbol(3.0, 1.0).unwrap() - (10f64.sqrt() - 1.0)).abs() < 1e-14);
    let s = KineticSymbol::new(1e-4f64).unwrap();
    assert!((s.scaled(1.0) - 0.5).abs() < 1e-6);
    assert!(kinetic_symbol(1.0, 0.0).is_err());
    assert!(kinetic_symbol(1.0, -1.0).is_err());
    // no cancellation at tiny alpha p
    let t = kinetic_symbol(1e-3f64, 1e-6).unwrap();
    assert!((t / (0.5 * 1e-6 * 1e-6) - 1.0).abs() < 1e-9);
}

#[test]
fn daubechies_g_examples() {
    assert_eq!(daubechies_g(0.0).unwrap(), 0.0);
    let g1 = daubechies_g(1.0).unwrap();
    assert!((g1 - (3.0 * SQRT_2 - (1.0 + SQRT_2).ln())).abs() < 1e-13);
    assert!((g1 - 3.361_267_100_1).abs() < 1e-9);
    let (lo, hi) = excess_bounds(1.0f64);
    assert!((lo - 0.24).abs() < 1e-15 && (hi - 0.8).abs() < 1e-15);
    let ex = daubechies_excess(1.0f64);
    assert!(lo <= ex && ex <= hi && (ex - 0.694_600_4).abs() < 1e-6);
    assert!(daubechies_g(-1.0).is_err());
}

#[test]
fn daubechies_functional_examples() {
    let f = DaubechiesFunctional::new(2, 1.0).unwrap();
    assert_eq!(f.eval(0.0).unwrap(), 0.0);
    let (lo, g, hi) = f.sandwich(1.0).unwrap();
    assert!(lo <= g && g <= hi);
    assert!(f.eval(-1.0).is_err());
    assert!(DaubechiesFunctional::new(0, 1.0).is_err());
    // alpha^-1 G_alpha(1) -> (3/10) C^(-2/3) for small alpha
    let alpha = 1e-6;
    let small = DaubechiesFunctional::new(2, alpha).unwrap();
    let limit = 0.3 * (0.163f64 * 2.0).powf(-2.0 / 3.0);
    assert!((small.eval(1.0).unwrap() / alpha / limit - 1.0).abs() < 1e-4);
    assert_eq!(daubechies_g_alpha(1.0, 1.0, 2).unwrap(), g);
}

#[test]
fn daubechies_functional_is_convex() {
    let f = DaubechiesFunctional::new(1, 0.3).unwrap();
    let rho: Vec<f64> = (0..200).map(|k| 0.05 * k as f64).collect();
    let g: Vec<f64> = rho.iter().map(|&r| f.eval(r).unwrap()).collect();
    assert!(g.iter().all(|&v| v >= 0.0));
    for w in g.windows(3) {
        assert!(w[0] + w[2] - 2.0 * w[1] >= -1e-12 * w[1].abs());
    }
}

#[test]
fn lt_f_examples() {
    assert_eq!(lt_f(0.0, 1.0).unwrap(), 0.0);
    let f1 = lt_f(1.0, 1.0).unwrap();
    assert!(f1 <= 1.6 + 1.0 / (2.0 * SQRT_2));
    assert!(f1 <= lt_f_bound(1.0, 1.0));
    // F(s, alpha) = alpha^-4 F(alpha s, 1)
    let (s, alpha) = (2.0f64, 0.5f64);
    let direct = lt_f(s, alpha).unwrap();
    let scaled = alpha.powi(-4) * lt_f(alpha * s, 1.0).unwrap();
    assert!(((direct - scaled) / direct).abs() < 1e-8, "{direct} vs {scaled}");
}

#[test]
fn bessel_k2_examples() {
    assert!((bessel_k2(1.0).unwrap() / K2_AT_1 - 1.0).abs() < 1e-9);
    assert!((bessel_k2_second_moment().unwrap() - 1.5 * PI).abs() < 1e-8);
    for t in [0.5, 1.0, 2.0, 5.0, 10.0] {
        assert!(bessel_k2(t).unwrap() <= bessel_k2_bound(t));
    }
    assert!(bessel_k2(0.0).is_err() && bessel_k2(-1.0).is_err());
    let mut last = f64::INFINITY;
    for k in 0..60 {
        let v = bessel_k2(0.05 * 1.15f64.powi(k)).unwrap();
        assert!(v < last);
        last = v;
    }
}

#[test]
fn kato_and_herbst_on_gaussians() {
    let g = GaussianProfile::new(1.0).unwrap();
    let k = check_kato(&g).unwrap();
    assert!((k.lhs - 2.0 / PI.sqrt()).abs() < 1e-8);
    assert!((k.rhs - PI.sqrt()).abs() < 1e-8);
    assert!(k.holds);
    // scaling f_l(x) = l^(3/2) f(l x): both sides scale by l
    let g2 = GaussianProfile::new(0.25).unwrap();
    let k2 = check_kato(&g2).unwrap();
    assert!((k2.lhs / k.lhs - 4.0).abs() < 1e-8 && (k2.rhs / k.rhs - 4.0).abs() < 1e-8);
    let h = check_herbst_constant(&g, 1.0).unwrap();
    assert!(h.holds);
    let tiny = check_herbst_constant(&g, 1e-3).unwrap();
    assert!(tiny.lhs < 1e-3 && tiny.holds);
    let bump = ShiftedBump::new(6.0, 1.0).unwrap();
    let hb = check_herbst_constant(&bump, 0.1).unwrap();
    assert!(hb.lhs < 1e-12 && hb.holds);
}

#[test]
fn kato_holds_for_a_relativistic_ground_state() {
    let (z, kappa) = (10.0, 0.3);
    let alpha = kappa / z;
    let g = make_grid(20.0, 600, GridScheme::Exponential { scale: 0.01 / z }).unwrap();
    let t = build_channel_kinetic(g.clone(), 0, alpha, KineticMode::Relativistic).unwrap();
    let v: Vec<f64> = g.r().iter().map(|r| -z / r).collect();
    let u = lowest_eigenpairs(&t, &v, 1).unwrap().remove(0).1;
    let f = SampledProfile::new(g.r(), &u).unwrap();
    let k = check_kato(&f).unwrap();
    assert!(k.holds && k.rhs / k.lhs > 1.05, "{} {}", k.lhs, k.rhs);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn natale_bounds(t in 0.0f64..100.0) {
        let (lo, hi) = excess_bounds(t);
        let ex = daubechies_excess(t);
        prop_assert!(lo <= ex && ex <= hi);
    }

    #[test]
    fn daubechies_sandwich(lr in -6.0f64..6.0, la in -4.0f64..0.0, qi in 0usize..3) {
        let q = [1, 2, 4][qi];
        let f = DaubechiesFunctional::new(q, 10f64.powf(la)).unwrap();
        let (lo, g, hi) = f.sandwich(10f64.powf(lr)).unwrap();
        prop_assert!(lo <= g && g <= hi);
    }

    #[test]
    fn kinetic_symbol_is_dominated(p in 0.0f64..1e3, la in -4.0f64..1.0) {
        let s = KineticSymbol::new(10f64.powf(la)).unwrap();
        prop_assert!(s.energy(p) >= p);
        prop_assert!(s.scaled(p) <= 0.5 * p * p * (1.0 + 1e-15));
        prop_assert!(s.t(p * 1.01 + 1e-9) > s.t(p));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn lt_f_bound_holds(ls in -4.0f64..3.0, la in -4.0f64..0.0) {
        let (s, a) = (10f64.powf(ls), 10f64.powf(la));
        prop_assert!(lt_f(s, a).unwrap() <= lt_f_bound(s, a));
    }
}
