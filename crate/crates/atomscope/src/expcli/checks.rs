//! Randomized and closed-form property suites for the `check` verb.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::ExperimentConfig;
use super::report::{ReportRow, ScanReport};
use crate::error::Result;
use crate::hartreefock::criticality_scan;
use crate::radial::{make_grid, GridScheme};
use crate::relkin::{
    bessel_k2, bessel_k2_bound, bessel_k2_second_moment, check_herbst_constant, check_kato, daubechies_excess,
    excess_bounds, lt_f, lt_f_bound, DaubechiesFunctional, GaussianProfile,
};
use crate::semiclassics::{coherent_completeness_check, weyl_term, PhaseSpaceBudget, Potential, Window};
use crate::thomasfermi::solve_tf_atom;

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

/// Violations of `(3/5) t^4 min(2t/5, 1) <= g(t) - (8/3) t^3 <= 2 t^4 min(2t/5, 1)`.
pub fn natale_violations(samples: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples)
        .filter(|_| {
            let t = 100.0 * rng.random::<f64>();
            let (lo, hi) = excess_bounds(t);
            let g = daubechies_excess(t);
            !(lo <= g && g <= hi)
        })
        .count()
}

/// Violations of the two-sided bound on `G_alpha(rho)`.
pub fn sandwich_violations(samples: usize, seed: u64) -> Result<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = 0;
    for _ in 0..samples {
        let rho = log_uniform(&mut rng, 1e-6, 1e6);
        let alpha = log_uniform(&mut rng, 1e-4, 1.0);
        let q = [1, 2, 4][rng.random_range(0..3)];
        let (lo, g, hi) = DaubechiesFunctional::new(q, alpha)?.sandwich(rho)?;
        if !(lo <= g && g <= hi) {
            bad += 1;
        }
    }
    Ok(bad)
}

/// Violations of `F(s) <= (8/5) alpha^(-3/2) s^(5/2) + s^4 / (2 sqrt 2)`.
pub fn lt_f_violations(samples: usize, seed: u64) -> Result<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = 0;
    for _ in 0..samples {
        let s = log_uniform(&mut rng, 1e-4, 1e3);
        let alpha = log_uniform(&mut rng, 1e-4, 1.0);
        if lt_f(s, alpha)? > lt_f_bound(s, alpha) {
            bad += 1;
        }
    }
    Ok(bad)
}

/// Violations of `K_2(t) <= 16 t^-2 e^(-t/2)` on a 50-point log grid in [0.01, 100].
pub fn k2_bound_violations() -> Result<usize> {
    let mut bad = 0;
    for k in 0..50 {
        let t = 0.01 * 1e4f64.powf(k as f64 / 49.0);
        if bessel_k2(t)? > bessel_k2_bound(t) {
            bad += 1;
        }
    }
    Ok(bad)
}

/// Number of non-decreasing steps of the lowest eigenvalue of
/// `alpha^-1 T - (kappa/alpha)/r` over `kappa` in [0.1, 0.63].
pub fn criticality_nonmonotone_steps() -> Result<usize> {
    let g = make_grid(30.0, 300, GridScheme::Exponential { scale: 0.02 })?;
    let kappas: Vec<f64> = (0..=53).map(|i| 0.1 + 0.01 * i as f64).collect();
    let scan = criticality_scan(g, 1.0, &kappas)?;
    Ok(scan.windows(2).filter(|w| w[1].1 >= w[0].1).count())
}

/// All property suites as asserted report rows.
pub fn run_property_checks(cfg: &ExperimentConfig) -> Result<ScanReport> {
    let mut report = ScanReport::new(cfg);
    let nan = f64::NAN;
    let n = cfg.samples;
    let seed = cfg.seed;
    let mut push = |name: &str, value: f64, bound: f64| {
        report.rows.push(ReportRow::asserted(nan, nan, nan, name, value, bound));
    };
    push("natale_violations", natale_violations(n, seed) as f64, 0.0);
    push("daubechies_sandwich_violations", sandwich_violations(n, seed.wrapping_add(1))? as f64, 0.0);
    push("lt_f_bound_violations", lt_f_violations(n / 10, seed.wrapping_add(2))? as f64, 0.0);
    push("k2_moment_error", (bessel_k2_second_moment()? - 1.5 * PI).abs(), 1e-8);
    push("k2_bound_violations", k2_bound_violations()? as f64, 0.0);

    let gauss = GaussianProfile::new(1.0)?;
    let kato = check_kato(&gauss)?;
    push("kato_lhs_error", (kato.lhs - 2.0 / PI.sqrt()).abs(), 1e-8);
    push("kato_rhs_error", (kato.rhs - PI.sqrt()).abs(), 1e-8);
    let herbst = check_herbst_constant(&gauss, 1.0)?;
    push("herbst_lhs_minus_rhs", herbst.lhs - herbst.rhs, 0.0);
    push("criticality_nonmonotone_steps", criticality_nonmonotone_steps()? as f64, 0.0);

    for (a, b) in [(1.0, 1.0), (1.0, 2.0)] {
        let c = coherent_completeness_check(&GaussianProfile::new(a)?, &GaussianProfile::new(b)?)?;
        push(&format!("coherent_rel_err_{a}_{b}"), c.rel_err, 1e-10);
    }

    let z = 20.0;
    let grid = make_grid(60.0, 400, GridScheme::Exponential { scale: 0.1 / z })?;
    let tf = solve_tf_atom(z, z, cfg.q, grid)?;
    let phi = |r: f64| tf.phi_at(r);
    let weyl = weyl_term(&Potential::Exact(&phi), cfg.q, Window::all())?;
    let kinetic = -2.0 / 3.0 * tf.kinetic_energy();
    push("weyl_identity_rel_err", (weyl / kinetic - 1.0).abs(), 1e-6);
    let budget = PhaseSpaceBudget::evaluate(&Potential::Exact(&phi), cfg.q, 0.5 / z, Window::outside(z.powf(-0.6))?)?;
    push("corr72_over_weyl", budget.corr72 / budget.weyl.abs(), 0.05);
    report.metadata.notes.push(format!("samples = {n}, seed = {seed}"));
    Ok(report)
}
