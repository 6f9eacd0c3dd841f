//! Phase-space integrals of semiclassical analysis: the Weyl term, its
//! relativistic corrections, the Daubechies-Lieb-Yau lower bound, coherent
//! state completeness and the TF/HF energy comparison.
//!
//! Potentials enter as [`Potential`], either sampled on a grid or as an exact
//! function of `r`. All integrals are over a spherical shell [`Window`] with
//! the volume element `4 pi r^2 dr`.

use std::f64::consts::PI;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hartreefock::{scf_solve, HFSolution, HfConfig};
use crate::quadrature::Quadrature;
use crate::radial::{FunctionKind, RadialFunction};
use crate::relkin::RadialProfile;
use crate::thomasfermi::{solve_tf_atom, TFSolution};

/// A radial potential to integrate.
#[derive(Clone, Copy)]
pub enum Potential<'a> {
    /// Grid samples; integrals use the grid's cumulative quadrature.
    Sampled(&'a RadialFunction),
    /// Exact values; integrals use adaptive quadrature.
    Exact(&'a dyn Fn(f64) -> f64),
}

impl std::fmt::Debug for Potential<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Potential::Sampled(_) => f.write_str("Potential::Sampled"),
            Potential::Exact(_) => f.write_str("Potential::Exact"),
        }
    }
}

/// The shell `inner <= |x| < outer`; `outer` may be infinite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub inner: f64,
    pub outer: f64,
}

impl Window {
    pub fn new(inner: f64, outer: f64) -> Result<Self> {
        if !(inner >= 0.0) || !(outer > inner) {
            return Err(Error::param(format!("window [{inner}, {outer}) is empty or negative")));
        }
        Ok(Window { inner, outer })
    }

    pub fn all() -> Self {
        Window {
            inner: 0.0,
            outer: f64::INFINITY,
        }
    }

    pub fn outside(r: f64) -> Result<Self> {
        Window::new(r, f64::INFINITY)
    }
}

fn check_potential(p: &Potential) -> Result<()> {
    if let Potential::Sampled(f) = p {
        if f.kind() != FunctionKind::Potential {
            return Err(Error::Kind {
                expected: FunctionKind::Potential.to_string(),
                found: f.kind().to_string(),
            });
        }
    }
    Ok(())
}

/// Adaptive quadrature of `4 pi r^2 h(r)` over a window, in `u = sqrt r` on
/// decade panels and in `r` beyond the last decade.
fn exact_integral(h: &dyn Fn(f64) -> f64, win: Window) -> Result<f64> {
    let quad = Quadrature::with_tolerance(1e-12, 1e-300);
    let g = |r: f64| 4.0 * PI * r * r * h(r);
    let mut points = vec![win.inner];
    for k in -8..=4 {
        let d = 10f64.powi(k);
        if d > win.inner && d < win.outer {
            points.push(d);
        }
    }
    if win.outer.is_finite() {
        points.push(win.outer);
    }
    let mut total = 0.0;
    for pair in points.windows(2) {
        let (a, b) = (pair[0].sqrt(), pair[1].sqrt());
        total += quad.integrate(|u| 2.0 * u * g(u * u), a, b)?.value;
    }
    if win.outer.is_infinite() {
        total += quad.integrate_to_infinity(g, *points.last().unwrap())?.value;
    }
    if !total.is_finite() {
        return Err(Error::param("phase-space integral diverges"));
    }
    Ok(total)
}

/// `int_window 4 pi r^2 h(V(r)) dr`.
fn window_integral(p: &Potential, win: Window, h: &dyn Fn(f64) -> f64) -> Result<f64> {
    check_potential(p)?;
    match p {
        Potential::Exact(v) => exact_integral(&|r| h(v(r)), win),
        Potential::Sampled(f) => {
            let grid = f.grid();
            let vals: Vec<f64> = grid
                .r()
                .iter()
                .zip(f.values())
                .map(|(r, v)| 4.0 * PI * r * r * h(*v))
                .collect();
            let c = grid.cumulative(&vals);
            let hi = grid.interpolate_cumulative(&c, &vals, win.outer.min(grid.r_max()));
            let lo = grid.interpolate_cumulative(&c, &vals, win.inner);
            Ok(hi - lo)
        }
    }
}

/// Error when `int r^2 [V]_+^power dr` diverges at the origin, detected by
/// `r^3 [V]_+^power` not decreasing towards `r = 0`.
fn check_origin(p: &Potential, win: Window, power: f64) -> Result<()> {
    let m = |r: f64, v: f64| r.powi(3) * v.max(0.0).powf(power);
    let (m0, m1) = match p {
        Potential::Exact(v) => {
            if win.inner > 0.0 {
                return Ok(());
            }
            let (s0, s1) = (1e-12, 1e-10);
            (m(s0, v(s0)), m(s1, v(s1)))
        }
        Potential::Sampled(f) => {
            let r = f.grid().r();
            if win.inner > r[0] || r.len() < 2 {
                return Ok(());
            }
            (m(r[0], f.values()[0]), m(r[1], f.values()[1]))
        }
    };
    if m0 > 0.0 && m0 >= m1 {
        return Err(Error::param(format!(
            "the [V]_+^{power} integral diverges at the origin; exclude a core ball from the window"
        )));
    }
    Ok(())
}

/// `int_window [V]_+^power dx`.
pub fn positive_power_integral(p: &Potential, power: f64, win: Window) -> Result<f64> {
    if power >= 3.0 {
        check_origin(p, win, power)?;
    }
    window_integral(p, win, &|v| v.max(0.0).powf(power))
}

/// `-(2^(3/2) q / (15 pi^2)) int_window [phi]_+^(5/2) dx`.
pub fn weyl_term(phi: &Potential, q: u32, win: Window) -> Result<f64> {
    if q == 0 {
        return Err(Error::param("q must be at least 1"));
    }
    let c = 2f64.powf(1.5) * q as f64 / (15.0 * PI * PI);
    Ok(-c * positive_power_integral(phi, 2.5, win)?)
}

/// Prefactors of `corr72 = c72 alpha^2 int [phi]_+^(7/2)` and
/// `corr92 = c92 alpha^4 int [phi]_+^(9/2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrectionPrefactors {
    pub c72: f64,
    pub c92: f64,
}

impl CorrectionPrefactors {
    /// The momentum shell `2 phi <= p^2 <= 2 phi + alpha^2 phi^2` at phase-space
    /// density `q/(2 pi)^3` carries `(2^(3/2) q / 6 pi^2) phi^(5/2) ((1 + x)^(3/2) - 1)`
    /// with `x = alpha^2 phi / 2`; bounding `(1 + x)^(3/2) - 1 <= 3x/2 + 3x^2/8` gives
    /// `c72 = sqrt2 q / (4 pi^2)` and `c92 = c72 / 8`.
    pub fn for_spin(q: u32) -> Self {
        let c72 = 2f64.sqrt() * q as f64 / (4.0 * PI * PI);
        CorrectionPrefactors { c72, c92: c72 / 8.0 }
    }
}

/// `(corr72, corr92)`, both nonnegative magnitudes of negative energy terms.
pub fn relativistic_corrections(
    phi: &Potential,
    alpha: f64,
    win: Window,
    prefactors: CorrectionPrefactors,
) -> Result<(f64, f64)> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::param("alpha must be nonnegative"));
    }
    if alpha == 0.0 {
        return Ok((0.0, 0.0));
    }
    let a2 = alpha * alpha;
    let i72 = positive_power_integral(phi, 3.5, win)?;
    let i92 = positive_power_integral(phi, 4.5, win)?;
    Ok((prefactors.c72 * a2 * i72, prefactors.c92 * a2 * a2 * i92))
}

/// Weyl term and relativistic corrections over one window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpaceBudget {
    pub q: u32,
    pub alpha: f64,
    pub window: Window,
    pub prefactors: CorrectionPrefactors,
    pub weyl: f64,
    pub corr72: f64,
    pub corr92: f64,
}

impl PhaseSpaceBudget {
    pub fn evaluate(phi: &Potential, q: u32, alpha: f64, window: Window) -> Result<Self> {
        let prefactors = CorrectionPrefactors::for_spin(q);
        let weyl = weyl_term(phi, q, window)?;
        let (corr72, corr92) = relativistic_corrections(phi, alpha, window, prefactors)?;
        Ok(PhaseSpaceBudget {
            q,
            alpha,
            window,
            prefactors,
            weyl,
            corr72,
            corr92,
        })
    }

    /// Weyl term lowered by both corrections.
    pub fn total(&self) -> f64 {
        self.weyl - self.corr72 - self.corr92
    }
}

/// Per-spin default of the Daubechies-Lieb-Yau constant, `C = 0.163 q`.
pub const DLY_CONSTANT_PER_SPIN: f64 = 0.163;

/// Terms of the Daubechies-Lieb-Yau lower bound on `Tr[T(p) - U]_-`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DlyBound {
    pub c: f64,
    /// `-C kappa^(5/2) alpha^(-3/2) R^(1/2)`.
    pub core: f64,
    /// `-C kappa^4 / alpha`.
    pub critical: f64,
    /// `-C int_{|x|>R} (alpha^(-3/2) |U|^(5/2) + |U|^4)`.
    pub outer: f64,
    pub total: f64,
}

/// Evaluates the Daubechies-Lieb-Yau bound for `U` with
/// `0 <= U(x) <= kappa/|x|` on `|x| < max(alpha, R)`.
pub fn dly_bound(u: &Potential, alpha: f64, kappa: f64, r: f64, c: f64) -> Result<DlyBound> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::param("alpha must be positive"));
    }
    if !(0.0..=2.0 / PI).contains(&kappa) {
        return Err(Error::param(format!("kappa = {kappa} outside [0, 2/pi]")));
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::param("R must be positive"));
    }
    if !(c >= 0.0) {
        return Err(Error::param("the constant C must be nonnegative"));
    }
    check_potential(u)?;
    let reach = alpha.max(r);
    let admissible = |x: f64, v: f64| v >= -1e-12 * (1.0 + v.abs()) && v * x <= kappa * (1.0 + 1e-9) + 1e-15;
    let offending = match u {
        Potential::Exact(f) => (0..=400)
            .map(|k| reach * 10f64.powf(-8.0 + 8.0 * k as f64 / 400.0) * (1.0 - 1e-12))
            .find(|&x| !admissible(x, f(x))),
        Potential::Sampled(f) => f
            .grid()
            .r()
            .iter()
            .zip(f.values())
            .find(|(&x, &v)| x < reach && !admissible(x, v))
            .map(|(&x, _)| x),
    };
    if let Some(x) = offending {
        return Err(Error::param(format!(
            "U violates 0 <= U <= kappa/|x| at |x| = {x:e} inside max(alpha, R) = {reach:e}"
        )));
    }
    let core = -c * kappa.powf(2.5) * alpha.powf(-1.5) * r.sqrt();
    let critical = -c * kappa.powi(4) / alpha;
    let a32 = alpha.powf(-1.5);
    let outer = -c * window_integral(u, Window::outside(r)?, &|v| {
        let a = v.abs();
        a32 * a.powf(2.5) + a.powi(4)
    })?;
    Ok(DlyBound {
        c,
        core,
        critical,
        outer,
        total: core + critical + outer,
    })
}

/// Both sides of a coherent-state identity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherentCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub rel_err: f64,
}

impl CoherentCheck {
    fn new(lhs: f64, rhs: f64) -> Self {
        CoherentCheck {
            lhs,
            rhs,
            rel_err: (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE),
        }
    }
}

fn gaussian_widths(f: &dyn RadialProfile, g: &dyn RadialProfile) -> Result<(f64, f64)> {
    match (f.gaussian_width(), g.gaussian_width()) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(Error::Unsupported(
            "coherent-state checks reduce in closed form only for Gaussian profiles".into(),
        )),
    }
}

/// `4 pi int_0^inf x^2 w(x) exp(-x^2 / sigma2) dx`.
fn radial_gaussian_moment(sigma2: f64, w: &dyn Fn(f64) -> f64) -> Result<f64> {
    let quad = Quadrature::with_tolerance(1e-14, 1e-300);
    let top = 12.0 * sigma2.sqrt();
    Ok(4.0 * PI * quad.integrate(|x| x * x * w(x) * (-x * x / sigma2).exp(), 0.0, top)?.value)
}

/// `(2 pi)^-3 int |(f, g^(p,q))|^2 dp` as a function of `|q|`, for normalized
/// Gaussians of widths `a` and `b`: the overlap is a Gaussian in `p` and `q`.
fn phase_space_kernel(a: f64, b: f64) -> Result<(f64, f64)> {
    let (a2, b2) = (a * a, b * b);
    let s2 = a2 * b2 / (a2 + b2);
    let norm2 = (PI * a2).powf(-1.5) * (PI * b2).powf(-1.5);
    let p_integral = radial_gaussian_moment(1.0 / s2, &|_| 1.0)?;
    let prefactor = norm2 * (2.0 * PI * s2).powi(3) * p_integral / (2.0 * PI).powi(3);
    Ok((prefactor, a2 + b2))
}

/// Checks `(f, f) = (2 pi)^-3 int int |(f, g^(p,q))|^2 dp dq` with
/// `g^(p,q)(x) = e^(i p x) g(x - q)`; both profiles must be Gaussian.
pub fn coherent_completeness_check(f: &dyn RadialProfile, g: &dyn RadialProfile) -> Result<CoherentCheck> {
    let (a, b) = gaussian_widths(f, g)?;
    let lhs = f.norm_squared()?;
    let (prefactor, sigma2) = phase_space_kernel(a, b)?;
    let rhs = prefactor * radial_gaussian_moment(sigma2, &|_| 1.0)?;
    Ok(CoherentCheck::new(lhs, rhs))
}

/// Checks `(2 pi)^-3 int int V(q) |(f, g^(p,q))|^2 dp dq = (f, (V * |g|^2) f)`
/// for `V(x) = v0 exp(-|x|^2 / (2 c^2))`. The left side uses the phase-space
/// reduction, the right side a direct radial quadrature of the convolution.
pub fn coherent_potential_check(
    f: &dyn RadialProfile,
    g: &dyn RadialProfile,
    v0: f64,
    c: f64,
) -> Result<CoherentCheck> {
    let (a, b) = gaussian_widths(f, g)?;
    if !(c > 0.0) || !v0.is_finite() {
        return Err(Error::param("the Gaussian potential needs a positive width"));
    }
    let (prefactor, sigma2) = phase_space_kernel(a, b)?;
    let c2 = c * c;
    let lhs = prefactor * radial_gaussian_moment(sigma2, &|x| v0 * (-x * x / (2.0 * c2)).exp())?;

    // (V * h)(x) = (2 pi / x) int r h(r) int_{|x-r|}^{x+r} t V(t) dt dr
    let b2 = b * b;
    let h = |r: f64| (PI * b2).powf(-1.5) * (-r * r / b2).exp();
    let inner = Quadrature::with_tolerance(1e-12, 1e-300);
    let r_top = 12.0 * b;
    let conv = |x: f64| -> Result<f64> {
        let v = inner.integrate(
            |r| {
                let shell = v0 * c2 * (-(x - r).powi(2) / (2.0 * c2)).exp() * -(-2.0 * x * r / c2).exp_m1();
                r * h(r) * shell
            },
            0.0,
            r_top,
        )?;
        Ok(2.0 * PI / x * v.value)
    };
    let outer = Quadrature::with_tolerance(1e-11, 1e-300);
    let mut failure = None;
    let a2 = a * a;
    let rhs = outer.integrate(
        |x| {
            let f2 = (PI * a2).powf(-1.5) * (-x * x / a2).exp();
            match conv(x) {
                Ok(v) => 4.0 * PI * x * x * f2 * v,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            }
        },
        0.0,
        12.0 * a,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(CoherentCheck::new(lhs, rhs.value))
}

/// One comparison of HF and TF ground-state energies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyGapRow {
    #[serde(rename = "Z")]
    pub z: f64,
    #[serde(rename = "N")]
    pub n: f64,
    pub alpha: f64,
    pub q: u32,
    pub e_hf: f64,
    pub e_tf: f64,
    /// `E_HF - E_TF`.
    pub gap: f64,
    pub gap_over_z2: f64,
    pub gap_over_z73: f64,
    /// `E_TF / Z^(7/3)`, which is `-e0` for neutral atoms.
    pub tf_over_z73: f64,
    pub hf_converged: bool,
    pub runtime_s: f64,
}

/// Gap row from already computed solutions.
pub fn energy_gap(hf: &HFSolution, tf: &TFSolution) -> Result<EnergyGapRow> {
    if hf.z != tf.z || hf.n != tf.n || hf.q != tf.q {
        return Err(Error::param("HF and TF solutions describe different atoms"));
    }
    let z = hf.z;
    let gap = hf.energy.total - tf.energy;
    Ok(EnergyGapRow {
        z,
        n: hf.n,
        alpha: hf.alpha,
        q: hf.q,
        e_hf: hf.energy.total,
        e_tf: tf.energy,
        gap,
        gap_over_z2: gap / (z * z),
        gap_over_z73: gap / z.powf(7.0 / 3.0),
        tf_over_z73: tf.energy / z.powf(7.0 / 3.0),
        hf_converged: hf.converged,
        runtime_s: hf.runtime_s,
    })
}

/// Solves both models for `(Z, N)` and compares their energies.
pub fn tf_vs_hf_energy_gap(z: f64, n: f64, alpha: f64, q: u32, config: &HfConfig) -> Result<EnergyGapRow> {
    let start = Instant::now();
    let hf = scf_solve(z, n, alpha, q, config)?;
    let tf = solve_tf_atom(z, n, q, hf.grid.clone())?;
    let mut row = energy_gap(&hf, &tf)?;
    row.runtime_s = start.elapsed().as_secs_f64();
    Ok(row)
}
