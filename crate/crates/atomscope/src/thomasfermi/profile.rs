//! The dimensionless Thomas-Fermi equation `y'' = y^(3/2) / sqrt(t)`.
//!
//! Integration runs in `xi = ln t` on the state `(y, w = t y', S)` where
//! `S' = w^2 / t` accumulates `int y'^2 dt`:
//! `y_xi = w`, `w_xi = w + t^(3/2) y^(3/2)`.
//!
//! Decaying solutions form the one-parameter family `lambda^3 Y(lambda t)`
//! around the exact solution `144 / t^3`; the two branches (`y t^3` below or
//! above 144) are tabulated once by inward integration from `t = 1e8`.

use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::ode::{integrate, DenseSolution, OdeOptions, Stop};

/// `(-7 + sqrt 73) / 2`, the exponent of the leading tail correction.
pub fn zeta() -> f64 {
    (73f64.sqrt() - 7.0) / 2.0
}

const T_FAR: f64 = 1e8;
const TAU_MIN: f64 = 1e-10;
const T_START: f64 = 1e-6;

pub(crate) fn rhs(xi: f64, s: &[f64; 3]) -> [f64; 3] {
    let t = xi.exp();
    let yp = s[0].max(0.0);
    [s[1], s[1] + (t * yp).powf(1.5), s[1] * s[1] / t]
}

fn opts() -> OdeOptions {
    OdeOptions {
        rtol: 1e-13,
        atol: 1e-300,
        max_steps: 400_000,
        initial_step: 1e-3,
    }
}

/// Series of the solution with `y(0) = 1`, `y'(0) = -b` at small `t`:
/// returns `(y, y', int_0^t y'^2)`.
fn series(b: f64, t: f64) -> (f64, f64, f64) {
    let s = t.sqrt();
    let y = 1.0 - b * t + 4.0 / 3.0 * t * s - 0.4 * b * t * t * s + t * t * t / 3.0;
    let dy = -b + 2.0 * s - b * t * s + t * t;
    let sq = b * b * t - 8.0 / 3.0 * b * t * s + 2.0 * t * t;
    (y, dy, sq)
}

/// Which side of `144 / t^3` a decaying solution lies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    /// `y t^3 < 144`; regular at the origin (the neutral atom).
    Below,
    /// `y t^3 > 144`; blows up at a finite `t`.
    Above,
}

/// Tabulated member `Y` of a decaying branch, with `Y ~ 144/t^3 (1 -+ t^-zeta)`.
#[derive(Debug)]
pub struct Reference {
    pub branch: Branch,
    sol: DenseSolution<3>,
    /// Smallest tabulated `tau`.
    tau_lo: f64,
}

impl Reference {
    fn build(branch: Branch) -> Result<Self> {
        let z = zeta();
        let f = if branch == Branch::Below { 1.0 } else { -1.0 };
        let t = T_FAR;
        let y = 144.0 / t.powi(3) * (1.0 - f * t.powf(-z));
        let yp = 144.0 * (-3.0 / t.powi(4) + f * (3.0 + z) * t.powf(-4.0 - z));
        let sol = integrate(rhs, t.ln(), [y, t * yp, 0.0], TAU_MIN.ln(), &opts(), |xi, s| {
            // the upper branch blows up; stop once y t^3 is far above 144
            s[0] * (3.0 * xi).exp() > 1e9
        })?;
        let tau_lo = sol.x_end().exp();
        Ok(Reference { branch, sol, tau_lo })
    }

    /// Branch tabulation, computed on first use.
    pub fn get(branch: Branch) -> Result<&'static Reference> {
        static BELOW: OnceLock<std::result::Result<Reference, String>> = OnceLock::new();
        static ABOVE: OnceLock<std::result::Result<Reference, String>> = OnceLock::new();
        let cell = if branch == Branch::Below { &BELOW } else { &ABOVE };
        cell.get_or_init(|| Reference::build(branch).map_err(|e| e.to_string()))
            .as_ref()
            .map_err(|e| Error::solver(e.clone()))
    }

    pub fn tau_lo(&self) -> f64 {
        self.tau_lo
    }

    /// `(Y(tau), Y'(tau))` for `tau_lo <= tau`; beyond the table the asymptotic form.
    pub fn eval(&self, tau: f64) -> (f64, f64) {
        if tau >= T_FAR {
            let z = zeta();
            let f = if self.branch == Branch::Below { 1.0 } else { -1.0 };
            let y = 144.0 / tau.powi(3) * (1.0 - f * tau.powf(-z));
            let yp = 144.0 * (-3.0 / tau.powi(4) + f * (3.0 + z) * tau.powf(-4.0 - z));
            return (y, yp);
        }
        let s = self.sol.eval(tau.ln());
        (s[0], s[1] / tau)
    }

    /// `int_tau^inf Y'^2`.
    pub fn kinetic_tail(&self, tau: f64) -> f64 {
        if tau >= T_FAR {
            return 0.0;
        }
        -self.sol.eval(tau.ln())[2]
    }

    /// `tau^3 (Y - tau Y')`, the Robin combination used by the OTF matching.
    pub fn robin(&self, tau: f64) -> f64 {
        let (y, yp) = self.eval(tau);
        tau.powi(3) * (y - tau * yp)
    }
}

/// Result of one forward shot from the origin.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Shot {
    /// `y` reached zero (slope too steep).
    Crossed,
    /// `y'` turned positive while `y > 0` (slope too shallow).
    Turned,
    Undecided,
}

fn shoot(b: f64, t_end: f64) -> Result<(Shot, DenseSolution<3>)> {
    let (y, dy, sq) = series(b, T_START);
    let sol = integrate(rhs, T_START.ln(), [y, T_START * dy, sq], t_end.ln(), &opts(), |_, s| {
        s[0] <= 0.0 || s[1] >= 0.0
    })?;
    let shot = match sol.stop {
        Stop::End => Shot::Undecided,
        Stop::Event => {
            if sol.y_end()[0] <= 0.0 {
                Shot::Crossed
            } else {
                Shot::Turned
            }
        }
    };
    Ok((shot, sol))
}

/// Bisection-on-slope shooting for `B = -y'(0)` of the neutral solution.
pub fn shoot_neutral_slope(tol: f64) -> Result<(f64, usize)> {
    if !(tol > 0.0) {
        return Err(Error::param("shooting tolerance must be positive"));
    }
    let (mut lo, mut hi) = (1.5, 1.7);
    for it in 0..10_000 {
        if hi - lo <= tol {
            return Ok((0.5 * (lo + hi), it));
        }
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            return Ok((m, it));
        }
        match shoot(m, 1e4)?.0 {
            Shot::Crossed => hi = m,
            Shot::Turned => lo = m,
            // no decision before the end: the slope is exact to working precision
            Shot::Undecided => return Ok((m, it)),
        }
    }
    Err(Error::solver(format!("slope shooting did not converge: bracket [{lo}, {hi}]")))
}

/// A scaled solution `y(t)` of the dimensionless equation on `[t_lo, t_edge)`.
#[derive(Clone, Debug)]
pub enum Profile {
    /// `y(t) = lambda^3 Y(lambda t)` on a decaying branch; `y(0) = 1` for the atom.
    Family {
        lambda: f64,
        reference: &'static Reference,
        /// `-y'(0)` when the profile reaches the origin.
        slope: Option<f64>,
    },
    /// Forward integration ending at the zero `t0` of `y` (or running to its end).
    Forward {
        sol: Arc<DenseSolution<3>>,
        /// `y(0) = 1`, `y'(0) = -slope` when the profile starts at the origin.
        slope: Option<f64>,
        t_lo: f64,
        t0: f64,
    },
}

impl Profile {
    /// `(y(t), y'(t))`; zero beyond the support edge.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        match self {
            Profile::Family { lambda, reference, slope } => {
                let tau = lambda * t;
                if tau < reference.tau_lo() {
                    if let Some(b) = slope {
                        let (y, dy, _) = series(*b, t);
                        return (y, dy);
                    }
                }
                let (y, yp) = reference.eval(tau.max(reference.tau_lo()));
                (lambda.powi(3) * y, lambda.powi(4) * yp)
            }
            Profile::Forward { sol, slope, t_lo, t0 } => {
                if t >= *t0 {
                    return (0.0, 0.0);
                }
                if t < *t_lo {
                    if let Some(b) = slope {
                        let (y, dy, _) = series(*b, t);
                        return (y, dy);
                    }
                }
                let s = sol.eval(t.max(*t_lo).ln());
                (s[0].max(0.0), s[1] / t)
            }
        }
    }

    /// Right end of the support (`inf` for decaying profiles).
    pub fn t_edge(&self) -> f64 {
        match self {
            Profile::Family { .. } => f64::INFINITY,
            Profile::Forward { t0, .. } => *t0,
        }
    }

    /// `-y'(0)` for profiles starting at the origin.
    pub fn slope(&self) -> Option<f64> {
        match self {
            Profile::Family { slope, .. } | Profile::Forward { slope, .. } => *slope,
        }
    }

    /// `int_t^edge y'^2`.
    pub fn kinetic_tail(&self, t: f64) -> f64 {
        match self {
            Profile::Family { lambda, reference, slope } => {
                let tau = lambda * t;
                let lo = reference.tau_lo();
                let l7 = lambda.powi(7);
                if tau < lo {
                    // the series covers [t, lo/lambda]
                    let b = slope.unwrap_or(0.0);
                    let (_, _, s_hi) = series(b, lo / lambda);
                    let (_, _, s_lo) = series(b, t);
                    s_hi - s_lo + l7 * reference.kinetic_tail(lo)
                } else {
                    l7 * reference.kinetic_tail(tau)
                }
            }
            Profile::Forward { sol, t_lo, t0, slope } => {
                if t >= *t0 {
                    return 0.0;
                }
                let end = sol.y_end()[2];
                if t < *t_lo {
                    let b = slope.unwrap_or(0.0);
                    let (_, _, s_lo) = series(b, t);
                    let (_, _, s_hi) = series(b, *t_lo);
                    end - sol.eval(t_lo.ln())[2] + (s_hi - s_lo)
                } else {
                    end - sol.eval(t.ln())[2]
                }
            }
        }
    }
}

/// The universal neutral-atom profile: `y(0) = 1`, decaying like `144/t^3`.
#[derive(Clone, Debug)]
pub struct NeutralProfile {
    /// `B = -y'(0)` from bisection shooting.
    pub slope_shooting: f64,
    /// `B` from the rescaled inward tabulation.
    pub slope: f64,
    pub shooting_iterations: usize,
    pub profile: Profile,
}

/// Solves `y'' = y^(3/2)/sqrt t`, `y(0) = 1`, `y(inf) = 0`.
///
/// `B` is found by bisection shooting to `tol`; the returned profile is the
/// member of the tabulated decaying branch with `y(0) = 1`, whose initial
/// slope must agree with the shooting value.
pub fn solve_tf_dimensionless(tol: f64) -> Result<NeutralProfile> {
    let (b_shoot, its) = shoot_neutral_slope(tol)?;
    let reference = Reference::get(Branch::Below)?;
    let tau = reference.tau_lo();
    let (y_lo, yp_lo) = reference.eval(tau);
    // Y(0) by removing the linear part; the next term is O(tau^(3/2))
    let y0 = y_lo - tau * yp_lo;
    let lambda = y0.powf(-1.0 / 3.0);
    let t = tau / lambda;
    let slope = -(lambda.powi(4) * yp_lo - 2.0 * t.sqrt());
    let gap = (slope - b_shoot).abs();
    if gap > (100.0 * tol).max(1e-9) {
        return Err(Error::solver(format!(
            "inward profile slope {slope} disagrees with shooting slope {b_shoot}"
        )));
    }
    Ok(NeutralProfile {
        slope_shooting: b_shoot,
        slope,
        shooting_iterations: its,
        profile: Profile::Family {
            lambda,
            reference,
            slope: Some(slope),
        },
    })
}

/// Cached neutral profile at tolerance `1e-12`.
pub fn neutral_profile() -> Result<&'static NeutralProfile> {
    static CELL: OnceLock<std::result::Result<NeutralProfile, String>> = OnceLock::new();
    CELL.get_or_init(|| solve_tf_dimensionless(1e-12).map_err(|e| e.to_string()))
        .as_ref()
        .map_err(|e| Error::solver(e.clone()))
}

/// Ionic profile: `y(0) = 1`, `y(t0) = 0`, `-t0 y'(t0) = deficit` with
/// `deficit = 1 - N/Z` in `(0, 1)`.
pub fn solve_ionic(deficit: f64) -> Result<Profile> {
    if !(deficit > 0.0 && deficit < 1.0) {
        return Err(Error::param(format!("ionic deficit {deficit} outside (0, 1)")));
    }
    let b_neutral = neutral_profile()?.slope;
    let measure = |b: f64| -> Result<(f64, DenseSolution<3>)> {
        let (shot, sol) = shoot(b, 1e6)?;
        Ok(match shot {
            Shot::Crossed => (-sol.y_end()[1], sol),
            _ => (0.0, sol),
        })
    };
    let mut lo = b_neutral;
    let mut hi = b_neutral + 1.0;
    loop {
        let (g, _) = measure(hi)?;
        if g >= deficit {
            break;
        }
        lo = hi;
        hi = b_neutral + 2.0 * (hi - b_neutral);
        if hi > 1e12 {
            return Err(Error::solver(format!("no ionic slope bracket for deficit {deficit}")));
        }
    }
    for _ in 0..400 {
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi || (hi - lo) <= 1e-15 * hi {
            break;
        }
        let (g, _) = measure(m)?;
        if g < deficit {
            lo = m;
        } else {
            hi = m;
        }
    }
    let (g, sol) = measure(hi)?;
    if sol.stop != Stop::Event || (g - deficit).abs() > 1e-8 * deficit.max(1e-3) {
        return Err(Error::solver(format!(
            "ionic shooting stalled: bracket [{lo}, {hi}], deficit {g} vs {deficit}"
        )));
    }
    let t0 = sol.x_end().exp();
    Ok(Profile::Forward {
        sol: Arc::new(sol),
        slope: Some(hi),
        t_lo: T_START,
        t0,
    })
}

/// Forward profile from `t_r` with `y(t_r) = a`, `y(t_r) - t_r y'(t_r) = 1`,
/// stopping where `y` vanishes.
pub(crate) fn shoot_robin(a: f64, t_r: f64) -> Result<DenseSolution<3>> {
    let w0 = a - 1.0;
    integrate(rhs, t_r.ln(), [a, w0, 0.0], (t_r * 1e12).ln(), &opts(), |_, s| s[0] <= 0.0 || s[1] >= 0.0)
}
