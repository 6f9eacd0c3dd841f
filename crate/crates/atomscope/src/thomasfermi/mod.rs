//! Thomas-Fermi atoms (neutral and ionic), the outside-Thomas-Fermi problem,
//! Sommerfeld envelopes and TF radii.
//!
//! With `rho = c0 [phi - mu]_+^(3/2)`, `c0 = 2^(3/2) q / (6 pi^2)`, the
//! substitution `phi - mu = (Z/r) y(r/b)`, `b = (4 pi c0)^(-2/3) Z^(-1/3)`,
//! turns the TF equation into `y'' = y^(3/2)/sqrt t`, `y(0) = 1`. Every atomic
//! quantity is then an exact rescaling of one dimensionless profile.

mod otf;
mod profile;
mod sommerfeld;

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::Quadrature;
use crate::radial::{FunctionKind, NewtonPotential, RadialFunction, RadialGrid};

pub use otf::{otf_sandwich_fit, solve_otf, OTFSolution, OtfSummary, SandwichFit};
pub use profile::{
    neutral_profile, shoot_neutral_slope, solve_ionic, solve_tf_dimensionless, zeta, Branch, NeutralProfile,
    Profile, Reference,
};
pub use sommerfeld::{est0ext_bounds, sommerfeld_bounds, SommerfeldEnvelope};

/// `c0 = 2^(3/2) q / (6 pi^2)` in `rho = c0 [phi - mu]_+^(3/2)`.
pub fn density_coefficient(q: u32) -> f64 {
    2f64.powf(1.5) * q as f64 / (6.0 * PI * PI)
}

/// `(1/2)(6 pi^2 / q)^(2/3)`, the TF kinetic coefficient.
pub fn tf_coefficient(q: u32) -> f64 {
    0.5 * (6.0 * PI * PI / q as f64).powf(2.0 / 3.0)
}

/// TF length unit `b = (4 pi c0)^(-2/3) Z^(-1/3)` (0.8853 Z^(-1/3) for q = 2).
pub fn length_scale(z: f64, q: u32) -> f64 {
    (4.0 * PI * density_coefficient(q)).powf(-2.0 / 3.0) * z.powf(-1.0 / 3.0)
}

/// Neutral binding-energy constant `e0` with `E = -e0 Z^(7/3)`.
pub fn e0(q: u32) -> Result<f64> {
    let b = neutral_profile()?.slope;
    Ok(3.0 / 7.0 * b / length_scale(1.0, q))
}

/// A converged TF atom sampled on a grid, with exact access off the grid.
#[derive(Clone, Debug)]
pub struct TFSolution {
    pub z: f64,
    pub n: f64,
    pub q: u32,
    pub grid: Arc<RadialGrid>,
    pub rho: RadialFunction,
    pub phi: RadialFunction,
    /// Chemical potential; `inf` for `N = 0`.
    pub mu: f64,
    /// TF energy (virial form, exact for the whole space).
    pub energy: f64,
    /// `int rho` over the grid box.
    pub total_charge: f64,
    /// Relative TF-equation residual against the Newton-recomputed potential.
    pub residual: f64,
    /// Length unit `b`.
    pub length: f64,
    pub profile: Option<Profile>,
}

/// JSON sidecar of a TF export.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub struct TfSummary {
    #[serde(rename = "Z")]
    pub z: f64,
    #[serde(rename = "N")]
    pub n: f64,
    pub q: u32,
    pub mu: Option<f64>,
    pub energy: f64,
    pub total_charge: f64,
    pub residual: f64,
}

impl TFSolution {
    /// Radius of the support (`inf` for neutral atoms, 0 for N = 0).
    pub fn support_radius(&self) -> f64 {
        match &self.profile {
            None => 0.0,
            Some(p) => self.length * p.t_edge(),
        }
    }

    /// Electrons in the whole space, `min(N, Z)`.
    pub fn electrons(&self) -> f64 {
        self.n.min(self.z)
    }

    /// Mean-field potential `phi(x) = Z/x - (rho * 1/|x|)(x)`.
    pub fn phi_at(&self, x: f64) -> f64 {
        let Some(p) = &self.profile else { return self.z / x };
        if x >= self.support_radius() {
            return (self.z - self.electrons()) / x;
        }
        let (y, _) = p.eval(x / self.length);
        self.z * y / x + self.mu_finite()
    }

    fn mu_finite(&self) -> f64 {
        if self.mu.is_finite() {
            self.mu
        } else {
            0.0
        }
    }

    pub fn rho_at(&self, x: f64) -> f64 {
        let Some(p) = &self.profile else { return 0.0 };
        if x >= self.support_radius() {
            return 0.0;
        }
        let (y, _) = p.eval(x / self.length);
        density_coefficient(self.q) * (self.z * y.max(0.0) / x).powf(1.5)
    }

    /// Charge inside radius `x`, `Z (1 - y + t y')`.
    pub fn charge_within(&self, x: f64) -> f64 {
        let Some(p) = &self.profile else { return 0.0 };
        if x >= self.support_radius() {
            return self.electrons();
        }
        let t = x / self.length;
        let (y, dy) = p.eval(t);
        self.z * (1.0 - y + t * dy)
    }

    /// Charge outside radius `x`.
    pub fn charge_outside(&self, x: f64) -> f64 {
        (self.electrons() - self.charge_within(x)).max(0.0)
    }

    /// Kinetic energy `(3/10)(6 pi^2/q)^(2/3) int rho^(5/3)` over the whole space.
    pub fn kinetic_energy(&self) -> f64 {
        let Some(p) = &self.profile else { return 0.0 };
        // int rho (phi - mu) = K0 (B - int y'^2), K0 = 4 pi c0 Z^(5/2) b^(1/2)
        let k0 = 4.0 * PI * density_coefficient(self.q) * self.z.powf(2.5) * self.length.sqrt();
        let b = p.slope().unwrap_or(0.0);
        0.6 * k0 * (b - p.kinetic_tail(0.0))
    }

    /// `int rho^(5/3)` over the whole space.
    pub fn rho53_integral(&self) -> f64 {
        self.kinetic_energy() / (0.6 * tf_coefficient(self.q))
    }

    /// TF functional `K - Z int rho/|x| + D(rho, rho)` evaluated term by term
    /// by adaptive quadrature in `u = sqrt r` over the whole space; an
    /// independent check of the virial value in [`TFSolution::energy`].
    pub fn energy_by_quadrature(&self) -> Result<f64> {
        if self.profile.is_none() {
            return Ok(0.0);
        }
        let quad = Quadrature::with_tolerance(1e-11, 0.0);
        let edge = self.support_radius();
        let coef = 0.6 * tf_coefficient(self.q);
        let kin_nuc = |u: f64| {
            let r = u * u;
            let rho = self.rho_at(r);
            8.0 * PI * u * r * r * (coef * rho.powf(5.0 / 3.0) - self.z * rho / r)
        };
        let field = |u: f64| {
            let r = u * u;
            let q = self.charge_within(r);
            2.0 * u * q * q / (r * r)
        };
        let (main, coulomb) = if edge.is_finite() {
            let ue = edge.sqrt();
            let n = self.electrons();
            (
                quad.integrate(kin_nuc, 0.0, ue)?.value,
                quad.integrate(field, 0.0, ue)?.value + n * n / edge,
            )
        } else {
            // split at a few TF lengths; the tail decays like r^-4
            let us = (10.0 * self.length).sqrt();
            (
                quad.integrate(kin_nuc, 0.0, us)?.value + quad.integrate_to_infinity(kin_nuc, us)?.value,
                quad.integrate(field, 0.0, us)?.value + quad.integrate_to_infinity(field, us)?.value,
            )
        };
        Ok(main + 0.5 * coulomb)
    }

    pub fn summary(&self) -> TfSummary {
        TfSummary {
            z: self.z,
            n: self.n,
            q: self.q,
            mu: self.mu.is_finite().then_some(self.mu),
            energy: self.energy,
            total_charge: self.total_charge,
            residual: self.residual,
        }
    }

    /// Writes `<stem>.csv` (`r,rho,phi`) and `<stem>.json`.
    pub fn export(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let csv_path = dir.join(format!("{stem}.csv"));
        let mut s = String::from("r,rho,phi\n");
        for ((r, rho), phi) in self.grid.r().iter().zip(self.rho.values()).zip(self.phi.values()) {
            s.push_str(&format!("{r:.16e},{rho:.16e},{phi:.16e}\n"));
        }
        std::fs::write(&csv_path, s).map_err(|e| Error::io(&csv_path, e))?;
        let json_path = dir.join(format!("{stem}.json"));
        let text = serde_json::to_string_pretty(&self.summary())?;
        std::fs::write(&json_path, text).map_err(|e| Error::io(&json_path, e))
    }
}

/// Max over nodes of `|tf rho^(2/3) - [phi_N - mu]_+|`, with `phi_N` the
/// potential recomputed from the sampled density by Newton's theorem (plus
/// the exact contribution of charge outside the box), relative to `max phi`.
fn tf_residual(
    grid: &RadialGrid,
    rho: &RadialFunction,
    phi: &[f64],
    ext: &dyn Fn(f64) -> f64,
    mu: f64,
    outside: f64,
    q: u32,
) -> Result<f64> {
    let np = NewtonPotential::new(rho)?;
    let coef = tf_coefficient(q);
    let mut worst = 0.0f64;
    for ((&r, &v), &d) in grid.r().iter().zip(np.nodal().iter()).zip(rho.values()) {
        let phi_n = ext(r) - v - outside;
        let lhs = coef * d.powf(2.0 / 3.0);
        worst = worst.max((lhs - (phi_n - mu).max(0.0)).abs());
    }
    let scale = phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(if scale > 0.0 { worst / scale } else { worst })
}

/// Solves the TF atom with nuclear charge `Z` and `N` electrons.
///
/// `N >= Z` gives the neutral atom (`mu = 0`, surplus electrons unbound);
/// `0 < N < Z` shoots on the initial slope until the charge deficit matches.
pub fn solve_tf_atom(z: f64, n: f64, q: u32, grid: Arc<RadialGrid>) -> Result<TFSolution> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::param("Z must be positive"));
    }
    if !(n >= 0.0) || !n.is_finite() {
        return Err(Error::param("N must be nonnegative"));
    }
    if q == 0 {
        return Err(Error::param("q must be at least 1"));
    }
    let length = length_scale(z, q);
    let profile = if n == 0.0 {
        None
    } else if n >= z {
        Some(neutral_profile()?.profile.clone())
    } else {
        Some(solve_ionic(1.0 - n / z)?)
    };
    let mu = match &profile {
        None => f64::INFINITY,
        Some(p) if p.t_edge().is_finite() => (z - n) / (length * p.t_edge()),
        Some(_) => 0.0,
    };
    let mut sol = TFSolution {
        z,
        n,
        q,
        grid: grid.clone(),
        rho: RadialFunction::signed_density(grid.clone(), vec![0.0; grid.len()])?,
        phi: RadialFunction::new(grid.clone(), vec![0.0; grid.len()], FunctionKind::Potential)?,
        mu,
        energy: 0.0,
        total_charge: 0.0,
        residual: 0.0,
        length,
        profile,
    };
    if sol.profile.is_some() && sol.support_radius() > grid.r_max() {
        if n < z {
            return Err(Error::param(format!(
                "ion radius {} exceeds the grid (r_max = {})",
                sol.support_radius(),
                grid.r_max()
            )));
        }
    }
    let rho: Vec<f64> = grid.r().iter().map(|&x| sol.rho_at(x)).collect();
    let phi: Vec<f64> = grid.r().iter().map(|&x| sol.phi_at(x)).collect();
    sol.rho = RadialFunction::new(grid.clone(), rho, FunctionKind::Density)?;
    sol.phi = RadialFunction::new(grid.clone(), phi, FunctionKind::Potential)?;
    sol.total_charge = sol.charge_within(grid.r_max());
    sol.energy = -sol.kinetic_energy();
    // potential of the charge beyond the box at interior points
    let rm = grid.r_max();
    let outside = if sol.profile.is_some() {
        let phi_m = sol.phi_at(rm);
        (z / rm - phi_m - sol.charge_within(rm) / rm).max(0.0)
    } else {
        0.0
    };
    let mu_res = if mu.is_finite() { mu } else { 0.0 };
    sol.residual = tf_residual(&grid, &sol.rho, sol.phi.values(), &|r| z / r, mu_res, outside, q)?;
    Ok(sol)
}

/// Radius `R` with `int_{|x|>R} rho = nu`.
pub fn tf_radius(sol: &TFSolution, nu: f64) -> Result<f64> {
    let total = sol.electrons();
    if !(nu > 0.0 && nu < total) {
        return Err(Error::param(format!("nu = {nu} outside (0, {total})")));
    }
    let mut lo = sol.length * 1e-12;
    let mut hi = if sol.support_radius().is_finite() {
        sol.support_radius()
    } else {
        sol.length * 1e12
    };
    for _ in 0..300 {
        let m = (lo * hi).sqrt();
        if sol.charge_outside(m) > nu {
            lo = m;
        } else {
            hi = m;
        }
        if hi / lo - 1.0 < 1e-14 {
            break;
        }
    }
    Ok((lo * hi).sqrt())
}

/// `(int rho^(5/3), 4 (2^(2/3)/pi^2)(5/7) q^(4/3) Z^(7/3), holds)`.
pub fn rho_53_bound_check(sol: &TFSolution) -> (f64, f64, bool) {
    let lhs = sol.rho53_integral();
    let rhs = 4.0 * 2f64.powf(2.0 / 3.0) / (PI * PI) * (5.0 / 7.0) * (sol.q as f64).powf(4.0 / 3.0) * sol.z.powf(7.0 / 3.0);
    (lhs, rhs, lhs <= rhs)
}

/// `R nu^(1/3)` in the large-`Z` limit: `(2 * 3^4 pi^2 / q^2)^(1/3)`.
pub fn radius_constant(q: u32) -> f64 {
    (2.0 * 81.0 * PI * PI / (q * q) as f64).cbrt()
}

/// The constant as printed in the source statement, `3^(4/3) 2^(1/2) pi^(2/3) q^(-2/3)`.
pub fn radius_constant_printed(q: u32) -> f64 {
    3f64.powf(4.0 / 3.0) * 2f64.sqrt() * PI.powf(2.0 / 3.0) * (q as f64).powf(-2.0 / 3.0)
}
