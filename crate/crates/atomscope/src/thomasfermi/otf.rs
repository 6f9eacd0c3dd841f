//! Thomas-Fermi problem outside a ball with a harmonic external potential.
//!
//! Outside the cut radius `r` the source is `V_r(s) = Z_eff / s`. Writing
//! `s (phi - mu) = Z_eff y(s / b)` with the TF length of `Z_eff`, the density
//! vanishes inside the ball, so its potential is constant there and the
//! profile obeys the Robin condition `y(t_r) - t_r y'(t_r) = 1`. With enough
//! electrons (`N_out >= Z_eff`) the solution is the decaying member of the
//! scaling family satisfying that condition and `mu = 0`; otherwise `y`
//! reaches zero at a finite `t0` with `-t0 y'(t0) = 1 - N_out / Z_eff`.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::profile::{shoot_robin, zeta, Branch, Profile, Reference};
use super::{density_coefficient, length_scale, tf_coefficient};
use crate::error::{Error, Result};
use crate::ode::Stop;
use crate::quadrature::Quadrature;
use crate::radial::{FunctionKind, RadialFunction, RadialGrid};

/// Converged OTF state on the grid of the source potential.
#[derive(Clone, Debug)]
pub struct OTFSolution {
    pub r_cut: f64,
    /// `s V_r(s)` for `s >= r`.
    pub z_eff: f64,
    pub n_out: f64,
    pub q: u32,
    pub grid: Arc<RadialGrid>,
    pub rho: RadialFunction,
    pub phi: RadialFunction,
    pub mu: f64,
    /// Electrons placed outside the ball.
    pub total_charge: f64,
    pub residual: f64,
    pub length: f64,
    pub profile: Option<Profile>,
}

impl OTFSolution {
    fn edge(&self) -> f64 {
        self.profile.as_ref().map_or(self.r_cut, |p| self.length * p.t_edge())
    }

    /// `phi_r^OTF(s)` for `s >= r`.
    pub fn phi_at(&self, s: f64) -> f64 {
        match &self.profile {
            None => self.z_eff / s,
            Some(p) => {
                if s >= self.edge() {
                    (self.z_eff - self.total_charge) / s
                } else {
                    let (y, _) = p.eval(s / self.length);
                    self.z_eff * y / s + self.mu
                }
            }
        }
    }

    pub fn rho_at(&self, s: f64) -> f64 {
        let Some(p) = &self.profile else { return 0.0 };
        if s < self.r_cut || s >= self.edge() {
            return 0.0;
        }
        let (y, _) = p.eval(s / self.length);
        density_coefficient(self.q) * (self.z_eff * y.max(0.0) / s).powf(1.5)
    }

    /// OTF charge between `r` and `s`.
    pub fn charge_within(&self, s: f64) -> f64 {
        let Some(p) = &self.profile else { return 0.0 };
        if s <= self.r_cut {
            return 0.0;
        }
        if s >= self.edge() {
            return self.total_charge;
        }
        let t = s / self.length;
        let (y, dy) = p.eval(t);
        self.z_eff * (1.0 - y + t * dy)
    }
}

/// JSON part of the OTF export.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OtfSummary {
    pub r_cut: f64,
    pub z_eff: f64,
    pub n_out: f64,
    pub q: u32,
    pub mu: f64,
    pub total_charge: f64,
    pub residual: f64,
    pub sandwich: SandwichFit,
}

impl OTFSolution {
    pub fn summary(&self) -> OtfSummary {
        OtfSummary {
            r_cut: self.r_cut,
            z_eff: self.z_eff,
            n_out: self.n_out,
            q: self.q,
            mu: self.mu,
            total_charge: self.total_charge,
            residual: self.residual,
            sandwich: otf_sandwich_fit(self),
        }
    }

    /// Writes `<stem>.csv` (`r,rho,phi`, nodes `s >= r`) and `<stem>.json`.
    pub fn export(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let csv_path = dir.join(format!("{stem}.csv"));
        let mut s = String::from("r,rho,phi\n");
        for ((r, rho), phi) in self.grid.r().iter().zip(self.rho.values()).zip(self.phi.values()) {
            if *r >= self.r_cut {
                s.push_str(&format!("{r:.16e},{rho:.16e},{phi:.16e}\n"));
            }
        }
        std::fs::write(&csv_path, s).map_err(|e| Error::io(&csv_path, e))?;
        let json_path = dir.join(format!("{stem}.json"));
        let text = serde_json::to_string_pretty(&self.summary())?;
        std::fs::write(&json_path, text).map_err(|e| Error::io(&json_path, e))
    }
}

/// Fitted constants of the sandwich `K s^-4 (1 + a (r/s)^zeta)^-2 <= phi <= K s^-4 (1 + A (r/s)^zeta)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichFit {
    pub a: f64,
    pub big_a: f64,
    /// Grid points used (inside the support, `phi > 0`).
    pub points: usize,
    /// Both constants finite.
    pub holds: bool,
}

/// Smallest `a` and `A` for which the sandwich holds at every grid node `s > r`.
pub fn otf_sandwich_fit(sol: &OTFSolution) -> SandwichFit {
    let k = 81.0 * PI * PI / (2.0 * (sol.q * sol.q) as f64);
    let z = zeta();
    let (mut a, mut big_a, mut points) = (0.0f64, 0.0f64, 0usize);
    for (&s, &phi) in sol.grid.r().iter().zip(sol.phi.values()) {
        if s <= sol.r_cut || phi <= 0.0 || sol.rho_at(s) <= 0.0 {
            continue;
        }
        let ratio = phi * s.powi(4) / k;
        let w = (s / sol.r_cut).powf(z);
        a = a.max((ratio.powf(-0.5) - 1.0) * w);
        big_a = big_a.max((ratio - 1.0) * w);
        points += 1;
    }
    SandwichFit {
        a,
        big_a,
        points,
        holds: a.is_finite() && big_a.is_finite(),
    }
}

fn solve_family(t_r: f64) -> Result<(f64, &'static Reference)> {
    let target = t_r.powi(3);
    let branch = if target < 576.0 { Branch::Below } else { Branch::Above };
    let reference = Reference::get(branch)?;
    // robin(tau) is monotone on each branch: increasing below, decreasing above
    let (mut lo, mut hi) = (reference.tau_lo(), 1e8);
    let increasing = branch == Branch::Below;
    let f_lo = reference.robin(lo) - target;
    let f_hi = reference.robin(hi) - target;
    if f_lo * f_hi > 0.0 {
        return Err(Error::solver(format!(
            "OTF Robin matching has no root for t_r = {t_r} (values {f_lo}, {f_hi})"
        )));
    }
    for _ in 0..300 {
        let m = (lo * hi).sqrt();
        let f = reference.robin(m) - target;
        if (f < 0.0) == increasing {
            lo = m;
        } else {
            hi = m;
        }
        if hi / lo - 1.0 < 1e-15 {
            break;
        }
    }
    Ok(((lo * hi).sqrt(), reference))
}

/// Solves the OTF problem for source samples `v_r` (harmonic for `s >= r`),
/// cut radius `r` and outer electron budget `n_out`.
pub fn solve_otf(v_r: &RadialFunction, r: f64, n_out: f64, q: u32) -> Result<OTFSolution> {
    if v_r.kind() != FunctionKind::Potential {
        return Err(Error::Kind {
            expected: FunctionKind::Potential.to_string(),
            found: v_r.kind().to_string(),
        });
    }
    let grid = v_r.grid().clone();
    if !(r > 0.0 && r < grid.r_max()) {
        return Err(Error::param(format!("cut radius {r} must lie inside (0, r_max)")));
    }
    if !(n_out >= 0.0) || q == 0 {
        return Err(Error::param("OTF needs N_out >= 0 and q >= 1"));
    }
    let outer: Vec<(f64, f64)> = grid
        .r()
        .iter()
        .zip(v_r.values())
        .filter(|(s, _)| **s >= r)
        .map(|(s, v)| (*s, s * v))
        .collect();
    let z_eff = outer[0].1;
    let spread = outer.iter().fold(0.0f64, |m, (_, c)| m.max((c - z_eff).abs()));
    if spread > 1e-8 * z_eff.abs().max(1.0) {
        return Err(Error::param(format!(
            "V_r is not of the form Z_eff/s outside r (spread {spread:e})"
        )));
    }
    let length = if z_eff > 0.0 { length_scale(z_eff, q) } else { 1.0 };
    let t_r = r / length;

    let (profile, mu, charge) = if z_eff <= 0.0 || n_out == 0.0 {
        (None, (z_eff / r).max(0.0), 0.0)
    } else {
        let (tau, reference) = solve_family(t_r)?;
        let lambda = tau / t_r;
        let family = Profile::Family {
            lambda,
            reference,
            slope: None,
        };
        if n_out >= z_eff {
            (Some(family), 0.0, z_eff)
        } else {
            let a_top = family.eval(t_r).0;
            let deficit = 1.0 - n_out / z_eff;
            let measure = |a: f64| -> Result<(f64, crate::ode::DenseSolution<3>)> {
                let sol = shoot_robin(a, t_r)?;
                let g = if sol.stop == Stop::Event && sol.y_end()[0] <= 0.0 {
                    -sol.y_end()[1]
                } else {
                    0.0
                };
                Ok((g, sol))
            };
            let (mut lo, mut hi) = (0.0, a_top);
            for _ in 0..200 {
                let m = 0.5 * (lo + hi);
                if m <= lo || m >= hi {
                    break;
                }
                if measure(m)?.0 > deficit {
                    lo = m;
                } else {
                    hi = m;
                }
            }
            let (g, sol) = measure(lo)?;
            if (g - deficit).abs() > 1e-7 * deficit.max(1e-3) {
                return Err(Error::solver(format!(
                    "OTF charge shooting stalled: deficit {g} vs {deficit}, bracket [{lo}, {hi}]"
                )));
            }
            let t0 = sol.x_end().exp();
            let mu = (z_eff - n_out) / (length * t0);
            let p = Profile::Forward {
                sol: Arc::new(sol),
                slope: None,
                t_lo: t_r,
                t0,
            };
            (Some(p), mu, n_out)
        }
    };

    let mut sol = OTFSolution {
        r_cut: r,
        z_eff,
        n_out,
        q,
        grid: grid.clone(),
        rho: RadialFunction::signed_density(grid.clone(), vec![0.0; grid.len()])?,
        phi: RadialFunction::new(grid.clone(), vec![0.0; grid.len()], FunctionKind::Potential)?,
        mu,
        total_charge: charge,
        residual: 0.0,
        length,
        profile,
    };
    // inside the ball the density's potential is the constant g(r)
    let g_r = z_eff / r - sol.phi_at(r);
    let rho: Vec<f64> = grid.r().iter().map(|&s| sol.rho_at(s)).collect();
    let phi: Vec<f64> = grid
        .r()
        .iter()
        .zip(v_r.values())
        .map(|(&s, &v)| if s >= r { sol.phi_at(s) } else { v - g_r })
        .collect();
    sol.rho = RadialFunction::new(grid.clone(), rho, FunctionKind::Density)?;
    sol.phi = RadialFunction::new(grid.clone(), phi, FunctionKind::Potential)?;

    // residual against the potential of the exact density, integrated panel by
    // panel between nodes (the density jumps at r_cut, so no grid quadrature)
    let nodes: Vec<f64> = grid.r().iter().copied().filter(|&s| s >= r).collect();
    let edge = sol.edge();
    let quad = Quadrature::with_tolerance(1e-12, 1e-15);
    let panel = |f: &dyn Fn(f64) -> f64, a: f64, b: f64| -> Result<f64> {
        let b = b.min(edge);
        if b <= a {
            return Ok(0.0);
        }
        Ok(quad.integrate(f, a, b)?.value)
    };
    let inner = |t: f64| 4.0 * PI * t * t * sol.rho_at(t);
    let outer = |t: f64| 4.0 * PI * t * sol.rho_at(t);
    let mut charge = vec![0.0; nodes.len()];
    let mut tail = vec![0.0; nodes.len()];
    let mut prev = r;
    let mut acc = 0.0;
    for (k, &s) in nodes.iter().enumerate() {
        acc += panel(&inner, prev, s)?;
        charge[k] = acc;
        prev = s;
    }
    if let Some(&last) = nodes.last() {
        let mut acc = if edge.is_finite() {
            panel(&outer, last, edge)?
        } else {
            quad.integrate_to_infinity(outer, last)?.value
        };
        for k in (0..nodes.len()).rev() {
            if k + 1 < nodes.len() {
                acc += panel(&outer, nodes[k], nodes[k + 1])?;
            }
            tail[k] = acc;
        }
    }
    let coef = tf_coefficient(q);
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    let mut k = 0;
    for ((&s, &v), (&d, &p)) in grid
        .r()
        .iter()
        .zip(v_r.values())
        .zip(sol.rho.values().iter().zip(sol.phi.values()))
    {
        if s < r {
            continue;
        }
        scale = scale.max(p.abs());
        let phi_n = v - charge[k] / s - tail[k];
        k += 1;
        worst = worst.max((coef * d.powf(2.0 / 3.0) - (phi_n - mu).max(0.0)).abs());
    }
    sol.residual = if scale > 0.0 { worst / scale } else { worst };
    Ok(sol)
}
